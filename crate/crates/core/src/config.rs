//! Run configuration embedded in every artifact, and its hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where the field comes from. File sources are identified by name and
/// content digest so the hash does not depend on the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSource {
    Json { scene: serde_json::Value },
    Mesh { file: String, sha256: String },
    Grid { file: String, sha256: String },
}

/// Everything that determines a run's output. Thread count and output
/// paths are deliberately absent: they must not change results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub scene: SceneSource,
    pub mode: Option<String>,
    pub rays: Option<u64>,
    pub samples: Option<u64>,
    pub seed: u64,
    pub epsilon: f64,
    pub lambda: Option<f64>,
    pub voxel_res: Option<usize>,
    pub lds: bool,
    pub normals: bool,
    pub volume: bool,
    pub weights: Option<String>,
    pub methods: Option<Vec<String>>,
    pub seeds: Option<u64>,
    pub delta: Option<f64>,
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Report envelope written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub config: &'a RunConfig,
    pub result: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(config: &'a RunConfig, result: T) -> Self {
        Self { tool: "raysample", version: VERSION, config_hash: config.hash(), config, result }
    }
}
