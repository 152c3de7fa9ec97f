use std::path::PathBuf;

use crate::geometry::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("field evaluated to a non-finite value at ({}, {}, {})", .point.x, .point.y, .point.z)]
    FieldEvaluation { point: Vec3 },

    #[error("gradient vanishes at ({}, {}, {})", .point.x, .point.y, .point.z)]
    DegenerateGradient { point: Vec3 },

    #[error("newton projection stalled on a degenerate gradient; last iterate ({}, {}, {})", .last.x, .last.y, .last.z)]
    Projection { last: Vec3 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("the level set does not intersect any traced ray")]
    EmptySurface,

    #[error("{0} requires a signed field")]
    UnsignedField(&'static str),

    #[error("{0} needs at least one sample")]
    NoSamples(&'static str),

    #[error("all resampling weights are zero")]
    ZeroWeights,

    #[error("rejection sampling accepted nothing after {attempts} proposals")]
    RetryBudgetExhausted { attempts: u64 },

    #[error("requested {requested} points from a set of {available}")]
    TargetTooLarge { requested: usize, available: usize },

    #[error("invalid scene: {0}")]
    Scene(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
