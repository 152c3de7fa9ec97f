//! The `raysample` command line. The binary only forwards to [`run`].
//!
//! Exit codes: 0 success, 1 other failure, 2 bad arguments, 3 scene load
//! failure, 4 empty surface, 5 volume requested for an unsigned field.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Report, RunConfig, SceneSource, VERSION, file_digest};
use crate::error::Error;
use crate::eval::{
    EvalRow, RejectionConfig, SurfacePartition, ground_truth_mesh_sampler, mesh_partition, rejection_baseline,
    sphere_octants, sphere_uniform_sampler, torus_partition, torus_uniform_sampler, tv_score, write_csv,
};
use crate::field::{FieldExpr, GridField, ImplicitField, MeshField, TriMesh};
use crate::geometry::{BoundingBox, BoundingVolume, Vec3};
use crate::io::{read_weights, save_json, save_points};
use crate::moments::{estimate_moments, estimate_moments_stratified};
use crate::postprocess::{WeightSource, blue_noise_subsample, importance_resample, sample_weights};
use crate::rays::{RayMode, RayStreamConfig};
use crate::sampler::{
    SampleRunReport, SamplerConfig, SurfaceSample, build_voxels, mix_seed, sample_keep_all, sample_keep_all_count,
    sample_keep_one, sample_keep_one_count, sample_resampled, sample_stratified,
};
use crate::scene::SceneNode;
use crate::tracer::TraceConfig;

#[derive(Debug, Parser)]
#[command(name = "raysample", version, about = "Uniform surface samples and moments of implicit fields from random lines")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores); never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write surface samples and a run report.
    Sample(SampleArgs),
    /// Estimate area, volume and centroids.
    Moments(MomentsArgs),
    /// Subsample white-noise samples to a blue-noise set.
    Bluenoise(BlueNoiseArgs),
    /// Resample surface samples proportionally to a weight.
    ResampleImportance(ImportanceArgs),
    /// Compare samplers by total variation and evaluation count.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SceneArgs {
    /// JSON scene expression.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Triangle mesh (.obj or .ply).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// ISGF sampled grid.
    #[arg(long)]
    grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hit tolerance on |f|.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Override the field's Lipschitz bound.
    #[arg(long)]
    lambda: Option<f64>,
    /// Scrambled Halton rays instead of pseudo-random ones.
    #[arg(long)]
    lds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    KeepAll,
    Resample,
    KeepOne,
    Stratified,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    trace: TraceArgs,
    /// Rays to cast.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rays: Option<u64>,
    /// Samples to produce.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::KeepAll)]
    mode: Mode,
    /// Voxels per axis in stratified mode.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    voxel_res: u64,
    /// Attach gradient normals (always on for PLY output).
    #[arg(long)]
    normals: bool,
    /// Point file; `.ply` is binary PLY, anything else XYZ.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// JSON report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    trace: TraceArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rays: u64,
    /// Stratify over this many voxels per axis; `--rays` is the total.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    voxel_res: Option<u64>,
    /// Require volume and solid centroid (fails on unsigned fields).
    #[arg(long)]
    volume: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BlueNoiseArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    trace: TraceArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rays: u64,
    /// Points to keep.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImportanceArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    trace: TraceArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rays: u64,
    /// Output size; defaults to the number of white-noise samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// `constant`, `curvature`, or `file:<path>` with one weight per sample.
    #[arg(long, default_value = "curvature")]
    weights: String,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Ours,
    Rejection,
    GroundTruth,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    trace: TraceArgs,
    #[arg(long, default_value_t = 50_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ours,rejection,ground-truth")]
    methods: Vec<Method>,
    /// Runs per method, with seeds `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Band width of the rejection baseline.
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    /// Grid cells per angle for torus scenes.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    partition_res: u64,
    /// CSV path; printed to stdout when absent.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    SceneLoad(Error),
    Empty,
    Unsigned(String),
    Other(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::SceneLoad(_) => 3,
            Failure::Empty => 4,
            Failure::Unsigned(_) => 5,
            Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::SceneLoad(e) => write!(f, "cannot load scene: {e}"),
            Failure::Empty => write!(f, "the surface is empty inside the bounding box"),
            Failure::Unsigned(m) => write!(f, "{m}"),
            Failure::Other(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptySurface => Failure::Empty,
            Error::UnsignedField(m) => Failure::Unsigned(m.to_string()),
            Error::InvalidInput(m) => Failure::Usage(m),
            Error::TargetTooLarge { requested, available } => {
                Failure::Usage(format!("asked for {requested} samples but only {available} exist"))
            }
            other => Failure::Other(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Loaded {
    field: ImplicitField,
    source: SceneSource,
    expr: FieldExpr,
    mesh: Option<Arc<MeshField>>,
    name: String,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_file(p: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(p).map_err(|e| Failure::SceneLoad(Error::io(p, e)))
}

fn load(scene: &SceneArgs, trace: &TraceArgs) -> CliResult<Loaded> {
    let mut loaded = if let Some(path) = &scene.scene {
        let bytes = read_file(path)?;
        let value: serde_json::Value =
            serde_json::from_slice(&bytes).map_err(|e| Failure::SceneLoad(Error::parse(path, e.to_string())))?;
        let node: SceneNode = serde_json::from_value(value.clone())
            .map_err(|e| Failure::SceneLoad(Error::parse(path, e.to_string())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let expr = node.build(&base).map_err(Failure::SceneLoad)?;
        let name = match &node {
            SceneNode::Sphere { .. } => "sphere".to_string(),
            SceneNode::Torus { .. } => "torus".to_string(),
            _ => file_name(path),
        };
        Loaded { field: expr.clone().into(), source: SceneSource::Json { scene: value }, expr, mesh: None, name }
    } else if let Some(path) = &scene.mesh {
        let digest = file_digest(&read_file(path)?);
        let mesh = TriMesh::load(path).and_then(MeshField::new).map_err(Failure::SceneLoad)?;
        let mesh = Arc::new(mesh);
        Loaded {
            field: ImplicitField::from_arc(mesh.clone()),
            source: SceneSource::Mesh { file: file_name(path), sha256: digest },
            expr: FieldExpr::Mesh(mesh.clone()),
            mesh: Some(mesh),
            name: file_name(path),
        }
    } else {
        let path = scene.grid.as_ref().expect("clap enforces one scene source");
        let digest = file_digest(&read_file(path)?);
        let grid = Arc::new(GridField::load(path).map_err(Failure::SceneLoad)?);
        Loaded {
            field: ImplicitField::from_arc(grid.clone()),
            source: SceneSource::Grid { file: file_name(path), sha256: digest },
            expr: FieldExpr::Grid(grid),
            mesh: None,
            name: file_name(path),
        }
    };
    if let Some(l) = trace.lambda {
        loaded.field = loaded.field.with_lipschitz(l)?;
    }
    Ok(loaded)
}

fn ray_config(trace: &TraceArgs) -> RayStreamConfig {
    let mode = if trace.lds { RayMode::LowDiscrepancy } else { RayMode::Uniform };
    RayStreamConfig::new(mode, trace.seed, BoundingVolume::default())
}

fn trace_config(trace: &TraceArgs, chords: bool) -> CliResult<TraceConfig> {
    let cfg = TraceConfig { epsilon: trace.epsilon, chords, ..Default::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn base_config(command: &str, source: SceneSource, trace: &TraceArgs) -> RunConfig {
    RunConfig {
        command: command.into(),
        scene: source,
        mode: None,
        rays: None,
        samples: None,
        seed: trace.seed,
        epsilon: trace.epsilon,
        lambda: trace.lambda,
        voxel_res: None,
        lds: trace.lds,
        normals: false,
        volume: false,
        weights: None,
        methods: None,
        seeds: None,
        delta: None,
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn comments(cfg: &RunConfig) -> Vec<String> {
    vec![format!("raysample {VERSION}"), format!("config_hash {}", cfg.hash()), format!("seed {}", cfg.seed)]
}

fn emit_report<T: Serialize>(path: Option<&PathBuf>, cfg: &RunConfig, result: T) -> CliResult<()> {
    let report = Report::new(cfg, result);
    match path {
        Some(p) => save_json(p, &report)?,
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Other(Error::InvalidInput(e.to_string())))?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn write_points(out: Option<&PathBuf>, samples: &[SurfaceSample], cfg: &RunConfig) -> CliResult<()> {
    if let Some(p) = out {
        save_points(p, samples, &comments(cfg))?;
        eprintln!("raysample: wrote {} points to {}", samples.len(), p.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct SampleResult {
    #[serde(flatten)]
    run: SampleRunReport,
    occupied_voxels: Option<usize>,
    rays_per_voxel: Option<u64>,
}

fn cmd_sample(a: &SampleArgs) -> CliResult<()> {
    let wants_ply = a.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")));
    match (a.mode, a.rays, a.samples) {
        (Mode::Resample, _, None) => return Err(Failure::Usage("resample mode requires --samples".into())),
        (Mode::Stratified, None, _) | (Mode::Stratified, _, Some(_)) => {
            return Err(Failure::Usage("stratified mode takes --rays only".into()));
        }
        (Mode::KeepAll | Mode::KeepOne, Some(_), Some(_)) | (Mode::KeepAll | Mode::KeepOne, None, None) => {
            return Err(Failure::Usage("give exactly one of --rays and --samples".into()));
        }
        _ => {}
    }
    let l = load(&a.scene, &a.trace)?;
    let normals = a.normals || wants_ply;
    let sampler = SamplerConfig { rays: ray_config(&a.trace), trace: trace_config(&a.trace, false)?, normals };
    let mut cfg = base_config("sample", l.source.clone(), &a.trace);
    cfg.mode = Some(value_name(&a.mode));
    cfg.normals = normals;
    let (mut occupied, mut per_voxel) = (None, None);
    let (samples, run) = match a.mode {
        Mode::KeepAll => match (a.rays, a.samples) {
            (Some(m), _) => sample_keep_all(&l.field, &sampler, m as usize)?,
            (_, Some(n)) => sample_keep_all_count(&l.field, &sampler, n as usize)?,
            _ => unreachable!(),
        },
        Mode::KeepOne => match (a.rays, a.samples) {
            (Some(m), _) => sample_keep_one(&l.field, &sampler, m as usize)?,
            (_, Some(n)) => sample_keep_one_count(&l.field, &sampler, n as usize)?,
            _ => unreachable!(),
        },
        Mode::Resample => {
            let n = a.samples.unwrap();
            let m = a.rays.unwrap_or(4 * n);
            sample_resampled(&l.field, &sampler, m as usize, n as usize)?
        }
        Mode::Stratified => {
            let grid = build_voxels(&l.field, &BoundingBox::default(), a.voxel_res as usize)?;
            let count = grid.occupied_count();
            if count == 0 {
                return Err(Failure::Empty);
            }
            let rpv = (a.rays.unwrap() / count as u64).max(1);
            eprintln!("raysample: {count} occupied voxels, {rpv} rays each");
            occupied = Some(count);
            per_voxel = Some(rpv);
            cfg.voxel_res = Some(a.voxel_res as usize);
            let run = sample_stratified(&l.field, &sampler, &grid, rpv as usize)?;
            (run.samples, run.report)
        }
    };
    cfg.rays = a.rays;
    cfg.samples = a.samples;
    eprintln!("raysample: {} rays, {} hits, {} samples, {} evaluations", run.rays, run.hits, run.samples, run.evals);
    if samples.is_empty() {
        return Err(Failure::Empty);
    }
    write_points(a.out.as_ref(), &samples, &cfg)?;
    emit_report(a.report.as_ref(), &cfg, SampleResult { run, occupied_voxels: occupied, rays_per_voxel: per_voxel })
}

fn cmd_moments(a: &MomentsArgs) -> CliResult<()> {
    let l = load(&a.scene, &a.trace)?;
    if a.volume && !l.field.is_signed() {
        return Err(Failure::Unsigned("volume needs a signed field; this scene is unsigned".into()));
    }
    let rays = ray_config(&a.trace);
    let trace = trace_config(&a.trace, true)?;
    let report = match a.voxel_res {
        Some(res) => {
            let grid = build_voxels(&l.field, &BoundingBox::default(), res as usize)?;
            let count = grid.occupied_count().max(1) as u64;
            estimate_moments_stratified(&l.field, &rays, &trace, &grid, (a.rays / count).max(1) as usize)?
        }
        None => estimate_moments(&l.field, &rays, &trace, a.rays as usize)?,
    };
    eprintln!("raysample: area {:.6} ± {:.6}", report.area.value, report.area.stderr);
    let mut cfg = base_config("moments", l.source, &a.trace);
    cfg.rays = Some(a.rays);
    cfg.voxel_res = a.voxel_res.map(|r| r as usize);
    cfg.volume = a.volume;
    emit_report(a.report.as_ref(), &cfg, report)
}

#[derive(Serialize)]
struct SubsampleResult {
    white_noise: SampleRunReport,
    area_estimate: f64,
    output_samples: u64,
}

fn cmd_bluenoise(a: &BlueNoiseArgs) -> CliResult<()> {
    let l = load(&a.scene, &a.trace)?;
    let sampler = SamplerConfig { rays: ray_config(&a.trace), trace: trace_config(&a.trace, false)?, normals: false };
    let (white, run) = sample_keep_all(&l.field, &sampler, a.rays as usize)?;
    if white.is_empty() {
        return Err(Failure::Empty);
    }
    let area = 2.0 * sampler.rays.volume.mean_projected_area() * run.hits as f64 / run.rays as f64;
    let blue = blue_noise_subsample(&white, a.samples as usize, area)?;
    eprintln!("raysample: kept {} of {} samples", blue.len(), white.len());
    let mut cfg = base_config("bluenoise", l.source, &a.trace);
    cfg.rays = Some(a.rays);
    cfg.samples = Some(a.samples);
    write_points(a.out.as_ref(), &blue, &cfg)?;
    emit_report(
        a.report.as_ref(),
        &cfg,
        SubsampleResult { white_noise: run, area_estimate: area, output_samples: blue.len() as u64 },
    )
}

fn parse_weights(spec: &str) -> CliResult<WeightSource> {
    match spec {
        "constant" => Ok(WeightSource::Constant),
        "curvature" => Ok(WeightSource::Curvature),
        s => match s.strip_prefix("file:") {
            Some(p) => Ok(WeightSource::Values(read_weights(p)?)),
            None => Err(Failure::Usage(format!("unknown weight source {s:?}; use constant, curvature or file:<path>"))),
        },
    }
}

fn cmd_importance(a: &ImportanceArgs) -> CliResult<()> {
    let source = parse_weights(&a.weights)?;
    let l = load(&a.scene, &a.trace)?;
    let sampler = SamplerConfig { rays: ray_config(&a.trace), trace: trace_config(&a.trace, false)?, normals: false };
    let (white, run) = sample_keep_all(&l.field, &sampler, a.rays as usize)?;
    if white.is_empty() {
        return Err(Failure::Empty);
    }
    let weights = sample_weights(&l.field, &white, &source)?;
    let n = a.samples.map_or(white.len(), |n| n as usize);
    let out = importance_resample(&white, &weights, n, mix_seed(a.trace.seed, 0x696d70))?;
    eprintln!("raysample: drew {} of {} samples by {} weight", out.len(), white.len(), a.weights);
    let mut cfg = base_config("resample-importance", l.source, &a.trace);
    cfg.rays = Some(a.rays);
    cfg.samples = a.samples;
    cfg.weights = Some(a.weights.clone());
    write_points(a.out.as_ref(), &out, &cfg)?;
    let area = 2.0 * sampler.rays.volume.mean_projected_area() * run.hits as f64 / run.rays as f64;
    emit_report(
        a.report.as_ref(),
        &cfg,
        SubsampleResult { white_noise: run, area_estimate: area, output_samples: out.len() as u64 },
    )
}

enum Reference {
    Mesh(Arc<MeshField>),
    Sphere(Vec3, f64),
    Torus(Vec3, f64, f64),
}

#[derive(Serialize)]
struct EvalResult {
    rows: Vec<EvalRow>,
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let l = load(&a.scene, &a.trace)?;
    let reference = match (&l.mesh, &l.expr) {
        (Some(m), _) => Reference::Mesh(m.clone()),
        (None, FieldExpr::Sphere { center, radius }) => Reference::Sphere(*center, *radius),
        (None, FieldExpr::Torus { center, major, minor }) => Reference::Torus(*center, *major, *minor),
        _ => return Err(Failure::Usage("eval needs --mesh or a scene that is a single sphere or torus".into())),
    };
    let partition: Box<dyn SurfacePartition> = match &reference {
        Reference::Mesh(m) => Box::new(mesh_partition(m.mesh().clone())?),
        Reference::Sphere(c, r) => Box::new(sphere_octants(*c, *r)),
        Reference::Torus(c, big, small) => {
            let n = a.partition_res as usize;
            Box::new(torus_partition(*c, *big, *small, n, n)?)
        }
    };
    let n = a.samples as usize;
    let trace = trace_config(&a.trace, false)?;
    let mut rows = Vec::new();
    for seed in a.trace.seed..a.trace.seed + a.seeds {
        for &method in &a.methods {
            let field = l.field.fork();
            let (points, evals): (Vec<Vec3>, u64) = match method {
                Method::Ours => {
                    let rays = RayStreamConfig { seed, ..ray_config(&a.trace) };
                    let (s, r) = sample_keep_all_count(&field, &SamplerConfig { rays, trace, normals: false }, n)?;
                    (s.into_iter().map(|s| s.point).collect(), r.evals)
                }
                Method::Rejection => {
                    let cfg = RejectionConfig { delta: a.delta, seed, ..Default::default() };
                    let r = rejection_baseline(&field, n, &cfg)?;
                    (r.points, r.evals)
                }
                Method::GroundTruth => {
                    let pts = match &reference {
                        Reference::Mesh(m) => ground_truth_mesh_sampler(m.mesh(), n, seed)?,
                        Reference::Sphere(c, r) => sphere_uniform_sampler(*c, *r, n, seed),
                        Reference::Torus(c, big, small) => torus_uniform_sampler(*c, *big, *small, n, seed),
                    };
                    (pts, 0)
                }
            };
            let tv = tv_score(&points, partition.as_ref())?;
            if tv.unclassified > 0 {
                eprintln!("raysample: {method:?} seed {seed}: {} samples off the surface", tv.unclassified);
            }
            let name = value_name(&method);
            eprintln!("raysample: {name} seed {seed}: TV {:.5}, {evals} evaluations", tv.tv);
            rows.push(EvalRow { method: name, shape: l.name.clone(), n: n as u64, tv: tv.tv, evals, seed });
        }
    }
    let mut cfg = base_config("eval", l.source, &a.trace);
    cfg.samples = Some(a.samples);
    cfg.seeds = Some(a.seeds);
    cfg.delta = Some(a.delta);
    cfg.methods = Some(a.methods.iter().map(value_name).collect());
    let comment = format!("raysample {VERSION} config_hash {}", cfg.hash());
    match &a.out {
        Some(p) => {
            let mut f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
            write_csv(&mut f, &rows, Some(&comment)).map_err(|e| Error::io(p, e))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, &rows, Some(&comment)).and_then(|_| lock.flush()).map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    if let Some(p) = &a.report {
        save_json(p, &Report::new(&cfg, EvalResult { rows }))?;
    }
    Ok(())
}

fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Bluenoise(a) => cmd_bluenoise(a),
        Command::ResampleImportance(a) => cmd_importance(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("raysample: --threads must be at least 1");
            return 2;
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("raysample: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("raysample: error: {f}");
            f.code()
        }
    }
}
