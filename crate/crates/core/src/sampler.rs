//! Surface point sets from traced rays.
//!
//! Keeping every intersection of every uniformly distributed ray yields
//! identically distributed uniform surface samples. Alternatives offered
//! here: ray resampling proportional to hit count (duplicates allowed),
//! keeping a single hit per ray (biased, useful as a control), and
//! stratification over a sparse grid of congruent voxels.

use rand::distr::Distribution;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ImplicitField;
use crate::geometry::{BoundingBox, BoundingVolume, Vec3};
use crate::rays::{Ray, RayGenerator, RayStreamConfig};
use crate::tracer::{Termination, TraceConfig, TraceResult, trace_all};

/// Rays traced per parallel batch when streaming.
pub(crate) const BATCH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub point: Vec3,
    /// Unit gradient direction (outward for negative-inside fields).
    pub normal: Option<Vec3>,
    pub ray_id: u64,
    pub hit_index: u32,
    pub voxel_id: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    KeepAll,
    Resample,
    KeepOne,
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRunReport {
    pub mode: SampleMode,
    pub seed: u64,
    /// Rays cast (M).
    pub rays: u64,
    /// Intersections found on those rays (K).
    pub hits: u64,
    pub samples: u64,
    /// Field evaluations, read from the field's counter.
    pub evals: u64,
    /// Evaluations attributed to tracing alone.
    pub trace_evals: u64,
    /// Rays that ran out of step budget.
    pub max_step_rays: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub rays: RayStreamConfig,
    pub trace: TraceConfig,
    /// Attach gradient normals to samples (costs gradient evaluations).
    pub normals: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { rays: RayStreamConfig::default(), trace: TraceConfig::default().without_chords(), normals: false }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rays.seed = seed;
        self
    }
}

pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const KEEP_ONE_SALT: u64 = 0x6b65_6570_6f6e_65;
const RESAMPLE_SALT: u64 = 0x7265_7361_6d70;

fn to_samples(trace: &TraceResult, picks: impl IntoIterator<Item = usize>, voxel: Option<u32>) -> Vec<SurfaceSample> {
    picks
        .into_iter()
        .map(|i| {
            let h = &trace.hits[i];
            SurfaceSample { point: h.point, normal: None, ray_id: trace.ray.id, hit_index: h.index, voxel_id: voxel }
        })
        .collect()
}

/// How much work a streamed run does.
#[derive(Debug, Clone, Copy)]
enum Target {
    Rays(usize),
    Samples(usize),
}

struct Gathered {
    samples: Vec<SurfaceSample>,
    rays: u64,
    hits: u64,
    trace_evals: u64,
    max_step_rays: u64,
}

/// Trace rays in fixed-size parallel batches, applying `pick` to each ray in
/// id order. Batch boundaries depend only on counts, never on timing.
fn gather<P>(field: &ImplicitField, cfg: &SamplerConfig, target: Target, pick: P) -> Result<Gathered>
where
    P: Fn(&TraceResult) -> Vec<usize> + Sync,
{
    cfg.trace.validate()?;
    let generator = RayGenerator::new(cfg.rays);
    let mut stream = generator.stream();
    let mut out = Gathered { samples: Vec::new(), rays: 0, hits: 0, trace_evals: 0, max_step_rays: 0 };
    let mut traced_hits = 0u64;
    let mut traced_rays = 0u64;
    loop {
        let batch = match target {
            Target::Rays(m) => (m - out.rays as usize).min(BATCH),
            Target::Samples(n) => {
                let missing = n - out.samples.len();
                if traced_hits == 0 {
                    (4 * missing + 256).min(BATCH)
                } else {
                    let rate = traced_hits as f64 / traced_rays as f64;
                    ((missing as f64 / rate * 1.1) as usize + 64).min(BATCH)
                }
            }
        };
        let done = match target {
            Target::Rays(m) => out.rays as usize >= m,
            Target::Samples(n) => out.samples.len() >= n,
        };
        if done {
            break;
        }
        if let Target::Samples(_) = target {
            // a surface that nothing hits would loop forever
            if traced_rays >= 1 << 22 && traced_hits == 0 {
                return Err(Error::EmptySurface);
            }
        }
        let rays = stream.take_batch(batch);
        let traced: Vec<(TraceResult, Vec<usize>)> = rays
            .par_iter()
            .map(|r| {
                let t = trace_all(field, r, &cfg.trace)?;
                let p = pick(&t);
                Ok((t, p))
            })
            .collect::<Result<_>>()?;
        for (t, p) in traced {
            traced_rays += 1;
            traced_hits += t.hits.len() as u64;
            out.trace_evals += t.evals;
            if let Target::Samples(n) = target {
                if out.samples.len() >= n {
                    continue;
                }
            }
            out.rays += 1;
            out.hits += t.hits.len() as u64;
            if t.terminated == Termination::MaxSteps {
                out.max_step_rays += 1;
            }
            let mut s = to_samples(&t, p, None);
            if let Target::Samples(n) = target {
                s.truncate(n - out.samples.len());
            }
            out.samples.extend(s);
        }
    }
    Ok(out)
}

fn attach_normals(field: &ImplicitField, samples: &mut [SurfaceSample]) {
    samples.par_iter_mut().for_each(|s| {
        s.normal = field.gradient(&s.point).ok().map(|g| g.normalize());
    });
}

fn finish(
    field: &ImplicitField,
    cfg: &SamplerConfig,
    mode: SampleMode,
    start_evals: u64,
    g: Gathered,
) -> (Vec<SurfaceSample>, SampleRunReport) {
    let mut samples = g.samples;
    if cfg.normals {
        attach_normals(field, &mut samples);
    }
    let report = SampleRunReport {
        mode,
        seed: cfg.rays.seed,
        rays: g.rays,
        hits: g.hits,
        samples: samples.len() as u64,
        evals: field.evals() - start_evals,
        trace_evals: g.trace_evals,
        max_step_rays: g.max_step_rays,
    };
    (samples, report)
}

/// Every intersection of `rays` uniformly distributed rays.
pub fn sample_keep_all(field: &ImplicitField, cfg: &SamplerConfig, rays: usize) -> Result<(Vec<SurfaceSample>, SampleRunReport)> {
    let start = field.evals();
    let g = gather(field, cfg, Target::Rays(rays), |t| (0..t.hits.len()).collect())?;
    Ok(finish(field, cfg, SampleMode::KeepAll, start, g))
}

/// Keep-all sampling continued until exactly `count` samples exist; the
/// last contributing ray may be cut short.
pub fn sample_keep_all_count(field: &ImplicitField, cfg: &SamplerConfig, count: usize) -> Result<(Vec<SurfaceSample>, SampleRunReport)> {
    let start = field.evals();
    let g = gather(field, cfg, Target::Samples(count), |t| (0..t.hits.len()).collect())?;
    Ok(finish(field, cfg, SampleMode::KeepAll, start, g))
}

fn keep_one_picker(seed: u64) -> impl Fn(&TraceResult) -> Vec<usize> + Sync {
    let seed = mix_seed(seed, KEEP_ONE_SALT);
    move |t: &TraceResult| {
        if t.hits.is_empty() {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t.ray.id);
        vec![rng.random_range(0..t.hits.len())]
    }
}

/// One uniformly chosen intersection per hitting ray. Biased whenever the
/// hit count varies between rays.
pub fn sample_keep_one(field: &ImplicitField, cfg: &SamplerConfig, rays: usize) -> Result<(Vec<SurfaceSample>, SampleRunReport)> {
    let start = field.evals();
    let g = gather(field, cfg, Target::Rays(rays), keep_one_picker(cfg.rays.seed))?;
    Ok(finish(field, cfg, SampleMode::KeepOne, start, g))
}

/// Keep-one sampling continued until `count` samples exist.
pub fn sample_keep_one_count(field: &ImplicitField, cfg: &SamplerConfig, count: usize) -> Result<(Vec<SurfaceSample>, SampleRunReport)> {
    let start = field.evals();
    let g = gather(field, cfg, Target::Samples(count), keep_one_picker(cfg.rays.seed))?;
    Ok(finish(field, cfg, SampleMode::KeepOne, start, g))
}

/// Draw `count` ray indices with replacement, proportional to `weights`.
pub fn resample_rays(weights: &[u32], count: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights).map_err(|_| Error::EmptySurface)?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Cast `rays` rays, resample `count` of them proportionally to their hit
/// counts, and keep one uniformly chosen hit of each draw.
pub fn sample_resampled(
    field: &ImplicitField,
    cfg: &SamplerConfig,
    rays: usize,
    count: usize,
) -> Result<(Vec<SurfaceSample>, SampleRunReport)> {
    if rays == 0 || count == 0 {
        return Err(Error::InvalidInput("resampling needs at least one ray and one output sample".into()));
    }
    let start = field.evals();
    let g = gather(field, cfg, Target::Rays(rays), |t| (0..t.hits.len()).collect())?;
    if g.hits == 0 {
        return Err(Error::EmptySurface);
    }
    // group the keep-all pool by ray
    let mut offsets: Vec<usize> = Vec::new();
    let mut weights: Vec<u32> = Vec::new();
    for (i, s) in g.samples.iter().enumerate() {
        if s.hit_index == 0 {
            offsets.push(i);
            weights.push(0);
        }
        *weights.last_mut().unwrap() += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.rays.seed, RESAMPLE_SALT));
    let picks = resample_rays(&weights, count, &mut rng)?;
    let samples: Vec<SurfaceSample> = picks
        .into_iter()
        .map(|r| g.samples[offsets[r] + rng.random_range(0..weights[r] as usize)])
        .collect();
    let g = Gathered { samples, ..g };
    Ok(finish(field, cfg, SampleMode::Resample, start, g))
}

/// Occupancy over a grid of congruent cubic voxels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub bounds: BoundingBox,
    pub resolution: usize,
    occupied: Vec<u64>,
    interior: Vec<u64>,
}

impl VoxelGrid {
    pub fn edge(&self) -> f64 {
        self.bounds.extent().x / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.occupied_count() == 0
    }

    pub fn is_occupied(&self, id: usize) -> bool {
        self.occupied[id / 64] >> (id % 64) & 1 == 1
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_occupied(i))
    }

    /// Unoccupied voxel whose center is inside a signed field, hence the
    /// whole voxel is.
    pub fn is_interior(&self, id: usize) -> bool {
        self.interior[id / 64] >> (id % 64) & 1 == 1
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_interior(i))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupied_count() as f64 / self.len() as f64
    }

    pub fn voxel_bounds(&self, id: usize) -> BoundingBox {
        let r = self.resolution;
        let (i, j, k) = (id % r, (id / r) % r, id / (r * r));
        let e = self.edge();
        let lo = self.bounds.min_corner() + e * Vec3::new(i as f64, j as f64, k as f64);
        BoundingBox { min: [lo.x, lo.y, lo.z], max: [lo.x + e, lo.y + e, lo.z + e] }
    }
}

/// Mark voxels whose center value admits the surface within the voxel:
/// `|f(center)| <= λ · (√3 / 2) · edge`.
pub fn build_voxels(field: &ImplicitField, bounds: &BoundingBox, resolution: usize) -> Result<VoxelGrid> {
    if resolution == 0 {
        return Err(Error::InvalidInput("voxel resolution must be at least 1".into()));
    }
    if !bounds.is_cube() {
        return Err(Error::InvalidInput("stratification needs a cubic bounding box".into()));
    }
    let words = resolution.pow(3).div_ceil(64);
    let mut grid = VoxelGrid { bounds: *bounds, resolution, occupied: vec![0; words], interior: vec![0; words] };
    let reach = field.lipschitz() * 0.5 * 3f64.sqrt() * grid.edge();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|id| field.evaluate(&grid.voxel_bounds(id).center()))
        .collect::<Result<_>>()?;
    for (id, f) in values.into_iter().enumerate() {
        if f.abs() <= reach {
            grid.occupied[id / 64] |= 1 << (id % 64);
        } else if f < 0.0 && field.is_signed() {
            grid.interior[id / 64] |= 1 << (id % 64);
        }
    }
    Ok(grid)
}

/// Rays of one occupied voxel, traced.
#[derive(Debug, Clone)]
pub struct StratumTrace {
    pub voxel_id: u32,
    pub volume: BoundingVolume,
    pub traces: Vec<TraceResult>,
}

/// Trace `rays_per_voxel` rays inside every occupied voxel and hand each
/// voxel's results to `visit` in voxel order. Each voxel draws its rays
/// from its own stream derived from the seed and voxel id. Voxel segments
/// are traced half-open so a crossing on a shared face is counted once.
pub fn trace_strata(
    field: &ImplicitField,
    rays: &RayStreamConfig,
    trace: &TraceConfig,
    grid: &VoxelGrid,
    rays_per_voxel: usize,
    mut visit: impl FnMut(StratumTrace) -> Result<()>,
) -> Result<()> {
    trace.validate()?;
    let trace = &TraceConfig { half_open: true, ..*trace };
    let voxels: Vec<usize> = grid.occupied().collect();
    let per_batch = (BATCH / rays_per_voxel.max(1)).max(1);
    for chunk in voxels.chunks(per_batch) {
        let streams: Vec<(usize, BoundingVolume, Vec<Ray>)> = chunk
            .par_iter()
            .map(|&v| {
                let volume = BoundingVolume::Box(grid.voxel_bounds(v));
                let cfg = RayStreamConfig { mode: rays.mode, seed: mix_seed(rays.seed, v as u64 + 1), volume };
                (v, volume, RayGenerator::new(cfg).stream().take_batch(rays_per_voxel))
            })
            .collect();
        let flat: Vec<(usize, &Ray)> =
            streams.iter().enumerate().flat_map(|(s, (_, _, rs))| rs.iter().map(move |r| (s, r))).collect();
        let traced: Vec<TraceResult> =
            flat.par_iter().map(|(_, r)| trace_all(field, r, trace)).collect::<Result<_>>()?;
        let mut traced = traced.into_iter();
        for (v, volume, rs) in streams {
            let traces: Vec<TraceResult> = traced.by_ref().take(rs.len()).collect();
            visit(StratumTrace { voxel_id: v as u32, volume, traces })?;
        }
    }
    Ok(())
}

/// Per-voxel ray and hit tallies of a stratified run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumStats {
    pub voxel_id: u32,
    pub side: f64,
    pub rays: u64,
    pub hits: u64,
}

#[derive(Debug, Clone)]
pub struct StratifiedRun {
    pub samples: Vec<SurfaceSample>,
    pub report: SampleRunReport,
    pub strata: Vec<StratumStats>,
}

impl StratifiedRun {
    /// Σ_v 3 s_v² K_v / M_v: the area estimate assembled from the strata.
    pub fn area(&self) -> f64 {
        self.strata.iter().map(|s| 3.0 * s.side * s.side * s.hits as f64 / s.rays as f64).sum()
    }
}

/// Keep-all sampling run independently inside each occupied voxel with the
/// same ray count everywhere. Congruent voxels have equal line measure, so
/// the union of the hits stays uniform over the surface.
pub fn sample_stratified(
    field: &ImplicitField,
    cfg: &SamplerConfig,
    grid: &VoxelGrid,
    rays_per_voxel: usize,
) -> Result<StratifiedRun> {
    if rays_per_voxel == 0 {
        return Err(Error::InvalidInput("rays_per_voxel must be at least 1".into()));
    }
    let start = field.evals();
    let mut g = Gathered { samples: Vec::new(), rays: 0, hits: 0, trace_evals: 0, max_step_rays: 0 };
    let mut strata = Vec::new();
    trace_strata(field, &cfg.rays, &cfg.trace, grid, rays_per_voxel, |st| {
        let mut hits = 0;
        for t in &st.traces {
            hits += t.hits.len() as u64;
            g.trace_evals += t.evals;
            g.max_step_rays += (t.terminated == Termination::MaxSteps) as u64;
            g.samples.extend(to_samples(t, 0..t.hits.len(), Some(st.voxel_id)));
        }
        g.rays += st.traces.len() as u64;
        g.hits += hits;
        strata.push(StratumStats {
            voxel_id: st.voxel_id,
            side: st.volume.aabb().extent().x,
            rays: st.traces.len() as u64,
            hits,
        });
        Ok(())
    })?;
    let (samples, report) = finish(field, cfg, SampleMode::Stratified, start, g);
    Ok(StratifiedRun { samples, report, strata })
}
