//! Area, volume and centroid estimates from random-line statistics.
//!
//! With `P` the mean projected area of the proposal volume, `M` rays,
//! `K` hits and per-ray inside length `σ`:
//!
//! * area ≈ 2 P K / M
//! * volume ≈ P Σσ / M
//! * shell centroid ≈ mean hit position
//! * solid centroid ≈ Σ σ_ij (a_ij + b_ij) / 2 / Σ σ_ij
//!
//! For the cube `[-1, 1]³`, `P = 6`. Every sum is compensated so results do
//! not depend on how rays were batched.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ImplicitField;
use crate::geometry::{BoundingVolume, KahanSum, Vec3};
use crate::rays::{RayGenerator, RayStreamConfig};
use crate::sampler::{BATCH, SurfaceSample, VoxelGrid, trace_strata};
use crate::tracer::{TraceConfig, TraceResult, trace_all};

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums3([KahanSum; 3]);

impl Sums3 {
    fn add(&mut self, v: &Vec3) {
        for a in 0..3 {
            self.0[a].add(v[a]);
        }
    }

    fn value(&self) -> Vec3 {
        Vec3::new(self.0[0].value(), self.0[1].value(), self.0[2].value())
    }
}

/// Ratio `ΣX / Σw` over rays, with per-ray cross sums for a delta-method
/// standard error.
#[derive(Debug, Clone, Copy, Default)]
struct RatioSums {
    x: Sums3,
    xx: Sums3,
    xw: Sums3,
    w: KahanSum,
    ww: KahanSum,
}

impl RatioSums {
    fn add(&mut self, x: &Vec3, w: f64) {
        self.x.add(x);
        self.xx.add(&x.component_mul(x));
        self.xw.add(&(x * w));
        self.w.add(w);
        self.ww.add(w * w);
    }

    /// Ratio and, per axis, Σ_i (X_i − c w_i)² (the residual sum of squares).
    fn ratio(&self) -> Option<(Vec3, Vec3)> {
        let w = self.w.value();
        if w <= 0.0 {
            return None;
        }
        let c = self.x.value() / w;
        let (xx, xw, ww) = (self.xx.value(), self.xw.value(), self.ww.value());
        let rss = Vec3::from_fn(|a, _| (xx[a] - 2.0 * c[a] * xw[a] + c[a] * c[a] * ww).max(0.0));
        Some((c, rss))
    }

    fn estimates(&self, rays: f64) -> Option<[Estimate; 3]> {
        let (c, rss) = self.ratio()?;
        let mean_w = self.w.value() / rays;
        Some(std::array::from_fn(|a| Estimate {
            value: c[a],
            stderr: (rss[a] / (rays * (rays - 1.0).max(1.0))).sqrt() / mean_w,
        }))
    }
}

/// Streaming accumulator of per-ray statistics for one proposal volume.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    volume: BoundingVolume,
    rays: u64,
    hits: u64,
    hitting_rays: u64,
    evals: u64,
    k: KahanSum,
    kk: KahanSum,
    sigma: KahanSum,
    sigma2: KahanSum,
    hit_sigma: KahanSum,
    signed: bool,
    shell: RatioSums,
    solid: RatioSums,
}

impl MomentAccumulator {
    pub fn new(volume: BoundingVolume) -> Self {
        Self {
            volume,
            rays: 0,
            hits: 0,
            hitting_rays: 0,
            evals: 0,
            k: KahanSum::default(),
            kk: KahanSum::default(),
            sigma: KahanSum::default(),
            sigma2: KahanSum::default(),
            hit_sigma: KahanSum::default(),
            signed: true,
            shell: RatioSums::default(),
            solid: RatioSums::default(),
        }
    }

    pub fn add(&mut self, t: &TraceResult) {
        let k = t.hits.len() as f64;
        self.rays += 1;
        self.hits += t.hits.len() as u64;
        self.evals += t.evals;
        self.k.add(k);
        self.kk.add(k * k);
        let mut hit_sum = Vec3::zeros();
        for h in &t.hits {
            hit_sum += h.point;
        }
        self.shell.add(&hit_sum, k);
        match &t.chords {
            Some(chords) => {
                let mut sigma = 0.0;
                let mut mid = Vec3::zeros();
                for &(a, b) in chords {
                    sigma += b - a;
                    mid += (b - a) * t.ray.at(0.5 * (a + b));
                }
                self.sigma.add(sigma);
                self.sigma2.add(sigma * sigma);
                self.solid.add(&mid, sigma);
                if !t.hits.is_empty() {
                    self.hit_sigma.add(sigma);
                }
            }
            None => self.signed = false,
        }
        if !t.hits.is_empty() {
            self.hitting_rays += 1;
        }
    }

    pub fn rays(&self) -> u64 {
        self.rays
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    fn mean_and_stderr(&self, sum: f64, sum_sq: f64) -> (f64, f64) {
        let m = self.rays as f64;
        let mean = sum / m;
        let var = if self.rays > 1 { ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / m).sqrt())
    }

    pub fn area(&self) -> Result<Estimate> {
        if self.rays == 0 {
            return Err(Error::NoSamples("area estimate needs at least one ray"));
        }
        let scale = 2.0 * self.volume.mean_projected_area();
        let (mean, se) = self.mean_and_stderr(self.k.value(), self.kk.value());
        Ok(Estimate { value: scale * mean, stderr: scale * se })
    }

    pub fn volume(&self) -> Result<Estimate> {
        if self.rays == 0 {
            return Err(Error::NoSamples("volume estimate needs at least one ray"));
        }
        if !self.signed {
            return Err(Error::UnsignedField("volume needs inside chords from a signed field"));
        }
        let scale = self.volume.mean_projected_area();
        let (mean, se) = self.mean_and_stderr(self.sigma.value(), self.sigma2.value());
        Ok(Estimate { value: scale * mean, stderr: scale * se })
    }

    pub fn shell_centroid(&self) -> Result<[Estimate; 3]> {
        self.shell.estimates(self.rays as f64).ok_or(Error::EmptySurface)
    }

    pub fn solid_centroid(&self) -> Result<[Estimate; 3]> {
        if !self.signed {
            return Err(Error::UnsignedField("solid centroid needs inside chords from a signed field"));
        }
        self.solid.estimates(self.rays as f64).ok_or(Error::EmptySurface)
    }

    /// Mean inside length over rays that hit the surface.
    pub fn mean_chord(&self) -> Option<f64> {
        (self.signed && self.hitting_rays > 0).then(|| self.hit_sigma.value() / self.hitting_rays as f64)
    }

    pub fn report(&self) -> Result<EstimatorReport> {
        let signed = self.signed && self.rays > 0;
        Ok(EstimatorReport {
            area: self.area()?,
            volume: if signed { Some(self.volume()?) } else { None },
            shell_centroid: self.shell_centroid().ok(),
            solid_centroid: if signed { self.solid_centroid().ok() } else { None },
            mean_chord: self.mean_chord(),
            rays: self.rays,
            hits: self.hits,
            hitting_rays: self.hitting_rays,
            evals: self.evals,
            strata: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub area: Estimate,
    pub volume: Option<Estimate>,
    pub shell_centroid: Option<[Estimate; 3]>,
    pub solid_centroid: Option<[Estimate; 3]>,
    pub mean_chord: Option<f64>,
    pub rays: u64,
    pub hits: u64,
    pub hitting_rays: u64,
    /// Field evaluations spent tracing.
    pub evals: u64,
    /// Occupied voxels, for stratified runs.
    pub strata: Option<u64>,
}

impl EstimatorReport {
    pub fn shell_centroid_point(&self) -> Option<Vec3> {
        self.shell_centroid.map(|c| Vec3::new(c[0].value, c[1].value, c[2].value))
    }

    pub fn solid_centroid_point(&self) -> Option<Vec3> {
        self.solid_centroid.map(|c| Vec3::new(c[0].value, c[1].value, c[2].value))
    }
}

fn accumulate(results: &[TraceResult], volume: &BoundingVolume) -> MomentAccumulator {
    let mut acc = MomentAccumulator::new(*volume);
    for t in results {
        acc.add(t);
    }
    acc
}

/// Surface area from traced rays proposed in `volume`.
pub fn estimate_area(results: &[TraceResult], volume: &BoundingVolume) -> Result<Estimate> {
    accumulate(results, volume).area()
}

/// Enclosed volume; needs chords, so the field must be signed.
pub fn estimate_volume(results: &[TraceResult], volume: &BoundingVolume) -> Result<Estimate> {
    accumulate(results, volume).volume()
}

/// Mean position of surface samples.
pub fn estimate_shell_centroid(samples: &[SurfaceSample]) -> Result<Vec3> {
    if samples.is_empty() {
        return Err(Error::EmptySurface);
    }
    let mut s = Sums3::default();
    for p in samples {
        s.add(&p.point);
    }
    Ok(s.value() / samples.len() as f64)
}

/// Chord-length weighted mean of chord midpoints.
pub fn estimate_solid_centroid(results: &[TraceResult]) -> Result<Vec3> {
    let acc = accumulate(results, &BoundingVolume::default());
    let c = acc.solid_centroid()?;
    Ok(Vec3::new(c[0].value, c[1].value, c[2].value))
}

/// Trace `rays` rays in batches and estimate every moment the field allows.
pub fn estimate_moments(
    field: &ImplicitField,
    rays: &RayStreamConfig,
    trace: &TraceConfig,
    count: usize,
) -> Result<EstimatorReport> {
    trace.validate()?;
    let generator = RayGenerator::new(*rays);
    let mut stream = generator.stream();
    let mut acc = MomentAccumulator::new(rays.volume);
    let mut left = count;
    while left > 0 {
        let batch = stream.take_batch(left.min(BATCH));
        left -= batch.len();
        let traced: Vec<TraceResult> = batch.par_iter().map(|r| trace_all(field, r, trace)).collect::<Result<_>>()?;
        for t in &traced {
            acc.add(t);
        }
    }
    acc.report()
}

/// Moments from independent ray sets inside each occupied voxel. Area and
/// volume add up over voxels, with interior voxels contributing their exact
/// volume; centroids pool the voxel-weighted sums.
pub fn estimate_moments_stratified(
    field: &ImplicitField,
    rays: &RayStreamConfig,
    trace: &TraceConfig,
    grid: &VoxelGrid,
    rays_per_voxel: usize,
) -> Result<EstimatorReport> {
    if rays_per_voxel == 0 {
        return Err(Error::InvalidInput("rays_per_voxel must be at least 1".into()));
    }
    let mut area = (KahanSum::default(), KahanSum::default());
    let mut volume = (KahanSum::default(), KahanSum::default());
    let (mut shell, mut solid) = (Sums3::default(), Sums3::default());
    let (mut shell_w, mut solid_w) = (KahanSum::default(), KahanSum::default());
    let (mut total_rays, mut hits, mut hitting, mut evals, mut strata) = (0, 0, 0, 0, 0u64);
    let mut hit_sigma = KahanSum::default();
    let mut signed = true;
    trace_strata(field, rays, trace, grid, rays_per_voxel, |st| {
        let acc = accumulate(&st.traces, &st.volume);
        let a = acc.area()?;
        area.0.add(a.value);
        area.1.add(a.stderr * a.stderr);
        // per-voxel weights turn ray sums into area and volume units
        let w = st.volume.mean_projected_area() / acc.rays as f64;
        shell.add(&(acc.shell.x.value() * 2.0 * w));
        shell_w.add(acc.shell.w.value() * 2.0 * w);
        if acc.signed {
            let v = acc.volume()?;
            volume.0.add(v.value);
            volume.1.add(v.stderr * v.stderr);
            solid.add(&(acc.solid.x.value() * w));
            solid_w.add(acc.solid.w.value() * w);
            hit_sigma.add(acc.hit_sigma.value());
        } else {
            signed = false;
        }
        total_rays += acc.rays;
        hits += acc.hits;
        hitting += acc.hitting_rays;
        evals += acc.evals;
        strata += 1;
        Ok(())
    })?;
    if total_rays == 0 {
        return Err(Error::EmptySurface);
    }
    if signed {
        let cell = grid.edge().powi(3);
        for id in grid.interior() {
            volume.0.add(cell);
            solid.add(&(grid.voxel_bounds(id).center() * cell));
            solid_w.add(cell);
        }
    }
    let point = |s: &Sums3, w: &KahanSum| {
        (w.value() > 0.0).then(|| {
            let c = s.value() / w.value();
            std::array::from_fn(|a| Estimate { value: c[a], stderr: f64::NAN })
        })
    };
    Ok(EstimatorReport {
        area: Estimate { value: area.0.value(), stderr: area.1.value().sqrt() },
        volume: signed.then(|| Estimate { value: volume.0.value(), stderr: volume.1.value().sqrt() }),
        shell_centroid: point(&shell, &shell_w),
        solid_centroid: if signed { point(&solid, &solid_w) } else { None },
        mean_chord: (signed && hitting > 0).then(|| hit_sigma.value() / hitting as f64),
        rays: total_rays,
        hits,
        hitting_rays: hitting,
        evals,
        strata: Some(strata),
    })
}
