//! Uniformity and efficiency measurements: total variation against a
//! surface partition with known patch areas, reference samplers that are
//! uniform by construction, a rejection-sampling baseline, and a
//! line-measure flatness test for ray generators.

use std::f64::consts::PI;
use std::io::Write;

use rand::distr::Distribution;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::field::{ImplicitField, MeshField, TriMesh};
use crate::geometry::{BoundingBox, Vec3};
use crate::rays::Ray;
use crate::sampler::{BATCH, mix_seed};
use crate::tracer::newton_project;

/// Default distance beyond which a sample counts as off-surface: ten times
/// the default hit tolerance.
pub const CLASSIFY_TOLERANCE: f64 = 1e-3;

/// Disjoint surface patches with known areas.
pub trait SurfacePartition: Sync {
    fn areas(&self) -> &[f64];
    /// Patch containing `p`, or `None` if `p` is too far from the surface.
    fn classify(&self, p: &Vec3) -> Option<usize>;

    fn total_area(&self) -> f64 {
        self.areas().iter().sum()
    }
}

/// Regular `(u, v)` grid on a z-axis torus centered at `center`; `u` is the
/// angle around the axis, `v` the angle around the tube, both in `[-π, π)`.
#[derive(Debug, Clone)]
pub struct TorusPartition {
    pub center: Vec3,
    pub major: f64,
    pub minor: f64,
    pub nu: usize,
    pub nv: usize,
    pub tolerance: f64,
    areas: Vec<f64>,
}

/// Toroidal grid partition with exact patch areas: the area element is
/// `r (R + r cos v) du dv`, so patch `(i, j)` has area
/// `r Δu (R Δv + r (sin v₁ − sin v₀))`.
pub fn torus_partition(center: Vec3, major: f64, minor: f64, nu: usize, nv: usize) -> Result<TorusPartition> {
    if !(major > minor && minor > 0.0) || nu == 0 || nv == 0 {
        return Err(Error::InvalidInput("torus partition needs R > r > 0 and a nonempty grid".into()));
    }
    let du = 2.0 * PI / nu as f64;
    let dv = 2.0 * PI / nv as f64;
    let mut areas = Vec::with_capacity(nu * nv);
    for _ in 0..nu {
        for j in 0..nv {
            let v0 = -PI + j as f64 * dv;
            let v1 = v0 + dv;
            areas.push(minor * du * (major * dv + minor * (v1.sin() - v0.sin())));
        }
    }
    Ok(TorusPartition { center, major, minor, nu, nv, tolerance: CLASSIFY_TOLERANCE, areas })
}

impl TorusPartition {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// `(u, v)` angles of a point near the torus.
    pub fn angles(&self, p: &Vec3) -> (f64, f64) {
        let q = p - self.center;
        let rho = q.x.hypot(q.y);
        (q.y.atan2(q.x), q.z.atan2(rho - self.major))
    }
}

fn cell(angle: f64, n: usize) -> usize {
    (((angle + PI) / (2.0 * PI) * n as f64).floor() as usize).min(n - 1)
}

impl SurfacePartition for TorusPartition {
    fn areas(&self) -> &[f64] {
        &self.areas
    }

    fn classify(&self, p: &Vec3) -> Option<usize> {
        let q = p - self.center;
        let d = ((q.x.hypot(q.y) - self.major).hypot(q.z) - self.minor).abs();
        if d > self.tolerance {
            return None;
        }
        let (u, v) = self.angles(p);
        Some(cell(u, self.nu) * self.nv + cell(v, self.nv))
    }
}

/// One patch per triangle; points go to their closest triangle.
pub struct MeshPartition {
    field: MeshField,
    areas: Vec<f64>,
    pub tolerance: f64,
}

/// Triangle partition; degenerate triangles keep area zero.
pub fn mesh_partition(mesh: TriMesh) -> Result<MeshPartition> {
    let areas = (0..mesh.faces.len()).map(|i| mesh.triangle_area(i)).collect();
    Ok(MeshPartition { field: MeshField::new(mesh)?, areas, tolerance: CLASSIFY_TOLERANCE })
}

impl MeshPartition {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        self.field.mesh()
    }
}

impl SurfacePartition for MeshPartition {
    fn areas(&self) -> &[f64] {
        &self.areas
    }

    fn classify(&self, p: &Vec3) -> Option<usize> {
        let (i, d) = self.field.closest_triangle(p);
        (d <= self.tolerance).then_some(i)
    }
}

/// Partition given by explicit areas and a classifier closure.
pub struct FnPartition<F> {
    areas: Vec<f64>,
    classify: F,
}

impl<F: Fn(&Vec3) -> Option<usize> + Sync> FnPartition<F> {
    pub fn new(areas: Vec<f64>, classify: F) -> Self {
        Self { areas, classify }
    }
}

impl<F: Fn(&Vec3) -> Option<usize> + Sync> SurfacePartition for FnPartition<F> {
    fn areas(&self) -> &[f64] {
        &self.areas
    }

    fn classify(&self, p: &Vec3) -> Option<usize> {
        (self.classify)(p)
    }
}

/// The eight octants of a sphere, each of area `πr²/2`.
pub fn sphere_octants(center: Vec3, radius: f64) -> FnPartition<impl Fn(&Vec3) -> Option<usize> + Sync> {
    FnPartition::new(vec![PI * radius * radius / 2.0; 8], move |p: &Vec3| {
        let q = p - center;
        ((q.norm() - radius).abs() <= CLASSIFY_TOLERANCE)
            .then(|| (q.x >= 0.0) as usize | ((q.y >= 0.0) as usize) << 1 | ((q.z >= 0.0) as usize) << 2)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvReport {
    pub tv: f64,
    pub classified: u64,
    /// Samples farther than the partition tolerance from the surface.
    pub unclassified: u64,
}

/// `½ Σ |n_i / N − A_i / A|` over classified samples.
pub fn tv_score(points: &[Vec3], partition: &dyn SurfacePartition) -> Result<TvReport> {
    let labels: Vec<Option<usize>> = points.par_iter().map(|p| partition.classify(p)).collect();
    let areas = partition.areas();
    let mut counts = vec![0u64; areas.len()];
    let mut unclassified = 0;
    for l in labels {
        match l {
            Some(i) => counts[i] += 1,
            None => unclassified += 1,
        }
    }
    let n = points.len() as u64 - unclassified;
    if n == 0 {
        return Err(Error::NoSamples("no sample could be classified"));
    }
    let total = partition.total_area();
    let tv = 0.5 * counts.iter().zip(areas).map(|(&c, a)| (c as f64 / n as f64 - a / total).abs()).sum::<f64>();
    Ok(TvReport { tv, classified: n, unclassified })
}

/// Area-weighted triangle choice followed by a uniform point on the
/// triangle (`√u` barycentric mapping).
pub fn ground_truth_mesh_sampler(mesh: &TriMesh, count: usize, seed: u64) -> Result<Vec<Vec3>> {
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|i| mesh.triangle_area(i)).collect();
    let pick = WeightedIndex::new(&areas).map_err(|_| Error::EmptySurface)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let [a, b, c] = mesh.triangle(pick.sample(&mut rng));
            let s = rng.random::<f64>().sqrt();
            let t = rng.random::<f64>();
            a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t)
        })
        .collect())
}

/// Tube angle with density `∝ R + r cos v` on `[-π, π)`, by inverting
/// `F(v) = (R (v + π) + r sin v) / (2πR)` with safeguarded Newton steps.
pub fn torus_tube_angle(major: f64, minor: f64, u: f64) -> f64 {
    let target = u * 2.0 * PI * major;
    let cdf = |v: f64| major * (v + PI) + minor * v.sin() - target;
    let (mut lo, mut hi) = (-PI, PI);
    let mut v = -PI + 2.0 * PI * u;
    for _ in 0..60 {
        let g = cdf(v);
        if g.abs() < 1e-13 * major {
            break;
        }
        if g > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let next = v - g / (major + minor * v.cos());
        v = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    v
}

/// Exactly uniform points on a z-axis torus by inverse-CDF sampling.
pub fn torus_uniform_sampler(center: Vec3, major: f64, minor: f64, count: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u = -PI + 2.0 * PI * rng.random::<f64>();
            let v = torus_tube_angle(major, minor, rng.random());
            let rho = major + minor * v.cos();
            center + Vec3::new(rho * u.cos(), rho * u.sin(), minor * v.sin())
        })
        .collect()
}

/// Exactly uniform points on a sphere (z uniform, azimuth uniform).
pub fn sphere_uniform_sampler(center: Vec3, radius: f64, count: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            center + radius * Vec3::new(s * phi.cos(), s * phi.sin(), z)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    pub bounds: BoundingBox,
    /// Acceptance band on `|f|`.
    pub delta: f64,
    pub newton_steps: usize,
    /// Proposals allowed before giving up when nothing has been accepted.
    pub retry_budget: u64,
    pub seed: u64,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self { bounds: BoundingBox::default(), delta: 1e-2, newton_steps: 5, retry_budget: 10_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRun {
    pub points: Vec<Vec3>,
    pub proposals: u64,
    pub accepted: u64,
    /// Field evaluations spent on the `proposals` that were used. Work done
    /// past the last needed proposal of a parallel batch is not counted.
    pub evals: u64,
}

/// Uniform points in the box kept when `|f| < δ`, then projected with
/// Newton steps. Proposal `i` uses its own counter-based stream, and the
/// first `count` acceptances in proposal order are returned.
pub fn rejection_baseline(field: &ImplicitField, count: usize, cfg: &RejectionConfig) -> Result<RejectionRun> {
    if !(cfg.delta > 0.0) {
        return Err(Error::InvalidInput(format!("band width must be positive, got {}", cfg.delta)));
    }
    let (lo, ext) = (cfg.bounds.min_corner(), cfg.bounds.extent());
    let seed = mix_seed(cfg.seed, 0x7265_6a65_6374);
    let mut points = Vec::with_capacity(count);
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    let mut evals = 0u64;
    while points.len() < count {
        if accepted == 0 && proposals >= cfg.retry_budget {
            return Err(Error::RetryBudgetExhausted { attempts: proposals });
        }
        let missing = count - points.len();
        let batch = if accepted == 0 {
            BATCH as u64
        } else {
            ((missing as f64 * proposals as f64 / accepted as f64 * 1.1) as u64 + 64).min(BATCH as u64 * 16)
        };
        let found: Vec<(Option<Vec3>, u64)> = (proposals..proposals + batch)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let p = lo + Vec3::new(rng.random(), rng.random(), rng.random()).component_mul(&ext);
                let local = field.fork();
                if local.evaluate(&p)?.abs() >= cfg.delta {
                    return Ok((None, local.evals()));
                }
                match newton_project(&local, &p, cfg.newton_steps) {
                    Ok(x) => Ok((Some(x), local.evals())),
                    Err(Error::Projection { .. }) => Ok((None, local.evals())),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        for (p, cost) in found {
            if points.len() == count {
                break;
            }
            proposals += 1;
            evals += cost;
            if let Some(p) = p {
                accepted += 1;
                points.push(p);
            }
        }
    }
    field.add_evals(evals);
    Ok(RejectionRun { points, proposals, accepted, evals })
}

/// Chi-square test that squared impact distances `d² / ρ²` of lines passing
/// within `ρ` of `center` are uniform on `[0, 1)`, as they are under the
/// invariant line measure. Returns `(statistic, p-value, lines used)`.
pub fn line_flatness(rays: &[Ray], center: &Vec3, rho: f64, bins: usize) -> Result<(f64, f64, u64)> {
    if bins < 2 {
        return Err(Error::InvalidInput("need at least two bins".into()));
    }
    let mut counts = vec![0u64; bins];
    for r in rays {
        let d = (r.origin - center).cross(&r.direction).norm();
        if d < rho {
            counts[((d * d / (rho * rho)) * bins as f64) as usize % bins] += 1;
        }
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::NoSamples("no line passed close enough to the center"));
    }
    let expected = n as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let chi = ChiSquared::new((bins - 1) as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((stat, chi.sf(stat), n))
}

/// Least-squares line `y = slope x + intercept` and its R².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("linear fit needs two or more (x, y) pairs".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    pub shape: String,
    pub n: u64,
    pub tv: f64,
    pub evals: u64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "method,shape,N,TV,evals,seed";

pub fn write_csv(out: &mut impl Write, rows: &[EvalRow], comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.method, r.shape, r.n, r.tv, r.evals, r.seed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldExpr;

    #[test]
    fn tv_hand_cases() {
        let halves = FnPartition::new(vec![1.0, 1.0], |p: &Vec3| Some((p.x > 0.0) as usize));
        let all_left = vec![Vec3::new(-1.0, 0.0, 0.0); 10];
        assert!((tv_score(&all_left, &halves).unwrap().tv - 0.5).abs() < 1e-15);
        let mut even = all_left.clone();
        even.extend(vec![Vec3::new(1.0, 0.0, 0.0); 10]);
        assert_eq!(tv_score(&even, &halves).unwrap().tv, 0.0);
    }

    #[test]
    fn unclassifiable_samples_are_counted() {
        let part = sphere_octants(Vec3::zeros(), 0.5);
        let pts = [Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.9, 0.0, 0.0)];
        let r = tv_score(&pts, &part).unwrap();
        assert_eq!((r.classified, r.unclassified), (1, 1));
        assert!(tv_score(&pts[1..], &part).is_err());
    }

    #[test]
    fn torus_patch_areas_sum_exactly() {
        let t = torus_partition(Vec3::zeros(), 0.5, 0.2, 100, 100).unwrap();
        assert!((t.total_area() - 4.0 * PI * PI * 0.5 * 0.2).abs() < 1e-9);
        assert!(t.areas().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn torus_sampler_is_on_surface_and_matches_cdf() {
        for u in [0.0, 0.1, 0.5, 0.77, 1.0 - 1e-12] {
            let v = torus_tube_angle(0.5, 0.2, u);
            let f = (0.5 * (v + PI) + 0.2 * v.sin()) / (2.0 * PI * 0.5);
            assert!((f - u).abs() < 1e-10, "{u}: {f}");
        }
        let f: ImplicitField = FieldExpr::torus(Vec3::zeros(), 0.5, 0.2).into();
        let pts = torus_uniform_sampler(Vec3::zeros(), 0.5, 0.2, 1000, 1);
        assert!(pts.iter().all(|p| f.evaluate(p).unwrap().abs() < 1e-12));
        let part = torus_partition(Vec3::zeros(), 0.5, 0.2, 4, 4).unwrap();
        let big = torus_uniform_sampler(Vec3::zeros(), 0.5, 0.2, 200_000, 2);
        assert!(tv_score(&big, &part).unwrap().tv < 0.01);
    }

    #[test]
    fn mesh_partition_classifies_triangles() {
        let tri = TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let part = mesh_partition(tri).unwrap();
        assert_eq!(part.areas(), &[0.5]);
        assert_eq!(part.classify(&Vec3::new(0.2, 0.2, 0.0)), Some(0));
        assert_eq!(part.classify(&Vec3::new(0.2, 0.2, 0.5)), None);
    }

    #[test]
    fn ground_truth_sampler_proportions() {
        // areas 1 and 3
        let mesh = TriMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 5.0),
                Vec3::new(2.0, 0.0, 5.0),
                Vec3::new(0.0, 3.0, 5.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let n = 40_000;
        let pts = ground_truth_mesh_sampler(&mesh, n, 5).unwrap();
        let upper = pts.iter().filter(|p| p.z > 2.5).count() as f64;
        let sd = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((upper - 0.75 * n as f64).abs() < 3.0 * sd);
        // barycentric thirds on the first triangle: split by the medians' regions
        let first: Vec<&Vec3> = pts.iter().filter(|p| p.z < 2.5).collect();
        let mut bins = [0f64; 3];
        for p in &first {
            let (b, c) = (p.x / 2.0, p.y);
            let a = 1.0 - b - c;
            let i = if a >= b && a >= c { 0 } else if b >= c { 1 } else { 2 };
            bins[i] += 1.0;
        }
        let e = first.len() as f64 / 3.0;
        let stat: f64 = bins.iter().map(|c| (c - e).powi(2) / e).sum();
        assert!(ChiSquared::new(2.0).unwrap().sf(stat) > 1e-3, "{bins:?}");
    }

    #[test]
    fn rejection_acceptance_and_failure() {
        let f: ImplicitField = FieldExpr::sphere(Vec3::zeros(), 0.5).into();
        let run = rejection_baseline(&f, 2000, &RejectionConfig { seed: 4, ..Default::default() }).unwrap();
        assert_eq!(run.points.len(), 2000);
        let rate = run.accepted as f64 / run.proposals as f64;
        let want = 4.0 * PI * 0.25 * 0.02 / 8.0;
        assert!((rate - want).abs() / want < 0.1, "{rate} vs {want}");
        assert!(run.points.iter().all(|p| f.evaluate(p).unwrap().abs() < 1e-12));
        let empty: ImplicitField = FieldExpr::Constant(1.0).into();
        let cfg = RejectionConfig { retry_budget: 100_000, ..Default::default() };
        assert!(matches!(rejection_baseline(&empty, 10, &cfg), Err(Error::RetryBudgetExhausted { .. })));
    }

    #[test]
    fn fit_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
