//! Downstream uses of a white-noise sample set: blue-noise subsampling by
//! weighted sample elimination, and importance resampling (for example by
//! mean curvature).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::SeedableRng;
use rand::distr::Distribution;
use rand::distr::weighted::WeightedIndex;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ImplicitField;
use crate::geometry::Vec3;
use crate::sampler::SurfaceSample;

/// Stencil step for curvature estimates.
pub const CURVATURE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub sample: SurfaceSample,
    pub weight: f64,
}

/// Largest useful disk radius for `count` points on a surface of `area`
/// (hexagonal packing density).
pub fn max_poisson_radius(area: f64, count: usize) -> f64 {
    (area / (2.0 * 3f64.sqrt() * count as f64)).sqrt()
}

#[derive(PartialEq)]
struct Entry {
    weight: f64,
    index: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.total_cmp(&other.weight).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy weighted sample elimination down to `target` points. Each point
/// is weighted by `Σ (1 − min(d, 2r)/(2r))⁸` over neighbors within `2r`,
/// with `r = max_poisson_radius(area, target)`; the heaviest point is
/// removed until `target` remain. Survivors keep their input order.
pub fn blue_noise_subsample(samples: &[SurfaceSample], target: usize, area: f64) -> Result<Vec<SurfaceSample>> {
    if target > samples.len() {
        return Err(Error::TargetTooLarge { requested: target, available: samples.len() });
    }
    if target == samples.len() {
        return Ok(samples.to_vec());
    }
    if target == 0 {
        return Ok(Vec::new());
    }
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::InvalidInput(format!("surface area must be positive, got {area}")));
    }
    let reach = 2.0 * max_poisson_radius(area, target);
    let points: Vec<[f64; 3]> = samples.iter().map(|s| [s.point.x, s.point.y, s.point.z]).collect();
    let tree: ImmutableKdTree<f64, 3> =
        ImmutableKdTree::new_from_slice(&points).map_err(|e| Error::InvalidInput(format!("{e:?}")))?;
    let weight = |d2: f64| (1.0 - d2.sqrt().min(reach) / reach).powi(8);
    let neighbors: Vec<Vec<(u32, f64)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut n: Vec<(u32, f64)> = tree
                .query(p)
                .within::<SquaredEuclidean<f64>>(reach * reach)
                .unsorted()
                .execute()
                .into_iter()
                .filter(|r| r.item as usize != i)
                .map(|r| (r.item, weight(r.distance)))
                .collect();
            n.sort_unstable_by_key(|&(j, _)| j);
            n
        })
        .collect();
    let mut weights: Vec<f64> = neighbors.iter().map(|n| n.iter().map(|&(_, w)| w).sum()).collect();
    let mut heap: BinaryHeap<Entry> =
        weights.iter().enumerate().map(|(i, &w)| Entry { weight: w, index: i as u32 }).collect();
    let mut alive = vec![true; samples.len()];
    let mut remaining = samples.len();
    while remaining > target {
        let Some(Entry { weight: w, index }) = heap.pop() else { break };
        let i = index as usize;
        if !alive[i] || w != weights[i] {
            continue;
        }
        alive[i] = false;
        remaining -= 1;
        for &(j, wij) in &neighbors[i] {
            let j = j as usize;
            if alive[j] {
                weights[j] -= wij;
                heap.push(Entry { weight: weights[j], index: j as u32 });
            }
        }
    }
    Ok(samples.iter().zip(alive).filter(|(_, a)| *a).map(|(s, _)| *s).collect())
}

/// Draw `count` samples with replacement, proportionally to `weights`.
pub fn importance_resample(
    samples: &[SurfaceSample],
    weights: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<SurfaceSample>> {
    if samples.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} samples",
            weights.len(),
            samples.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be finite and nonnegative, got {w}")));
    }
    if samples.is_empty() {
        return Err(Error::NoSamples("importance resampling needs input samples"));
    }
    let dist = WeightedIndex::new(weights).map_err(|_| Error::ZeroWeights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| samples[dist.sample(&mut rng)]).collect())
}

/// Mean curvature as half the field Laplacian (six-point stencil). For a
/// negative-inside distance field, convex regions are positive.
pub fn mean_curvature(field: &ImplicitField, p: &Vec3) -> Result<f64> {
    field.gradient(p)?;
    let h = CURVATURE_STEP;
    let center = field.evaluate(p)?;
    let mut sum = -6.0 * center;
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = h;
        sum += field.evaluate(&(p + e))? + field.evaluate(&(p - e))?;
    }
    Ok(sum / (h * h) / 2.0)
}

/// Where per-sample importance weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Constant,
    /// `|H|` at each sample.
    Curvature,
    Values(Vec<f64>),
}

pub fn sample_weights(field: &ImplicitField, samples: &[SurfaceSample], source: &WeightSource) -> Result<Vec<f64>> {
    match source {
        WeightSource::Constant => Ok(vec![1.0; samples.len()]),
        WeightSource::Curvature => {
            samples.par_iter().map(|s| mean_curvature(field, &s.point).map(f64::abs)).collect()
        }
        WeightSource::Values(v) => {
            if v.len() != samples.len() {
                return Err(Error::InvalidInput(format!("{} weights for {} samples", v.len(), samples.len())));
            }
            Ok(v.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldExpr;
    use crate::sampler::{SamplerConfig, sample_keep_all};
    use std::f64::consts::PI;

    fn at(p: Vec3) -> SurfaceSample {
        SurfaceSample { point: p, normal: None, ray_id: 0, hit_index: 0, voxel_id: None }
    }

    fn min_distance(s: &[SurfaceSample]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                best = best.min((s[i].point - s[j].point).norm());
            }
        }
        best
    }

    #[test]
    fn elimination_edge_cases() {
        let pts: Vec<SurfaceSample> = (0..10).map(|i| at(Vec3::new(i as f64, 0.0, 0.0))).collect();
        assert_eq!(blue_noise_subsample(&pts, 10, 1.0).unwrap(), pts);
        assert_eq!(blue_noise_subsample(&pts, 1, 1.0).unwrap().len(), 1);
        assert!(matches!(blue_noise_subsample(&pts, 11, 1.0), Err(Error::TargetTooLarge { .. })));
    }

    #[test]
    fn elimination_spreads_points() {
        let f: ImplicitField = FieldExpr::sphere(Vec3::zeros(), 0.5).into();
        let (s, _) = sample_keep_all(&f, &SamplerConfig::default(), 20_000).unwrap();
        let target = s.len() / 10;
        let blue = blue_noise_subsample(&s, target, PI).unwrap();
        assert_eq!(blue.len(), target);
        assert!(blue.iter().all(|b| s.contains(b)));
        let random: Vec<SurfaceSample> = s.iter().step_by(10).take(target).copied().collect();
        assert!(min_distance(&blue) >= 3.0 * min_distance(&random), "{} vs {}", min_distance(&blue), min_distance(&random));
        assert_eq!(blue, blue_noise_subsample(&s, target, PI).unwrap());
    }

    #[test]
    fn resampling_respects_support_and_frequencies() {
        let pts: Vec<SurfaceSample> = (0..10).map(|i| at(Vec3::new(i as f64, 0.0, 0.0))).collect();
        let w: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.0 } else { i as f64 }).collect();
        let n = 100_000;
        let out = importance_resample(&pts, &w, n, 3).unwrap();
        let total: f64 = w.iter().sum();
        for (i, wi) in w.iter().enumerate() {
            let c = out.iter().filter(|s| s.point.x == i as f64).count() as f64;
            let p = wi / total;
            assert!((c - n as f64 * p).abs() <= 3.0 * (n as f64 * p * (1.0 - p)).sqrt() + 1e-9, "{i}: {c}");
        }
        assert!(matches!(importance_resample(&pts, &[0.0; 10], 5, 0), Err(Error::ZeroWeights)));
        assert!(importance_resample(&pts, &[-1.0; 10], 5, 0).is_err());
    }

    #[test]
    fn curvature_oracles() {
        let sphere: ImplicitField = FieldExpr::sphere(Vec3::zeros(), 0.5).into();
        assert!((mean_curvature(&sphere, &Vec3::new(0.0, 0.5, 0.0)).unwrap() - 2.0).abs() < 1e-2);
        let plane: ImplicitField = FieldExpr::plane(Vec3::new(0.3, 0.4, 1.0), 0.1).into();
        let p = Vec3::new(0.2, -0.1, 0.0);
        assert!(mean_curvature(&plane, &p).unwrap().abs() < 1e-6);
        // top of the tube, v = π/2
        let (big, small) = (0.5, 0.2);
        let torus: ImplicitField = FieldExpr::torus(Vec3::zeros(), big, small).into();
        let want = (big + 2.0 * small * (PI / 2.0).cos()) / (2.0 * small * (big + small * (PI / 2.0).cos()));
        let got = mean_curvature(&torus, &Vec3::new(big, 0.0, small)).unwrap();
        assert!((got - want).abs() / want < 0.05, "{got} vs {want}");
        assert!(mean_curvature(&sphere, &Vec3::zeros()).is_err());
    }
}
