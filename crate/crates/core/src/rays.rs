//! Random lines with uniform density in line space, restricted to the lines
//! that cross a bounding volume.
//!
//! A direction is drawn uniformly on the sphere; the line's foot point is
//! drawn uniformly on a square in the plane orthogonal to that direction
//! through the volume's center, and proposals that miss the volume are
//! rejected. Every proposal is a pure function of `(mode, seed, index)`, so
//! streams can be generated in parallel and reproduced exactly.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingVolume, Vec3};

/// An oriented line `origin + t * direction`, clipped to `(t_entry, t_exit)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_entry: f64,
    pub t_exit: f64,
    pub id: u64,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + t * self.direction
    }

    pub fn length(&self) -> f64 {
        self.t_exit - self.t_entry
    }

    /// Distance from `p` to the (unclipped) line.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        let v = p - self.origin;
        (v - v.dot(&self.direction) * self.direction).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayMode {
    /// Uniform line measure (rejection against the bounding volume).
    #[default]
    Uniform,
    /// Scrambled Halton points in place of the four uniform variates.
    LowDiscrepancy,
    /// Uniform point in the volume paired with a uniform direction. Lines
    /// through the middle of the volume are over-represented; kept as a
    /// negative control.
    NaiveBiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayStreamConfig {
    pub mode: RayMode,
    pub seed: u64,
    pub volume: BoundingVolume,
}

impl Default for RayStreamConfig {
    fn default() -> Self {
        Self { mode: RayMode::Uniform, seed: 0, volume: BoundingVolume::default() }
    }
}

impl RayStreamConfig {
    pub fn new(mode: RayMode, seed: u64, volume: impl Into<BoundingVolume>) -> Self {
        Self { mode, seed, volume: volume.into() }
    }

    pub fn uniform(seed: u64) -> Self {
        Self { seed, ..Default::default() }
    }

    pub fn with_volume(mut self, volume: impl Into<BoundingVolume>) -> Self {
        self.volume = volume.into();
        self
    }
}

/// Right-handed orthonormal `(n, b)` completing unit `d`, so `n × b = d`.
/// Branchless construction of Duff et al.; deterministic in `d`.
pub fn orthonormal_frame(d: &Vec3) -> (Vec3, Vec3) {
    let sign = 1f64.copysign(d.z);
    let a = -1.0 / (sign + d.z);
    let b = d.x * d.y * a;
    let n = Vec3::new(1.0 + sign * d.x * d.x * a, sign * b, -sign * d.x);
    let bn = Vec3::new(b, sign + d.y * d.y * a, -d.y);
    (n, bn)
}

/// Uniform direction on S² from two uniforms (z uniform in [-1, 1], azimuth uniform).
pub fn direction_from_unit_square(u: f64, v: f64) -> Vec3 {
    let z = 1.0 - 2.0 * u;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = TAU * v;
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Line with direction `dir` whose foot point is `center + u0 n + u1 b`,
/// clipped to `volume`. `None` when it misses.
pub fn ray_from_offsets(volume: &BoundingVolume, dir: &Vec3, u0: f64, u1: f64) -> Option<Ray> {
    let (n, b) = orthonormal_frame(dir);
    let origin = volume.center() + u0 * n + u1 * b;
    let (t_entry, t_exit) = volume.clip_line(&origin, dir)?;
    Some(Ray { origin, direction: *dir, t_entry, t_exit, id: 0 })
}

/// Halton sequence in bases 2, 3, 5, 7 with seeded random digit permutations
/// (a separate permutation per base and digit position).
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    perms: [Vec<Vec<u8>>; 4],
}

const HALTON_BASES: [u64; 4] = [2, 3, 5, 7];

impl ScrambledHalton {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4841_4c54_4f4e);
        let perms = HALTON_BASES.map(|base| {
            // enough digits to exhaust f64 precision
            let digits = (53.0 / (base as f64).log2()).ceil() as usize;
            (0..digits)
                .map(|_| {
                    let mut p: Vec<u8> = (0..base as u8).collect();
                    for i in (1..p.len()).rev() {
                        p.swap(i, rng.random_range(0..=i));
                    }
                    p
                })
                .collect()
        });
        Self { perms }
    }

    /// Coordinate `dim` (0..4) of point `index`, in `[0, 1)`.
    pub fn coordinate(&self, index: u64, dim: usize) -> f64 {
        let base = HALTON_BASES[dim];
        let inv = 1.0 / base as f64;
        let mut scale = inv;
        let mut n = index;
        let mut acc = 0.0;
        for perm in &self.perms[dim] {
            let digit = (n % base) as usize;
            n /= base;
            acc += perm[digit] as f64 * scale;
            scale *= inv;
        }
        acc.min(1.0 - f64::EPSILON / 2.0)
    }

    pub fn point(&self, index: u64) -> [f64; 4] {
        [0, 1, 2, 3].map(|d| self.coordinate(index, d))
    }
}

/// Precomputed state for drawing rays from one configuration.
#[derive(Debug, Clone)]
pub struct RayGenerator {
    config: RayStreamConfig,
    halton: Option<ScrambledHalton>,
}

impl RayGenerator {
    pub fn new(config: RayStreamConfig) -> Self {
        let halton = (config.mode == RayMode::LowDiscrepancy).then(|| ScrambledHalton::new(config.seed));
        Self { config, halton }
    }

    pub fn config(&self) -> &RayStreamConfig {
        &self.config
    }

    /// The four variates behind proposal `index`.
    fn variates(&self, index: u64) -> [f64; 4] {
        match &self.halton {
            Some(h) => h.point(index),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                rng.set_stream(index);
                [rng.random(), rng.random(), rng.random(), rng.random()]
            }
        }
    }

    /// Proposal `index`; `None` when the proposed line misses the volume.
    pub fn propose(&self, index: u64) -> Option<Ray> {
        let volume = &self.config.volume;
        let mut ray = match self.config.mode {
            RayMode::NaiveBiased => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                rng.set_stream(index);
                let dir = direction_from_unit_square(rng.random(), rng.random());
                let origin = match volume {
                    BoundingVolume::Box(b) => {
                        let lo = b.min_corner();
                        lo + b.extent().component_mul(&Vec3::new(rng.random(), rng.random(), rng.random()))
                    }
                    BoundingVolume::Sphere { center, radius } => loop {
                        let p = Vec3::new(rng.random(), rng.random(), rng.random()) * 2.0 - Vec3::repeat(1.0);
                        if p.norm_squared() <= 1.0 {
                            break Vec3::from(*center) + *radius * p;
                        }
                    },
                };
                let (t_entry, t_exit) = volume.clip_line(&origin, &dir)?;
                Ray { origin, direction: dir, t_entry, t_exit, id: index }
            }
            RayMode::Uniform | RayMode::LowDiscrepancy => {
                let [a, b, c, d] = self.variates(index);
                let dir = direction_from_unit_square(a, b);
                let (u0, u1) = match volume {
                    BoundingVolume::Box(_) => {
                        let h = volume.outer_radius();
                        ((2.0 * c - 1.0) * h, (2.0 * d - 1.0) * h)
                    }
                    BoundingVolume::Sphere { radius, .. } => {
                        let r = radius * c.sqrt();
                        (r * (TAU * d).cos(), r * (TAU * d).sin())
                    }
                };
                ray_from_offsets(volume, &dir, u0, u1)?
            }
        };
        ray.id = index;
        Some(ray)
    }

    /// Lazily walk the proposals, keeping accepted rays with dense ids.
    pub fn stream(&self) -> RayStream<'_> {
        RayStream { generator: self, next_proposal: 0, next_id: 0 }
    }
}

/// Accepted rays in proposal order.
#[derive(Debug)]
pub struct RayStream<'a> {
    generator: &'a RayGenerator,
    next_proposal: u64,
    next_id: u64,
}

impl RayStream<'_> {
    /// Proposals consumed so far.
    pub fn proposals(&self) -> u64 {
        self.next_proposal
    }

    /// The next `count` accepted rays. Proposals are evaluated in parallel
    /// chunks; the result does not depend on the thread count.
    pub fn take_batch(&mut self, count: usize) -> Vec<Ray> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let want = count - out.len();
            let chunk = (want * 2 + 64) as u64;
            let start = self.next_proposal;
            let proposed: Vec<Option<Ray>> =
                (start..start + chunk).into_par_iter().map(|i| self.generator.propose(i)).collect();
            for (offset, ray) in proposed.into_iter().enumerate() {
                if out.len() == count {
                    break;
                }
                self.next_proposal = start + offset as u64 + 1;
                if let Some(mut r) = ray {
                    r.id = self.next_id;
                    self.next_id += 1;
                    out.push(r);
                }
            }
        }
        out
    }
}

impl Iterator for RayStream<'_> {
    type Item = Ray;

    fn next(&mut self) -> Option<Ray> {
        loop {
            let i = self.next_proposal;
            self.next_proposal += 1;
            if let Some(mut r) = self.generator.propose(i) {
                r.id = self.next_id;
                self.next_id += 1;
                return Some(r);
            }
        }
    }
}

/// Proposal `index` of the configured stream, or `None` on a miss (the
/// caller moves on to the next index).
pub fn sample_ray(config: &RayStreamConfig, index: u64) -> Option<Ray> {
    RayGenerator::new(*config).propose(index)
}

/// Exactly `count` accepted rays with ids `0..count`.
pub fn uniform_rays(config: &RayStreamConfig, count: usize) -> Vec<Ray> {
    RayGenerator::new(*config).stream().take_batch(count)
}
