//! Points, axis-aligned boxes, and the bounding volumes rays are drawn against.

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned bounding box. The default is the cube `[-1, 1]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self { min: [-1.0; 3], max: [1.0; 3] }
    }
}

impl BoundingBox {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, Error> {
        if !(0..3).all(|i| min[i].is_finite() && max[i].is_finite() && min[i] < max[i]) {
            return Err(Error::InvalidInput(format!(
                "bounding box min {min:?} must be strictly below max {max:?}"
            )));
        }
        Ok(Self { min: [min.x, min.y, min.z], max: [max.x, max.y, max.z] })
    }

    /// Cube centered at `center` with edge length `side`.
    pub fn cube(center: Vec3, side: f64) -> Self {
        let h = 0.5 * side;
        Self {
            min: [center.x - h, center.y - h, center.z - h],
            max: [center.x + h, center.y + h, center.z + h],
        }
    }

    pub fn min_corner(&self) -> Vec3 {
        Vec3::from(self.min)
    }

    pub fn max_corner(&self) -> Vec3 {
        Vec3::from(self.max)
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.min_corner() + self.max_corner())
    }

    pub fn extent(&self) -> Vec3 {
        self.max_corner() - self.min_corner()
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn surface_area(&self) -> f64 {
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    /// All three edges equal up to a relative `1e-9`.
    pub fn is_cube(&self) -> bool {
        let e = self.extent();
        let m = e.max();
        (e.x - e.y).abs() <= 1e-9 * m && (e.y - e.z).abs() <= 1e-9 * m
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min[0], self.max[0]),
            p.y.clamp(self.min[1], self.max[1]),
            p.z.clamp(self.min[2], self.max[2]),
        )
    }

    /// Slab test. Returns the parameter interval `(t_entry, t_exit)` of the
    /// infinite line `origin + t * dir` inside the box, or `None` when the
    /// line misses or only touches the boundary.
    pub fn clip_line(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] <= self.min[i] || origin[i] >= self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let (mut a, mut b) = ((self.min[i] - origin[i]) * inv, (self.max[i] - origin[i]) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
        (t0 < t1).then_some((t0, t1))
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        (self.clamp(p) - p).norm_squared()
    }
}

/// Convex region whose line measure the ray generator samples uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundingVolume {
    Box(BoundingBox),
    /// Ball of `radius` around `center`; origins are drawn on the projected
    /// disc so no proposal is ever rejected.
    Sphere { center: [f64; 3], radius: f64 },
}

impl Default for BoundingVolume {
    fn default() -> Self {
        BoundingVolume::Box(BoundingBox::default())
    }
}

impl BoundingVolume {
    /// Smallest ball containing the box.
    pub fn circumscribed_sphere(bbox: &BoundingBox) -> Self {
        let c = bbox.center();
        BoundingVolume::Sphere { center: [c.x, c.y, c.z], radius: 0.5 * bbox.diagonal() }
    }

    pub fn center(&self) -> Vec3 {
        match self {
            BoundingVolume::Box(b) => b.center(),
            BoundingVolume::Sphere { center, .. } => Vec3::from(*center),
        }
    }

    /// Radius of the ball around `center()` containing the whole volume.
    pub fn outer_radius(&self) -> f64 {
        match self {
            BoundingVolume::Box(b) => 0.5 * b.diagonal(),
            BoundingVolume::Sphere { radius, .. } => *radius,
        }
    }

    /// Mean orthographic projected area over all directions (Cauchy's
    /// formula: a quarter of the surface area for a convex body). Random
    /// lines hitting the volume have total measure proportional to this.
    pub fn mean_projected_area(&self) -> f64 {
        match self {
            BoundingVolume::Box(b) => 0.25 * b.surface_area(),
            BoundingVolume::Sphere { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn clip_line(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        match self {
            BoundingVolume::Box(b) => b.clip_line(origin, dir),
            BoundingVolume::Sphere { center, radius } => {
                // |o + t d - c|^2 = r^2 with |d| = 1
                let oc = origin - Vec3::from(*center);
                let b = oc.dot(dir);
                let disc = b * b - (oc.norm_squared() - radius * radius);
                if disc <= 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                Some((-b - s, -b + s))
            }
        }
    }

    /// Axis-aligned box enclosing the volume.
    pub fn aabb(&self) -> BoundingBox {
        match self {
            BoundingVolume::Box(b) => *b,
            BoundingVolume::Sphere { center, radius } => {
                BoundingBox::cube(Vec3::from(*center), 2.0 * radius)
            }
        }
    }
}

impl From<BoundingBox> for BoundingVolume {
    fn from(b: BoundingBox) -> Self {
        BoundingVolume::Box(b)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_axis_ray_through_center() {
        let b = BoundingBox::default();
        let (t0, t1) = b.clip_line(&Vec3::zeros(), &Vec3::z()).unwrap();
        assert_eq!((t0, t1), (-1.0, 1.0));
    }

    #[test]
    fn slab_miss_outside_slab() {
        let b = BoundingBox::default();
        assert!(b.clip_line(&Vec3::new(1.5, 0.0, 0.0), &Vec3::z()).is_none());
    }

    #[test]
    fn slab_diagonal() {
        let b = BoundingBox::default();
        let d = Vec3::new(1.0, 1.0, 1.0).normalize();
        let (t0, t1) = b.clip_line(&Vec3::zeros(), &d).unwrap();
        assert!((t1 - t0 - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sphere_volume_clip() {
        let v = BoundingVolume::Sphere { center: [0.0; 3], radius: 2.0 };
        let (t0, t1) = v.clip_line(&Vec3::new(0.0, 0.0, 0.0), &Vec3::x()).unwrap();
        assert!((t0 + 2.0).abs() < 1e-15 && (t1 - 2.0).abs() < 1e-15);
        assert!(v.clip_line(&Vec3::new(0.0, 2.5, 0.0), &Vec3::x()).is_none());
    }

    #[test]
    fn mean_projected_area_of_default_cube_is_six() {
        assert_eq!(BoundingVolume::default().mean_projected_area(), 6.0);
    }

    #[test]
    fn rejects_inverted_box() {
        assert!(BoundingBox::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let s: KahanSum = std::iter::once(1e16).chain(std::iter::repeat_n(1.0, 1000)).collect();
        assert_eq!(s.value(), 1e16 + 1000.0);
    }
}
