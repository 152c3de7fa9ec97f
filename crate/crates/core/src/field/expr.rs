//! Analytic fields and their min/max compositions.

use std::sync::Arc;

use nalgebra::Rotation3;

use super::{Field, GridField, MeshField, Signedness};
use crate::geometry::Vec3;

/// Expression tree of analytic primitives, CSG combinators, and sampled
/// leaves. Primitives are exact Euclidean SDFs (λ = 1); combinators keep the
/// largest child bound.
#[derive(Debug, Clone)]
pub enum FieldExpr {
    Sphere { center: Vec3, radius: f64 },
    /// Solid axis-aligned box.
    Box { center: Vec3, half_extents: Vec3 },
    /// Torus around the z axis through `center`.
    Torus { center: Vec3, major: f64, minor: f64 },
    /// Half-space `normal · p <= offset`.
    Plane { normal: Vec3, offset: f64 },
    Constant(f64),
    Union(Vec<FieldExpr>),
    Intersection(Vec<FieldExpr>),
    Complement(Box<FieldExpr>),
    /// `child - delta`.
    Offset { child: Box<FieldExpr>, delta: f64 },
    /// `|child|`, always unsigned.
    Absolute(Box<FieldExpr>),
    /// Rigid motion plus uniform scale: `scale * child(R^T (p - t) / scale)`.
    Transform { child: Box<FieldExpr>, rotation: Rotation3<f64>, translation: Vec3, scale: f64 },
    Grid(Arc<GridField>),
    Mesh(Arc<MeshField>),
}

impl FieldExpr {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        FieldExpr::Sphere { center, radius }
    }

    pub fn cuboid(center: Vec3, half_extents: Vec3) -> Self {
        FieldExpr::Box { center, half_extents }
    }

    pub fn torus(center: Vec3, major: f64, minor: f64) -> Self {
        FieldExpr::Torus { center, major, minor }
    }

    /// Half-space below the plane `normal · p = offset`; `normal` is normalized.
    pub fn plane(normal: Vec3, offset: f64) -> Self {
        let n = normal.norm();
        FieldExpr::Plane { normal: normal / n, offset: offset / n }
    }

    pub fn union(children: Vec<FieldExpr>) -> Self {
        FieldExpr::Union(children)
    }

    pub fn intersection(children: Vec<FieldExpr>) -> Self {
        FieldExpr::Intersection(children)
    }

    pub fn complement(self) -> Self {
        FieldExpr::Complement(Box::new(self))
    }

    pub fn offset(self, delta: f64) -> Self {
        FieldExpr::Offset { child: Box::new(self), delta }
    }

    pub fn absolute(self) -> Self {
        FieldExpr::Absolute(Box::new(self))
    }

    pub fn transformed(self, rotation: Rotation3<f64>, translation: Vec3, scale: f64) -> Self {
        FieldExpr::Transform { child: Box::new(self), rotation, translation, scale }
    }

    pub fn translated(self, translation: Vec3) -> Self {
        self.transformed(Rotation3::identity(), translation, 1.0)
    }

    /// Index of the child that attains the min (union) or max (intersection).
    fn extremal_child(children: &[FieldExpr], p: &Vec3, take_max: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in children.iter().enumerate() {
            let v = c.value(p);
            let better = match best {
                None => true,
                Some((_, b)) => {
                    if take_max {
                        v > b
                    } else {
                        v < b
                    }
                }
            };
            if better {
                best = Some((i, v));
            }
        }
        best
    }
}

fn box_sdf(p: &Vec3, center: &Vec3, half: &Vec3) -> f64 {
    let d = p - center;
    let q = d.abs() - half;
    let outside = q.map(|c| c.max(0.0)).norm();
    let inside = q.max().min(0.0);
    outside + inside
}

fn box_gradient(p: &Vec3, center: &Vec3, half: &Vec3) -> Option<Vec3> {
    let d = p - center;
    let q = d.abs() - half;
    let sign = d.map(|c| if c < 0.0 { -1.0 } else { 1.0 });
    if q.max() > 0.0 {
        let pos = q.map(|c| c.max(0.0));
        let n = pos.norm();
        Some(pos.component_mul(&sign) / n)
    } else {
        let axis = q.imax();
        let mut g = Vec3::zeros();
        g[axis] = sign[axis];
        Some(g)
    }
}

impl Field for FieldExpr {
    fn value(&self, p: &Vec3) -> f64 {
        match self {
            FieldExpr::Sphere { center, radius } => (p - center).norm() - radius,
            FieldExpr::Box { center, half_extents } => box_sdf(p, center, half_extents),
            FieldExpr::Torus { center, major, minor } => {
                let d = p - center;
                let ring = d.xy().norm() - major;
                (ring * ring + d.z * d.z).sqrt() - minor
            }
            FieldExpr::Plane { normal, offset } => normal.dot(p) - offset,
            FieldExpr::Constant(c) => *c,
            FieldExpr::Union(cs) => cs.iter().map(|c| c.value(p)).fold(f64::INFINITY, f64::min),
            FieldExpr::Intersection(cs) => {
                cs.iter().map(|c| c.value(p)).fold(f64::NEG_INFINITY, f64::max)
            }
            FieldExpr::Complement(c) => -c.value(p),
            FieldExpr::Offset { child, delta } => child.value(p) - delta,
            FieldExpr::Absolute(c) => c.value(p).abs(),
            FieldExpr::Transform { child, rotation, translation, scale } => {
                let q = rotation.inverse_transform_vector(&(p - translation)) / *scale;
                scale * child.value(&q)
            }
            FieldExpr::Grid(g) => g.value(p),
            FieldExpr::Mesh(m) => m.value(p),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            FieldExpr::Sphere { .. }
            | FieldExpr::Box { .. }
            | FieldExpr::Torus { .. }
            | FieldExpr::Plane { .. }
            | FieldExpr::Constant(_) => 1.0,
            FieldExpr::Union(cs) | FieldExpr::Intersection(cs) => {
                cs.iter().map(Field::lipschitz).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
            }
            FieldExpr::Complement(c) | FieldExpr::Absolute(c) => c.lipschitz(),
            FieldExpr::Offset { child, .. } | FieldExpr::Transform { child, .. } => {
                child.lipschitz()
            }
            FieldExpr::Grid(g) => g.lipschitz(),
            FieldExpr::Mesh(m) => m.lipschitz(),
        }
    }

    fn signedness(&self) -> Signedness {
        match self {
            FieldExpr::Sphere { .. }
            | FieldExpr::Box { .. }
            | FieldExpr::Torus { .. }
            | FieldExpr::Plane { .. }
            | FieldExpr::Constant(_) => Signedness::Signed,
            FieldExpr::Union(cs) | FieldExpr::Intersection(cs) => {
                if cs.iter().all(|c| c.signedness() == Signedness::Signed) {
                    Signedness::Signed
                } else {
                    Signedness::Unsigned
                }
            }
            FieldExpr::Complement(c) | FieldExpr::Transform { child: c, .. } => c.signedness(),
            // |f| - δ with δ > 0 is negative inside a thickened shell
            FieldExpr::Offset { child, delta } => {
                if child.signedness() == Signedness::Signed || *delta > 0.0 {
                    Signedness::Signed
                } else {
                    Signedness::Unsigned
                }
            }
            FieldExpr::Absolute(_) => Signedness::Unsigned,
            FieldExpr::Grid(g) => g.signedness(),
            FieldExpr::Mesh(m) => m.signedness(),
        }
    }

    fn analytic_gradient(&self, p: &Vec3) -> Option<Vec3> {
        match self {
            FieldExpr::Sphere { center, .. } => {
                let d = p - center;
                let n = d.norm();
                (n > 0.0).then(|| d / n)
            }
            FieldExpr::Box { center, half_extents } => box_gradient(p, center, half_extents),
            FieldExpr::Torus { center, major, .. } => {
                let d = p - center;
                let rho = d.xy().norm();
                if rho == 0.0 {
                    return None;
                }
                let ring = rho - major;
                let len = (ring * ring + d.z * d.z).sqrt();
                if len == 0.0 {
                    return None;
                }
                Some(Vec3::new(ring * d.x / rho, ring * d.y / rho, d.z) / len)
            }
            FieldExpr::Plane { normal, .. } => Some(*normal),
            FieldExpr::Constant(_) => Some(Vec3::zeros()),
            FieldExpr::Union(cs) => {
                let (i, _) = Self::extremal_child(cs, p, false)?;
                cs[i].analytic_gradient(p)
            }
            FieldExpr::Intersection(cs) => {
                let (i, _) = Self::extremal_child(cs, p, true)?;
                cs[i].analytic_gradient(p)
            }
            FieldExpr::Complement(c) => c.analytic_gradient(p).map(|g| -g),
            FieldExpr::Offset { child, .. } => child.analytic_gradient(p),
            FieldExpr::Absolute(c) => {
                let g = c.analytic_gradient(p)?;
                Some(if c.value(p) < 0.0 { -g } else { g })
            }
            FieldExpr::Transform { child, rotation, translation, scale } => {
                let q = rotation.inverse_transform_vector(&(p - translation)) / *scale;
                child.analytic_gradient(&q).map(|g| rotation * g)
            }
            FieldExpr::Grid(_) | FieldExpr::Mesh(_) => None,
        }
    }
}
