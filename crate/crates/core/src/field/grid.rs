//! Trilinearly interpolated fields sampled on a regular lattice, and the
//! ISGF binary container they are stored in.
//!
//! ISGF layout (all little-endian):
//!
//! | offset | size            | content                                  |
//! |--------|-----------------|------------------------------------------|
//! | 0      | 4               | magic `b"ISGF"`                          |
//! | 4      | 12              | `u32` nx, ny, nz (samples per axis, ≥ 2) |
//! | 16     | 48              | `f64` min x, y, z then max x, y, z       |
//! | 64     | 4 · nx · ny · nz | `f32` samples, x fastest, then y, then z |

use std::io::{Read, Write};
use std::path::Path;

use super::{Field, Signedness};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Vec3};

const MAGIC: &[u8; 4] = b"ISGF";
const HEADER_LEN: usize = 16 + 48;

#[derive(Debug, Clone)]
pub struct GridField {
    dims: [usize; 3],
    bounds: BoundingBox,
    values: Vec<f32>,
    lambda: f64,
    signedness: Signedness,
}

impl GridField {
    /// `dims` counts lattice samples (cell corners) per axis.
    pub fn from_values(dims: [usize; 3], bounds: BoundingBox, values: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidInput(format!("grid needs at least 2 samples per axis, got {dims:?}")));
        }
        let count = dims[0] * dims[1] * dims[2];
        if values.len() != count {
            return Err(Error::InvalidInput(format!(
                "grid {dims:?} needs {count} samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("grid sample {i} is not finite")));
        }
        let mut grid = Self { dims, bounds, values, lambda: 0.0, signedness: Signedness::Signed };
        grid.lambda = grid.cell_slope_bound().max(f64::MIN_POSITIVE);
        Ok(grid)
    }

    /// Sample `field` at every lattice point.
    pub fn bake(field: &dyn Field, bounds: BoundingBox, dims: [usize; 3]) -> Result<Self> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        let spacing = Self::spacing_for(&bounds, dims);
        let min = bounds.min_corner();
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = min + Vec3::new(i as f64, j as f64, k as f64).component_mul(&spacing);
                    values.push(field.value(&p) as f32);
                }
            }
        }
        let mut g = Self::from_values(dims, bounds, values)?;
        g.signedness = field.signedness();
        Ok(g)
    }

    pub fn with_signedness(mut self, s: Signedness) -> Self {
        self.signedness = s;
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bounds(&self) -> &BoundingBox {
        &self.bounds
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    fn spacing_for(bounds: &BoundingBox, dims: [usize; 3]) -> Vec3 {
        let e = bounds.extent();
        Vec3::new(
            e.x / (dims[0] - 1) as f64,
            e.y / (dims[1] - 1) as f64,
            e.z / (dims[2] - 1) as f64,
        )
    }

    fn spacing(&self) -> Vec3 {
        Self::spacing_for(&self.bounds, self.dims)
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)] as f64
    }

    /// Largest gradient norm trilinear interpolation can reach in any cell.
    /// Each partial derivative inside a cell is a convex combination of the
    /// four parallel edge differences divided by the cell edge, so the
    /// per-axis maxima bound the gradient norm.
    fn cell_slope_bound(&self) -> f64 {
        let h = self.spacing();
        let [nx, ny, nz] = self.dims;
        let mut best = 0.0f64;
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let mut d = [0.0f64; 3];
                    for a in 0..2 {
                        for b in 0..2 {
                            d[0] = d[0].max((self.at(i + 1, j + a, k + b) - self.at(i, j + a, k + b)).abs());
                            d[1] = d[1].max((self.at(i + a, j + 1, k + b) - self.at(i + a, j, k + b)).abs());
                            d[2] = d[2].max((self.at(i + a, j + b, k + 1) - self.at(i + a, j + b, k)).abs());
                        }
                    }
                    let s = ((d[0] / h.x).powi(2) + (d[1] / h.y).powi(2) + (d[2] / h.z).powi(2)).sqrt();
                    best = best.max(s);
                }
            }
        }
        best
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::InvalidInput(m) => Error::parse(path, m),
            other => other,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(m.to_string());
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(bad("not an ISGF grid (bad magic or truncated header)"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let dims = [u32_at(4), u32_at(8), u32_at(12)];
        let min = Vec3::new(f64_at(16), f64_at(24), f64_at(32));
        let max = Vec3::new(f64_at(40), f64_at(48), f64_at(56));
        let bounds = BoundingBox::new(min, max)?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| bad("grid dimensions overflow"))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != count * 4 {
            return Err(Error::InvalidInput(format!(
                "expected {} bytes of samples for {dims:?}, found {}",
                count * 4,
                body.len()
            )));
        }
        let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_values(dims, bounds, values)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        for n in self.dims {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for c in self.bounds.min.iter().chain(self.bounds.max.iter()) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

impl Field for GridField {
    /// Trilinear interpolation; points outside the lattice are clamped onto it.
    fn value(&self, p: &Vec3) -> f64 {
        let q = self.bounds.clamp(p) - self.bounds.min_corner();
        let h = self.spacing();
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let x = q[a] / h[a];
            let cell = (x.floor() as usize).min(self.dims[a] - 2);
            idx[a] = cell;
            frac[a] = (x - cell as f64).clamp(0.0, 1.0);
        }
        let [i, j, k] = idx;
        let [fx, fy, fz] = frac;
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(self.at(i, j, k), self.at(i + 1, j, k), fx);
        let c10 = lerp(self.at(i, j + 1, k), self.at(i + 1, j + 1, k), fx);
        let c01 = lerp(self.at(i, j, k + 1), self.at(i + 1, j, k + 1), fx);
        let c11 = lerp(self.at(i, j + 1, k + 1), self.at(i + 1, j + 1, k + 1), fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }

    fn lipschitz(&self) -> f64 {
        self.lambda
    }

    fn signedness(&self) -> Signedness {
        self.signedness
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldExpr, ImplicitField};

    fn sphere_grid(n: usize) -> GridField {
        GridField::bake(&FieldExpr::sphere(Vec3::zeros(), 0.5), BoundingBox::default(), [n; 3]).unwrap()
    }

    #[test]
    fn baked_sphere_round_trips_through_isgf() {
        // 64 cells per axis puts the origin on a lattice point
        let g = sphere_grid(65);
        let back = GridField::from_bytes(&g.to_bytes()).unwrap();
        assert_eq!(back.dims(), [65; 3]);
        assert_eq!(back.bounds(), g.bounds());
        assert!((back.value(&Vec3::zeros()) + 0.5).abs() <= 1e-6);
        assert_eq!(back.lipschitz(), g.lipschitz());
    }

    #[test]
    fn grid_gradient_matches_sphere() {
        let f = ImplicitField::new(sphere_grid(65));
        let g = f.gradient(&Vec3::new(0.7, 0.0, 0.0)).unwrap();
        assert!((g - Vec3::x()).norm() < 1e-2, "{g:?}");
    }

    #[test]
    fn slope_bound_is_tight_for_linear_data() {
        let plane = FieldExpr::plane(Vec3::new(1.0, 2.0, 2.0), 0.0);
        let g = GridField::bake(&plane, BoundingBox::default(), [9, 9, 9]).unwrap();
        assert!((g.lipschitz() - 1.0).abs() < 1e-6, "{}", g.lipschitz());
    }

    #[test]
    fn rejects_malformed_bytes() {
        assert!(GridField::from_bytes(b"NOPE").is_err());
        let mut bytes = sphere_grid(4).to_bytes();
        bytes.pop();
        assert!(GridField::from_bytes(&bytes).is_err());
        let mut bytes = sphere_grid(4).to_bytes();
        bytes[64..68].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(GridField::from_bytes(&bytes).is_err());
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(GridField::load("/nonexistent/grid.isgf"), Err(Error::Io { .. })));
    }

    #[test]
    fn clamps_outside_the_lattice() {
        let g = sphere_grid(9);
        assert_eq!(g.value(&Vec3::new(5.0, 0.0, 0.0)), g.value(&Vec3::new(1.0, 0.0, 0.0)));
    }
}
