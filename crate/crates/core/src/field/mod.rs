//! Implicit fields: the scalar functions whose zero level set is sampled.
//!
//! Everything that can be traced implements [`Field`]. The tracer never
//! talks to a `Field` directly; it goes through [`ImplicitField`], which
//! carries the Lipschitz bound used for step sizes and tallies every
//! evaluation so different samplers can be compared by evaluation count.

mod expr;
mod grid;
mod mesh;

use std::fmt;
use std::sync::Arc;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use expr::FieldExpr;
pub use grid::GridField;
pub use mesh::{MeshField, TriMesh, closest_point_on_triangle};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Whether the sign of the field separates inside (negative) from outside
/// (positive). Unsigned fields only carry a distance magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signedness {
    Signed,
    Unsigned,
}

/// A scalar field over R^3 with a global Lipschitz bound.
pub trait Field: Send + Sync {
    fn value(&self, p: &Vec3) -> f64;

    /// Any `λ > 0` with `|f(a) - f(b)| <= λ |a - b|`.
    fn lipschitz(&self) -> f64;

    fn signedness(&self) -> Signedness;

    /// Closed-form gradient, when the field has one.
    fn analytic_gradient(&self, _p: &Vec3) -> Option<Vec3> {
        None
    }
}

impl<T: Field + ?Sized> Field for Arc<T> {
    fn value(&self, p: &Vec3) -> f64 {
        (**self).value(p)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn signedness(&self) -> Signedness {
        (**self).signedness()
    }
    fn analytic_gradient(&self, p: &Vec3) -> Option<Vec3> {
        (**self).analytic_gradient(p)
    }
}

/// Opaque callable with a caller-supplied Lipschitz bound.
pub struct FnField<F> {
    f: F,
    lambda: f64,
    signedness: Signedness,
}

impl<F: Fn(&Vec3) -> f64 + Send + Sync> Field for FnField<F> {
    fn value(&self, p: &Vec3) -> f64 {
        (self.f)(p)
    }
    fn lipschitz(&self) -> f64 {
        self.lambda
    }
    fn signedness(&self) -> Signedness {
        self.signedness
    }
}

/// Default finite-difference step: `1e-5` of the `[-1,1]^3` diagonal.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5 * 3.464_101_615_137_754_6;

/// A traceable field: source function, Lipschitz bound, and an evaluation
/// counter. Safe to share across threads; the counter is a relaxed atomic.
pub struct ImplicitField {
    source: Arc<dyn Field>,
    lambda: f64,
    signedness: Signedness,
    gradient_step: f64,
    evals: AtomicU64,
}

impl fmt::Debug for ImplicitField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitField")
            .field("lambda", &self.lambda)
            .field("signedness", &self.signedness)
            .field("evals", &self.evals())
            .finish_non_exhaustive()
    }
}

impl ImplicitField {
    pub fn new(source: impl Field + 'static) -> Self {
        Self::from_arc(Arc::new(source))
    }

    pub fn from_arc(source: Arc<dyn Field>) -> Self {
        let lambda = source.lipschitz();
        let signedness = source.signedness();
        Self {
            source,
            lambda,
            signedness,
            gradient_step: DEFAULT_GRADIENT_STEP,
            evals: AtomicU64::new(0),
        }
    }

    /// Wrap a closure. The Lipschitz bound cannot be inferred from an opaque
    /// function, so the caller must provide it.
    pub fn from_fn<F>(f: F, lambda: f64, signedness: Signedness) -> Result<Self>
    where
        F: Fn(&Vec3) -> f64 + Send + Sync + 'static,
    {
        check_lambda(lambda)?;
        Ok(Self::new(FnField { f, lambda, signedness }))
    }

    /// Replace the source's Lipschitz bound.
    pub fn with_lipschitz(mut self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_gradient_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("gradient step must be positive, got {h}")));
        }
        self.gradient_step = h;
        Ok(self)
    }

    /// Same source and settings with a fresh counter.
    pub fn fork(&self) -> Self {
        Self {
            source: Arc::clone(&self.source),
            lambda: self.lambda,
            signedness: self.signedness,
            gradient_step: self.gradient_step,
            evals: AtomicU64::new(0),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.lambda
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn is_signed(&self) -> bool {
        self.signedness == Signedness::Signed
    }

    pub fn source(&self) -> &Arc<dyn Field> {
        &self.source
    }

    /// Evaluations performed so far.
    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_evals(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    /// Credit evaluations made through a fork.
    pub(crate) fn add_evals(&self, n: u64) {
        self.evals.fetch_add(n, Ordering::Relaxed);
    }

    /// `f(p)`. Counts as exactly one evaluation.
    pub fn evaluate(&self, p: &Vec3) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let v = self.source.value(p);
        if v.is_finite() { Ok(v) } else { Err(Error::FieldEvaluation { point: *p }) }
    }

    /// Gradient at `p`: analytic when the source provides one, otherwise
    /// central differences with the configured step (six evaluations).
    pub fn gradient(&self, p: &Vec3) -> Result<Vec3> {
        self.gradient_with_step(p, self.gradient_step)
    }

    pub fn gradient_with_step(&self, p: &Vec3, h: f64) -> Result<Vec3> {
        let g = match self.source.analytic_gradient(p) {
            Some(g) => g,
            None => self.central_difference(p, h)?,
        };
        if !g.iter().all(|c| c.is_finite()) {
            return Err(Error::FieldEvaluation { point: *p });
        }
        if g.norm_squared() == 0.0 {
            return Err(Error::DegenerateGradient { point: *p });
        }
        Ok(g)
    }

    /// Central-difference gradient, ignoring any analytic gradient.
    pub fn central_difference(&self, p: &Vec3, h: f64) -> Result<Vec3> {
        let mut g = Vec3::zeros();
        for axis in 0..3 {
            let mut e = Vec3::zeros();
            e[axis] = h;
            g[axis] = (self.evaluate(&(p + e))? - self.evaluate(&(p - e))?) / (2.0 * h);
        }
        Ok(g)
    }

    /// Number of evaluations one `gradient` call costs at `p`.
    pub fn gradient_cost(&self, p: &Vec3) -> u64 {
        if self.source.analytic_gradient(p).is_some() { 0 } else { 6 }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("Lipschitz bound must be positive and finite, got {lambda}")))
    }
}

impl From<FieldExpr> for ImplicitField {
    fn from(e: FieldExpr) -> Self {
        ImplicitField::new(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_is_exact() {
        let f = ImplicitField::from(FieldExpr::sphere(Vec3::zeros(), 0.5));
        for i in 0..17 {
            f.evaluate(&Vec3::new(i as f64, 0.0, 0.0)).unwrap();
        }
        assert_eq!(f.evals(), 17);
        f.central_difference(&Vec3::x(), 1e-4).unwrap();
        assert_eq!(f.evals(), 23);
    }

    #[test]
    fn non_finite_is_an_error() {
        let f = ImplicitField::from_fn(|p| 1.0 / p.x, 1.0, Signedness::Signed).unwrap();
        match f.evaluate(&Vec3::zeros()) {
            Err(Error::FieldEvaluation { point }) => assert_eq!(point, Vec3::zeros()),
            other => panic!("expected field error, got {other:?}"),
        }
    }

    #[test]
    fn opaque_fields_need_positive_lambda() {
        assert!(ImplicitField::from_fn(|p| p.x, 0.0, Signedness::Signed).is_err());
        assert!(ImplicitField::from_fn(|p| p.x, f64::NAN, Signedness::Signed).is_err());
    }

    #[test]
    fn sphere_gradient_is_radial() {
        let f = ImplicitField::from(FieldExpr::sphere(Vec3::zeros(), 0.5));
        let g = f.gradient(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((g - Vec3::x()).norm() < 1e-12);
        let fd = f.central_difference(&Vec3::new(1.0, 0.0, 0.0), DEFAULT_GRADIENT_STEP).unwrap();
        assert!((fd - Vec3::x()).norm() < 1e-8);
    }

    #[test]
    fn plane_gradient_is_normal() {
        let f = ImplicitField::from(FieldExpr::plane(Vec3::z(), 0.0));
        for p in [Vec3::new(0.3, -0.2, 0.7), Vec3::new(-5.0, 2.0, -1.0)] {
            assert!((f.gradient(&p).unwrap() - Vec3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn flat_field_has_degenerate_gradient() {
        let f = ImplicitField::from_fn(|_| 1.0, 1.0, Signedness::Signed).unwrap();
        assert!(matches!(f.gradient(&Vec3::zeros()), Err(Error::DegenerateGradient { .. })));
    }
}
