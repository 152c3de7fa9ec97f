//! Sphere tracing that keeps going after the first hit.
//!
//! Marching uses steps of `|f| / λ`, which can never jump over the zero
//! level set. Whenever `|f| < ε` a hit is recorded and the march creeps
//! forward in steps of `ε / λ` until it leaves the ε-band, then resumes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ImplicitField;
use crate::geometry::Vec3;
use crate::rays::Ray;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Hit tolerance on `|f|` (world units).
    pub epsilon: f64,
    /// Evaluation budget per ray.
    pub max_steps: u64,
    /// Overrides the field's Lipschitz bound.
    pub lambda: Option<f64>,
    /// Probe the sign between events to recover inside chords (signed fields only).
    pub chords: bool,
    /// Treat the segment as half-open `[t_entry, t_exit)`: a crossing whose
    /// hit band touches either end is kept only if it lies inside. Segments
    /// that tile a line then count every crossing exactly once.
    pub half_open: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_steps: 10_000, lambda: None, chords: true, half_open: false }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidInput(format!("lambda must be positive, got {l}")));
            }
        }
        Ok(())
    }

    pub fn without_chords(mut self) -> Self {
        self.chords = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub point: Vec3,
    pub t: f64,
    /// Ordinal along the ray.
    pub index: u32,
    /// `|f(point)|`, below epsilon.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ExitedBox,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub ray: Ray,
    pub hits: Vec<Hit>,
    /// Inside intervals `(t_start, t_end)`; `None` for unsigned fields or
    /// when chord probing is disabled.
    pub chords: Option<Vec<(f64, f64)>>,
    /// Field evaluations spent on this ray, chord probes included.
    pub evals: u64,
    pub terminated: Termination,
}

impl TraceResult {
    /// Total inside length σ of the ray (zero without chords).
    pub fn chord_length(&self) -> f64 {
        self.chords.as_ref().map_or(0.0, |c| c.iter().map(|(a, b)| b - a).sum())
    }
}

/// All crossings of `ray` with the zero level set of `field`.
pub fn trace_all(field: &ImplicitField, ray: &Ray, config: &TraceConfig) -> Result<TraceResult> {
    let lambda = config.lambda.unwrap_or_else(|| field.lipschitz());
    let eps = config.epsilon;
    let mut evals = 0u64;
    let mut hits: Vec<Hit> = Vec::new();
    let mut terminated = Termination::ExitedBox;

    let eval = |t: f64, evals: &mut u64| -> Result<(Vec3, f64)> {
        *evals += 1;
        let p = ray.at(t);
        Ok((p, field.evaluate(&p)?.abs()))
    };

    // whether |f| still decreases just past `t`, i.e. the crossing lies
    // ahead (a crossing exactly at `t` counts as ahead); the probe stays
    // short of any crossing at least |f| / 2λ away
    let ahead = |t: f64, at_t: f64, evals: &mut u64| -> Result<bool> {
        if at_t == 0.0 {
            return Ok(true);
        }
        let probe = (eps / 8.0).min(at_t / 2.0) / lambda;
        Ok(eval(t + probe, evals)?.1 < at_t)
    };

    let mut t = ray.t_entry;
    let (mut p, mut s) = eval(t, &mut evals)?;
    'march: while t < ray.t_exit {
        if s < eps {
            let keep = !(config.half_open && t == ray.t_entry) || ahead(t, s, &mut evals)?;
            if keep {
                hits.push(Hit { point: p, t, index: hits.len() as u32, residual: s });
            }
            while s < eps {
                t += s.max(eps) / lambda;
                if t >= ray.t_exit {
                    if keep && config.half_open {
                        let at_exit = eval(ray.t_exit, &mut evals)?.1;
                        if ahead(ray.t_exit, at_exit, &mut evals)? {
                            hits.pop();
                        }
                    }
                    break 'march;
                }
                if evals >= config.max_steps {
                    terminated = Termination::MaxSteps;
                    break 'march;
                }
                (_, s) = eval(t, &mut evals)?;
            }
        }
        t += s / lambda;
        if t >= ray.t_exit {
            break;
        }
        if evals >= config.max_steps {
            terminated = Termination::MaxSteps;
            break;
        }
        (p, s) = eval(t, &mut evals)?;
    }

    let chords = if config.chords && field.is_signed() {
        let mut events = Vec::with_capacity(hits.len() + 2);
        events.push(ray.t_entry);
        events.extend(hits.iter().map(|h| h.t));
        events.push(if terminated == Termination::MaxSteps { t.min(ray.t_exit) } else { ray.t_exit });
        let mut chords = Vec::new();
        for w in events.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            evals += 1;
            if field.evaluate(&ray.at(0.5 * (a + b)))? < 0.0 {
                chords.push((a, b));
            }
        }
        Some(chords)
    } else {
        None
    };

    Ok(TraceResult { ray: *ray, hits, chords, evals, terminated })
}

/// Trace many rays in parallel; results keep the input order.
pub fn trace_rays(field: &ImplicitField, rays: &[Ray], config: &TraceConfig) -> Result<Vec<TraceResult>> {
    config.validate()?;
    rays.par_iter().map(|r| trace_all(field, r, config)).collect()
}

/// `steps` Newton updates `x ← x − f(x) ∇f(x) / |∇f(x)|²`.
pub fn newton_project(field: &ImplicitField, p: &Vec3, steps: usize) -> Result<Vec3> {
    let mut x = *p;
    for _ in 0..steps {
        let f = field.evaluate(&x)?;
        let g = match field.gradient(&x) {
            Ok(g) => g,
            Err(Error::DegenerateGradient { .. }) => return Err(Error::Projection { last: x }),
            Err(e) => return Err(e),
        };
        x -= f * g / g.norm_squared();
    }
    Ok(x)
}
