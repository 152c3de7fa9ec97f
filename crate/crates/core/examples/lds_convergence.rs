//! Area error against ray count for pseudo-random and scrambled Halton rays.

use std::f64::consts::PI;

use raysample::eval::linear_fit;
use raysample::field::{FieldExpr, ImplicitField};
use raysample::moments::estimate_moments;
use raysample::rays::{RayMode, RayStreamConfig};
use raysample::tracer::TraceConfig;
use raysample::{BoundingBox, Vec3};

fn main() -> raysample::Result<()> {
    let field: ImplicitField = FieldExpr::sphere(Vec3::zeros(), 0.5).into();
    let trace = TraceConfig::default().without_chords();
    let counts = [1_000usize, 4_000, 16_000, 64_000];
    let reps = 16;
    for mode in [RayMode::Uniform, RayMode::LowDiscrepancy] {
        let (mut xs, mut ys) = (vec![], vec![]);
        for &n in &counts {
            let mut se = 0.0;
            for seed in 0..reps {
                let cfg = RayStreamConfig::new(mode, seed, BoundingBox::default());
                se += (estimate_moments(&field, &cfg, &trace, n)?.area.value - PI).powi(2);
            }
            let rms = (se / reps as f64).sqrt();
            println!("{mode:?} N {n:>6}: rms area error {rms:.2e}");
            xs.push((n as f64).ln());
            ys.push(rms.ln());
        }
        println!("{mode:?} log-log slope {:.3}\n", linear_fit(&xs, &ys)?.slope);
    }
    Ok(())
}
