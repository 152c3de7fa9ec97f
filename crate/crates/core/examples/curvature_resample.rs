//! Importance resampling by |mean curvature| on a torus.

use std::f64::consts::PI;

use raysample::field::{FieldExpr, ImplicitField};
use raysample::postprocess::{WeightSource, importance_resample, mean_curvature, sample_weights};
use raysample::sampler::{SamplerConfig, sample_keep_all};
use raysample::Vec3;

fn main() -> raysample::Result<()> {
    let (big, small) = (0.5, 0.2);
    let field: ImplicitField = FieldExpr::torus(Vec3::zeros(), big, small).into();
    let (white, _) = sample_keep_all(&field, &SamplerConfig::default().with_seed(4), 200_000)?;
    let weights = sample_weights(&field, &white, &WeightSource::Curvature)?;
    let out = importance_resample(&white, &weights, white.len(), 5)?;

    let outer = Vec3::new(big + small, 0.0, 0.0);
    let inner = Vec3::new(big - small, 0.0, 0.0);
    println!("H outer {:.3}, inner {:.3}", mean_curvature(&field, &outer)?, mean_curvature(&field, &inner)?);

    // share of samples on the outer half of the tube (cos v > 0)
    let outer_share = |s: &[raysample::sampler::SurfaceSample]| {
        s.iter().filter(|s| s.point.x.hypot(s.point.y) > big).count() as f64 / s.len() as f64
    };
    let uniform_share = 0.5 + small / (PI * big);
    println!(
        "outer-half share: white {:.3} (uniform {uniform_share:.3}), curvature-weighted {:.3}",
        outer_share(&white),
        outer_share(&out)
    );
    Ok(())
}
