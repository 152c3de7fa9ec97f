//! Nested shells: keeping one hit per ray starves the inner shell.

use std::f64::consts::PI;

use raysample::eval::{FnPartition, tv_score};
use raysample::field::{FieldExpr, ImplicitField};
use raysample::sampler::{SamplerConfig, SurfaceSample, sample_keep_all_count, sample_keep_one_count, sample_resampled};
use raysample::Vec3;

fn inner_share(s: &[SurfaceSample]) -> f64 {
    s.iter().filter(|s| s.point.norm() < 0.5).count() as f64 / s.len() as f64
}

fn main() -> raysample::Result<()> {
    let radii = [0.3f64, 0.8];
    let field: ImplicitField =
        FieldExpr::union(radii.iter().map(|&r| FieldExpr::sphere(Vec3::zeros(), r).absolute()).collect()).into();
    let part = FnPartition::new(radii.iter().map(|r| 4.0 * PI * r * r).collect(), move |p: &Vec3| {
        radii.iter().position(|r| (p.norm() - r).abs() < 1e-3)
    });
    let expected = radii[0].powi(2) / (radii[0].powi(2) + radii[1].powi(2));
    let n = 10_000;
    let cfg = SamplerConfig::default().with_seed(1);
    let runs = [
        ("keep-all", sample_keep_all_count(&field, &cfg, n)?.0),
        ("keep-one", sample_keep_one_count(&field, &cfg, n)?.0),
        ("resampled", sample_resampled(&field, &cfg, 20 * n, n)?.0),
    ];
    println!("inner shell area share {expected:.3}");
    for (name, s) in &runs {
        let pts: Vec<Vec3> = s.iter().map(|s| s.point).collect();
        println!("{name:>9}: inner share {:.3}, TV {:.4}", inner_share(s), tv_score(&pts, &part)?.tv);
    }
    Ok(())
}
