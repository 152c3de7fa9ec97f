//! Sparse-voxel stratification: area variance at a fixed total ray budget.

use std::f64::consts::PI;

use raysample::field::{FieldExpr, ImplicitField};
use raysample::moments::estimate_moments_stratified;
use raysample::rays::RayStreamConfig;
use raysample::sampler::{SamplerConfig, build_voxels, sample_stratified};
use raysample::tracer::TraceConfig;
use raysample::{BoundingBox, Vec3};

fn main() -> raysample::Result<()> {
    let total = 100_000;
    let runs = 12;
    let field: ImplicitField = FieldExpr::sphere(Vec3::zeros(), 0.5).into();

    for res in [1, 8, 16] {
        let grid = build_voxels(&field, &BoundingBox::default(), res)?;
        let per_voxel = total / grid.occupied_count();
        let est: Vec<(f64, f64)> = (0..runs)
            .map(|seed| {
                let cfg = RayStreamConfig::uniform(seed);
                estimate_moments_stratified(&field, &cfg, &TraceConfig::default(), &grid, per_voxel).map(|r| (r.area.value, r.area.stderr))
            })
            .collect::<raysample::Result<_>>()?;
        let mean = est.iter().map(|e| e.0).sum::<f64>() / runs as f64;
        let var = est.iter().map(|e| (e.0 - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let predicted = est.iter().map(|e| e.1 * e.1).sum::<f64>() / runs as f64;
        println!(
            "res {res:>2}: {:>4} occupied ({:.1}%), {per_voxel:>6} rays each, area {mean:.4} (pi = {PI:.4}), variance {var:.3e} (mean stderr² {predicted:.3e})",
            grid.occupied_count(),
            100.0 * grid.occupied_fraction()
        );
    }

    let grid = build_voxels(&field, &BoundingBox::default(), 16)?;
    let run = sample_stratified(&field, &SamplerConfig::default(), &grid, 200)?;
    println!("stratified keep-all at res 16: {} samples from {} rays", run.samples.len(), run.report.rays);
    Ok(())
}
