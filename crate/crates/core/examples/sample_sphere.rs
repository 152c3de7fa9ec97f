//! Keep-all sampling of a sphere, written as binary PLY.
//!
//! cargo run --release --example sample_sphere -- [rays] [out.ply]

use std::f64::consts::PI;

use raysample::Vec3;
use raysample::field::{FieldExpr, ImplicitField};
use raysample::io::save_points;
use raysample::sampler::{SamplerConfig, sample_keep_all};

fn main() -> raysample::Result<()> {
    let mut args = std::env::args().skip(1);
    let rays: usize = args.next().map_or(100_000, |s| s.parse().expect("ray count"));
    let out = args.next().unwrap_or_else(|| "sphere.ply".into());

    let field: ImplicitField = FieldExpr::sphere(Vec3::zeros(), 0.5).into();
    let cfg = SamplerConfig { normals: true, ..SamplerConfig::default().with_seed(7) };
    let (samples, report) = sample_keep_all(&field, &cfg, rays)?;

    println!("{} rays, {} hits, {} evaluations", report.rays, report.hits, report.evals);
    println!("hits per ray {:.5} (expected 2 * pi/24 = {:.5})", report.hits as f64 / report.rays as f64, PI / 12.0);
    save_points(&out, &samples, &[format!("seed {}", report.seed)])?;
    println!("wrote {out}");
    Ok(())
}
