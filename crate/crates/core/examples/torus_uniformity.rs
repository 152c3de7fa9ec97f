//! TV distance on a 100x100 toroidal partition: ray sampling against an
//! exact inverse-CDF sampler.

use raysample::eval::{torus_partition, torus_uniform_sampler, tv_score};
use raysample::field::{FieldExpr, ImplicitField};
use raysample::sampler::{SamplerConfig, sample_keep_all_count, sample_keep_one_count};
use raysample::Vec3;

fn main() -> raysample::Result<()> {
    let (big, small) = (0.5, 0.2);
    let field: ImplicitField = FieldExpr::torus(Vec3::zeros(), big, small).into();
    let part = torus_partition(Vec3::zeros(), big, small, 100, 100)?;
    println!("{:>7} {:>9} {:>9} {:>9}", "N", "keep-all", "keep-one", "exact");
    for n in [5_000, 10_000, 20_000, 50_000] {
        let cfg = SamplerConfig::default().with_seed(n as u64);
        let all: Vec<Vec3> = sample_keep_all_count(&field, &cfg, n)?.0.iter().map(|s| s.point).collect();
        let one: Vec<Vec3> = sample_keep_one_count(&field, &cfg, n)?.0.iter().map(|s| s.point).collect();
        let exact = torus_uniform_sampler(Vec3::zeros(), big, small, n, n as u64);
        println!(
            "{n:>7} {:>9.4} {:>9.4} {:>9.4}",
            tv_score(&all, &part)?.tv,
            tv_score(&one, &part)?.tv,
            tv_score(&exact, &part)?.tv
        );
    }
    Ok(())
}
