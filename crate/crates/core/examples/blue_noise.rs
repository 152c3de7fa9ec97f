//! White-noise samples thinned to blue noise by weighted sample elimination.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use raysample::field::{FieldExpr, ImplicitField};
use raysample::io::save_points;
use raysample::postprocess::{blue_noise_subsample, max_poisson_radius};
use raysample::sampler::{SamplerConfig, SurfaceSample, sample_keep_all_count};
use raysample::Vec3;

fn min_distance(s: &[SurfaceSample]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in s.iter().enumerate() {
        for b in &s[i + 1..] {
            best = best.min((a.point - b.point).norm());
        }
    }
    best
}

fn main() -> raysample::Result<()> {
    let field: ImplicitField = FieldExpr::torus(Vec3::zeros(), 0.5, 0.2).into();
    let area = 4.0 * std::f64::consts::PI.powi(2) * 0.5 * 0.2;
    let (white, _) = sample_keep_all_count(&field, &SamplerConfig::default().with_seed(2), 20_000)?;
    let target = 2_000;

    let blue = blue_noise_subsample(&white, target, area)?;
    let mut random = white.clone();
    random.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    random.truncate(target);

    println!("r_max {:.4}", max_poisson_radius(area, target));
    println!("min distance: random subset {:.4}, blue noise {:.4}", min_distance(&random), min_distance(&blue));
    save_points("torus_blue.xyz", &blue, &[])?;
    save_points("torus_white.xyz", &random, &[])?;
    println!("wrote torus_blue.xyz and torus_white.xyz");
    Ok(())
}
