//! Line-measure check: impact distances of uniform lines are flat in d²,
//! while point-plus-direction lines crowd the center.

use raysample::eval::line_flatness;
use raysample::rays::{RayMode, RayStreamConfig, uniform_rays};
use raysample::{BoundingBox, Vec3};

fn main() -> raysample::Result<()> {
    for mode in [RayMode::Uniform, RayMode::LowDiscrepancy, RayMode::NaiveBiased] {
        let rays = uniform_rays(&RayStreamConfig::new(mode, 0, BoundingBox::default()), 200_000);
        let (stat, p, n) = line_flatness(&rays, &Vec3::zeros(), 1.0, 20)?;
        println!("{mode:?}: chi2 {stat:.1} on 19 dof, p {p:.3e}, {n} lines within the inscribed sphere");
    }
    Ok(())
}
