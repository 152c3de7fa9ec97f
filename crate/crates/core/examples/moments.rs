//! Area, volume and centroids of a half ball from line statistics.

use std::f64::consts::PI;

use raysample::Vec3;
use raysample::field::FieldExpr;
use raysample::moments::estimate_moments;
use raysample::rays::RayStreamConfig;
use raysample::tracer::TraceConfig;

fn main() -> raysample::Result<()> {
    let rays: usize = std::env::args().nth(1).map_or(1_000_000, |s| s.parse().expect("ray count"));
    // unit ball cut by the plane z = 0, keeping z >= 0
    let half_ball = FieldExpr::intersection(vec![FieldExpr::sphere(Vec3::zeros(), 1.0), FieldExpr::plane(-Vec3::z(), 0.0)]);
    let r = estimate_moments(&half_ball.into(), &RayStreamConfig::uniform(1), &TraceConfig::default(), rays)?;

    let volume = r.volume.expect("signed field");
    println!("area   {:.4} ± {:.4}  (exact {:.4})", r.area.value, r.area.stderr, 3.0 * PI);
    println!("volume {:.4} ± {:.4}  (exact {:.4})", volume.value, volume.stderr, 2.0 * PI / 3.0);
    println!("shell centroid {:.4?}", r.shell_centroid_point().map(|c| [c.x, c.y, c.z]));
    println!("solid centroid {:.4?}  (exact z = 0.375)", r.solid_centroid_point().map(|c| [c.x, c.y, c.z]));
    if let Some(c) = r.mean_chord {
        println!("mean chord {c:.4}  (4V/A = {:.4})", 4.0 * volume.value / r.area.value);
    }
    println!("{} rays, {} hits, {} evaluations", r.rays, r.hits, r.evals);
    Ok(())
}
