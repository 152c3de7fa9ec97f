//! Build a field from a JSON scene, bake it to an ISGF grid, and sample both.

use std::path::Path;

use raysample::field::{GridField, ImplicitField};
use raysample::scene::SceneNode;
use raysample::moments::estimate_moments;
use raysample::rays::RayStreamConfig;
use raysample::tracer::TraceConfig;
use raysample::BoundingBox;

const SCENE: &str = r#"{"op": "union", "args": {"children": [
    {"op": "sphere", "args": {"center": [0, 0, 0.3], "radius": 0.35}},
    {"op": "transform", "args": {
        "child": {"op": "torus", "args": {"major": 0.5, "minor": 0.12}},
        "axis": [1, 0, 0], "angle": 0.4
    }}
]}}"#;

fn main() -> raysample::Result<()> {
    let expr = SceneNode::parse(SCENE)?.build(Path::new("."))?;
    let grid = GridField::bake(&expr, BoundingBox::default(), [129; 3])?;
    let path = std::env::temp_dir().join("raysample_scene.isgf");
    grid.save(&path)?;
    let loaded = GridField::load(&path)?;
    println!("grid {:?}, Lipschitz bound {:.4}", loaded.dims(), ImplicitField::new(loaded.clone()).lipschitz());

    let trace = TraceConfig::default();
    for (name, field) in [("analytic", ImplicitField::from(expr)), ("grid", ImplicitField::new(loaded))] {
        let r = estimate_moments(&field, &RayStreamConfig::uniform(9), &trace, 200_000)?;
        println!(
            "{name:>8}: area {:.4} ± {:.4}, volume {:.4}, {} evaluations",
            r.area.value,
            r.area.stderr,
            r.volume.map_or(f64::NAN, |v| v.value),
            r.evals
        );
    }
    Ok(())
}
