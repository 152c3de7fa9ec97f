//! Mesh distance field: ray sampling vs. rejection sampling vs. exact
//! triangle sampling, by TV and field evaluations.
//!
//! cargo run --release --example mesh_eval -- [mesh.obj|mesh.ply]

use raysample::eval::{RejectionConfig, ground_truth_mesh_sampler, mesh_partition, rejection_baseline, tv_score};
use raysample::field::{ImplicitField, MeshField, TriMesh};
use raysample::sampler::{SamplerConfig, sample_keep_all_count};

fn main() -> raysample::Result<()> {
    let mesh = match std::env::args().nth(1) {
        Some(p) => TriMesh::load(p)?,
        None => TriMesh::torus(0.5, 0.2, 48, 24),
    };
    println!("{} faces, area {:.4}, closed {}", mesh.faces.len(), mesh.surface_area(), mesh.is_closed());
    let field = ImplicitField::new(MeshField::new(mesh.clone())?);
    let part = mesh_partition(mesh.clone())?;
    let n = 20_000;

    let (ours, run) = sample_keep_all_count(&field.fork(), &SamplerConfig::default(), n)?;
    let pts: Vec<_> = ours.iter().map(|s| s.point).collect();
    println!("ours        TV {:.4}  evals {:>10}", tv_score(&pts, &part)?.tv, run.evals);

    let rj = rejection_baseline(&field.fork(), n, &RejectionConfig::default())?;
    println!("rejection   TV {:.4}  evals {:>10}  ({} proposals)", tv_score(&rj.points, &part)?.tv, rj.evals, rj.proposals);
    let exact = ground_truth_mesh_sampler(&mesh, n, 0)?;
    println!("exact       TV {:.4}", tv_score(&exact, &part)?.tv);
    Ok(())
}
