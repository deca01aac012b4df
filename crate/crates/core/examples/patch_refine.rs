//! Conforming patch refinement on an anisotropic space-time mesh, then
//! validation and VTK output.
//!
//! `cargo run --example patch_refine -- out.vtk`

use std::fs::File;
use std::io::BufWriter;

use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::mesh::{export_vtk, Partition, SpatialMesh};
use aniso_mesh::refine::patch_refine;

fn main() -> aniso_mesh::Result<()> {
    let square = SpatialMesh::kuhn_box(&[0.0, 0.0], &[1.0, 1.0], &[2, 2])?;
    let mut p = Partition::tensor_initial(&[0.0, 1.0], &square, AnisotropyParams::new(1.0, 2.0, 2)?)?;
    for round in 0..8 {
        // refine the finest leaf touching the origin at t = 0
        let index = p.leaf_index();
        let target = index.locate_all(&p, 0.0, &[0.0, 0.0]).into_iter().max_by_key(|&l| p.level(l)).unwrap();
        let out = patch_refine(&mut p, target)?;
        println!(
            "round {round}: refined level {} with {} atomic splits -> {} leaves",
            out.target_level,
            out.atomic_splits(),
            p.num_leaves()
        );
    }
    let report = p.validate();
    println!("valid: {} ({} time slabs, max |omega^1| = {})", report.is_valid(), report.slabs, report.max_omega1);
    if let Some(path) = std::env::args().nth(1) {
        export_vtk(&p, None, BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
