//! Chasing the corner (T, 1) in one space dimension adds exactly three leaves
//! per marked prism.

use aniso_mesh::adapt::{complexity_study, Policy};
use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::mesh::{Partition, SpatialMesh};
use aniso_mesh::refine::Budget;

fn main() -> aniso_mesh::Result<()> {
    let p0 = Partition::tensor_initial(&[0.0, 1.0], &SpatialMesh::interval(0.0, 1.0, 1)?, AnisotropyParams::new(1.0, 1.0, 1)?)?;
    let (_, study) = complexity_study(&p0, &Policy::CornerChasing, 12, &Budget::default())?;
    for r in &study.rows {
        println!("k = {:2}: #P_k = {:3} (3k+1 = {})", r.round, r.leaves, 3 * r.round + 1);
    }
    Ok(())
}
