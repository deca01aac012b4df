//! Lagrange lattice with hanging nodes and their constraint weights.

use aniso_mesh::adapt::{complexity_study, Policy};
use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::mesh::{Partition, SpatialMesh};
use aniso_mesh::nodes::classify;
use aniso_mesh::polyapprox::PolyOrders;
use aniso_mesh::refine::Budget;

fn main() -> aniso_mesh::Result<()> {
    let p0 = Partition::tensor_initial(&[0.0, 1.0], &SpatialMesh::interval(0.0, 1.0, 1)?, AnisotropyParams::new(1.0, 1.0, 1)?)?;
    let (p, _) = complexity_study(&p0, &Policy::CornerChasing, 3, &Budget::default())?;
    let lat = classify(&p, PolyOrders::new(2, 2)?)?;
    println!("{} leaves, {} nodes, {} free, {} hanging", p.num_leaves(), lat.nodes.len(), lat.num_free(), lat.num_hanging());
    for n in lat.hanging() {
        let deps: Vec<String> = lat
            .constraint(n.id)
            .iter()
            .map(|&(k, w)| {
                let m = lat.node(lat.free[k]);
                format!("{w:+.3} * ({:.3}, {:.3})", m.t, m.x[0])
            })
            .collect();
        println!("  ({:.3}, {:.3}) {:<13} = {}", n.t, n.x[0], n.status.as_str(), deps.join(" "));
    }
    Ok(())
}
