//! Uniform ladder P_0, P_1, ... and the three multiscale norms of a function.

use aniso_mesh::besov::multiscale_norms;
use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::mesh::{Partition, SpatialMesh};
use aniso_mesh::polyapprox::{NormParams, PolyOrders};

fn main() -> aniso_mesh::Result<()> {
    let p0 = Partition::tensor_initial(&[0.0, 1.0], &SpatialMesh::interval(0.0, 1.0, 1)?, AnisotropyParams::new(1.0, 1.0, 1)?)?;
    let f = |t: f64, x: &[f64]| (t - 0.3).abs().powf(0.75) * (1.0 + x[0]);
    let ladder = multiscale_norms(&f, &p0, PolyOrders::new(2, 2)?, NormParams::new(2.0, 2.0, 2.0)?, (0.5, 0.5), 5)?;
    for l in &ladder.levels {
        println!(
            "n={} leaves={:5} hanging={} |Delta_n|={:.3e} |f-pi_n f|={:.3e} E_n={:.3e}",
            l.n, l.leaves, l.hanging_nodes, l.delta_norm, l.pi_error, l.best_error
        );
    }
    println!("norms: Delta {:.4}  pi {:.4}  E {:.4}", ladder.norm_delta, ladder.norm_pi, ladder.norm_e);
    Ok(())
}
