//! The quasi-interpolant against the L2 projection for a kink in time.

use aniso_mesh::functions::TestFunction;
use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::mesh::{Partition, SpatialMesh};
use aniso_mesh::nodes::classify;
use aniso_mesh::polyapprox::{global_error, least_squares_projection, quasi_interpolate, PolyOrders};
use aniso_mesh::refine::{mark_all, marked_refine, Budget};

fn main() -> aniso_mesh::Result<()> {
    let square = SpatialMesh::kuhn_box(&[0.0, 0.0], &[1.0, 1.0], &[1, 1])?;
    let mut p = Partition::tensor_initial(&[0.0, 1.0], &square, AnisotropyParams::new(1.0, 2.0, 2)?)?;
    let tf = TestFunction::parse("tkink center=0.37")?;
    let f = |t: f64, x: &[f64]| tf.eval(t, x);
    let orders = PolyOrders::new(2, 2)?;
    for _ in 0..4 {
        marked_refine(&mut p, mark_all, 1, &Budget::default())?;
        let lat = classify(&p, orders)?;
        let best = global_error(&p, &least_squares_projection(&p, &lat, &f)?, &f, 2.0);
        print!("{:5} leaves: L2 projection {best:.3e}", p.num_leaves());
        for rho in [1.0, 2.0] {
            let (pi, _) = quasi_interpolate(&p, &lat, &f, rho)?;
            let e = global_error(&p, &pi, &f, 2.0);
            print!(", rho={rho}: {e:.3e} (x{:.2})", e / best);
        }
        println!();
    }
    Ok(())
}
