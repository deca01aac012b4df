//! Discrete anisotropic Besov seminorm and moduli of a space-time kink.

use aniso_mesh::besov::{discrete_seminorm, Cylinder, Sampling};
use aniso_mesh::functions::TestFunction;
use aniso_mesh::polyapprox::PolyOrders;

fn main() -> aniso_mesh::Result<()> {
    let cyl = Cylinder::from_box(0.0, 1.0, &[0.0], &[1.0])?;
    for spec in ["smooth-sine freq=1", "tkink center=0.5", "tsingular beta=0.3"] {
        let tf = TestFunction::parse(spec)?;
        let f = |t: f64, x: &[f64]| tf.eval(t, x);
        let est = discrete_seminorm(&f, &cyl, 2.0, 2.0, 1.0, 1.0, PolyOrders::new(2, 2)?, 0, 6, Sampling::default())?;
        println!("{spec:<20} seminorm {:.4} (tail {:.1e})", est.seminorm, est.tail);
        for r in &est.rows {
            println!("    n={} delta={:.4}: omega_t {:.3e}, omega_x {:.3e}", r.n, r.delta_t, r.omega_t, r.omega_x);
        }
    }
    Ok(())
}
