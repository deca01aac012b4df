//! Greedy adaptivity for a function singular at t = 0, compared with
//! uniform refinement.

use aniso_mesh::adapt::{rate_study, AdaptConfig};
use aniso_mesh::besov::MarkMode;
use aniso_mesh::functions::TestFunction;
use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::mesh::{Partition, SpatialMesh};
use aniso_mesh::polyapprox::{NormParams, PolyOrders};
use aniso_mesh::refine::Budget;

fn main() -> aniso_mesh::Result<()> {
    let p0 = Partition::tensor_initial(&[0.0, 1.0], &SpatialMesh::interval(0.0, 1.0, 2)?, AnisotropyParams::new(1.0, 2.0, 1)?)?;
    let f = TestFunction::parse("tsingular beta=0.2")?;
    let cfg = AdaptConfig {
        orders: PolyOrders::new(2, 2)?,
        norms: NormParams::with_default_rho(2.0, 2.0)?,
        mode: MarkMode::Oracle,
        budget: Budget { max_leaves: 50_000, ..Budget::default() },
        max_rounds: 100,
    };
    let deltas: Vec<f64> = (0..7).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
    let study = rate_study(&p0, &f, &cfg, &deltas)?;
    for pt in &study.adaptive {
        println!("delta {:.2e}: {:6} leaves, L2 error {:.3e}", pt.delta, pt.leaves, pt.error);
    }
    println!("adaptive slope {:.3}, uniform slope {:.3}, optimal {:.3}", study.slope, study.uniform_slope, study.target);
    Ok(())
}
