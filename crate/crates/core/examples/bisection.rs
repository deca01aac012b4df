//! Tagged simplex bisection: measures halve, descendants stay shape-regular.

use aniso_mesh::geometry::{descendant_shape_bound, kuhn_simplices, simplex_shape, TaggedSimplex};

fn main() -> aniso_mesh::Result<()> {
    for d in 1..=3 {
        let pts = &kuhn_simplices(&vec![0.0; d], &vec![1.0; d], &vec![1; d])?[0];
        let root = TaggedSimplex::new(pts, d)?;
        let (a, b) = root.bisect();
        println!(
            "d={d}: root measure {:.4}, children {:.4} + {:.4}, root shape {:.3}, worst descendant shape (depth {}) {:.3}",
            root.measure(),
            a.measure(),
            b.measure(),
            simplex_shape(&root.points()),
            3 * d,
            descendant_shape_bound(&root, 3 * d as u32)
        );
    }
    Ok(())
}
