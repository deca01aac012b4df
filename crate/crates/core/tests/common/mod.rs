#![allow(dead_code)]

use aniso_mesh::geometry::AnisotropyParams;
use aniso_mesh::ids::PrismId;
use aniso_mesh::mesh::{Partition, SpatialMesh};
use aniso_mesh::refine::{patch_refine, PatchOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit interval or unit square (two Kuhn triangles) over `[0, 1]`.
pub fn unit(d: usize, s1: f64, s2: f64) -> Partition {
    let m = match d {
        1 => SpatialMesh::interval(0.0, 1.0, 1).unwrap(),
        _ => SpatialMesh::kuhn_box(&vec![0.0; d], &vec![1.0; d], &vec![1; d]).unwrap(),
    };
    Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(s1, s2, d).unwrap()).unwrap()
}

/// Kuhn mesh of the unit cube with `cells` per axis over `time_cells` equal slabs.
pub fn grid(d: usize, cells: usize, time_cells: usize, s1: f64, s2: f64) -> Partition {
    let m = SpatialMesh::kuhn_box(&vec![0.0; d], &vec![1.0; d], &vec![cells; d]).unwrap();
    let times: Vec<f64> = (0..=time_cells).map(|i| i as f64 / time_cells as f64).collect();
    Partition::tensor_initial(&times, &m, AnisotropyParams::new(s1, s2, d).unwrap()).unwrap()
}

/// Anisotropy pairs with `s2 / s1` in `{1/2, 1, 2, 4}`.
pub const RATIOS: [(f64, f64); 4] = [(2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.5, 2.0)];

/// Deepest level a random campaign targets.
pub const MAX_PICK_LEVEL: u32 = 24;

/// Random leaf, biased towards the finest ones so that refinement localizes.
pub fn pick_leaf(p: &Partition, rng: &mut ChaCha8Rng) -> PrismId {
    let leaves: Vec<PrismId> = p.leaves().filter(|&l| p.level(l) < MAX_PICK_LEVEL).collect();
    if rng.random_bool(0.5) {
        let top = leaves.iter().map(|&l| p.level(l)).max().unwrap();
        let fine: Vec<PrismId> = leaves.iter().copied().filter(|&l| p.level(l) == top).collect();
        fine[rng.random_range(0..fine.len())]
    } else {
        leaves[rng.random_range(0..leaves.len())]
    }
}

/// `calls` random patch refinements, handing each outcome to `check`. A call
/// that would push the mesh above `max_leaves` is undone and ends the run.
pub fn random_refinement<F>(p: &mut Partition, seed: u64, calls: usize, max_leaves: usize, mut check: F)
where
    F: FnMut(&Partition, PrismId, u32, &PatchOutcome),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..calls {
        let l = pick_leaf(p, &mut rng);
        let lvl = p.level(l);
        let before = (max_leaves != usize::MAX).then(|| p.clone());
        let out = patch_refine(p, l).unwrap();
        if p.num_leaves() > max_leaves {
            *p = before.unwrap();
            break;
        }
        check(p, l, lvl, &out);
    }
}

pub fn random_mesh(d: usize, ratio: usize, seed: u64, calls: usize, max_leaves: usize) -> Partition {
    let (s1, s2) = RATIOS[ratio % RATIOS.len()];
    let mut p = unit(d, s1, s2);
    random_refinement(&mut p, seed, calls, max_leaves, |_, _, _, _| {});
    p
}
