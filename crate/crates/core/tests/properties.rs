mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use aniso_mesh::adapt::{greedy_adapt, AdaptConfig};
use aniso_mesh::besov::{modulus, prolong, Cylinder, Direction, MarkMode, Sampling};
use aniso_mesh::dyadic::Dyadic;
use aniso_mesh::functions::TestFunction;
use aniso_mesh::geometry::{kuhn_simplices, TaggedSimplex};
use aniso_mesh::ids::PrismId;
use aniso_mesh::mesh::Partition;
use aniso_mesh::nodes::classify;
use aniso_mesh::polyapprox::{q_of_piecewise, FeFunction, NormParams, PolyOrders};
use aniso_mesh::refine::{marked_refine, mark_all, Budget};
use common::{random_mesh, random_refinement, unit, RATIOS};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_time_neighbors(p: &Partition, id: PrismId) -> BTreeSet<PrismId> {
    let Some(parent) = p.prism_simplex(id).parent else { return BTreeSet::new() };
    let (a0, a1) = p.prism_interval(id).bounds();
    p.leaves()
        .filter(|&c| {
            let (b0, b1) = p.prism_interval(c).bounds();
            p.prism(c).simplex == parent && (b1 == a0 || b0 == a1)
        })
        .collect()
}

fn brute_space_neighbors(p: &Partition, id: PrismId) -> BTreeSet<PrismId> {
    let s = p.prism_simplex(id);
    let pts = p.simplex_points(p.prism(id).simplex);
    let (a0, a1) = p.prism_interval(id).bounds();
    let edge: Vec<&Vec<f64>> = if p.d() == 1 { pts.iter().collect() } else { vec![&pts[0], &pts[s.tag]] };
    p.leaves()
        .filter(|&c| {
            let (b0, b1) = p.prism_interval(c).bounds();
            if c == id || a1.min(b1) <= a0.max(b0) {
                return false;
            }
            let cp = p.simplex_points(p.prism(c).simplex);
            if p.d() == 1 {
                p.level(c) + 1 == p.level(id) && cp != pts && edge.iter().any(|e| cp.contains(e))
            } else {
                edge.iter().all(|e| cp.contains(e))
            }
        })
        .collect()
}

fn small_config() -> ProptestConfig {
    ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(small_config())]

    #[test]
    fn random_refinement_keeps_the_mesh_valid(d in 1usize..=2, ratio in 0usize..4, seed: u64) {
        let (s1, s2) = RATIOS[ratio];
        let mut p = unit(d, s1, s2);
        let volume: f64 = p.leaves().map(|l| p.prism_measure(l)).sum();
        random_refinement(&mut p, seed, 25, 3000, |p, _, lvl, out| {
            assert!(p.validate().is_valid());
            assert!(out.max_created_level(p) <= lvl + 1);
        });
        let total: f64 = p.leaves().map(|l| p.prism_measure(l)).sum();
        prop_assert!((total - volume).abs() <= 1e-12 * volume);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let t: f64 = rng.random();
            let area: f64 = p.active_triangulation(t).unwrap().iter().map(|&s| p.simplex(s).measure).sum();
            prop_assert!((area - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn neighbor_queries_match_a_pairwise_scan(d in 1usize..=2, ratio in 0usize..4, seed: u64) {
        let p = random_mesh(d, ratio, seed, 20, 600);
        for l in p.leaves() {
            prop_assert_eq!(p.neighbors_time(l).unwrap(), brute_time_neighbors(&p, l));
            prop_assert_eq!(p.neighbors_space(l).unwrap(), brute_space_neighbors(&p, l));
        }
    }

    #[test]
    fn free_nodes_span_the_space(d in 1usize..=2, ratio in 0usize..4, seed: u64, r1 in 2usize..=3, r2 in 2usize..=3) {
        let p = random_mesh(d, ratio, seed, 8, 60);
        let lat = classify(&p, PolyOrders::new(r1, r2).unwrap()).unwrap();
        prop_assert!(lat.check_hanging_structure(&p).is_empty());
        let leaves: Vec<PrismId> = p.leaves().collect();
        let nb = lat.reference.num_basis();
        let n = lat.num_free();
        let mut m = DMatrix::zeros(n, leaves.len() * nb);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            for (j, &l) in leaves.iter().enumerate() {
                for (i, v) in lat.local_values(l, &e).into_iter().enumerate() {
                    m[(k, j * nb + i)] = v;
                }
            }
        }
        prop_assert_eq!(m.rank(1e-9), n);
    }

    #[test]
    fn q_is_a_linear_projection(d in 1usize..=2, seed: u64) {
        let p = random_mesh(d, 2, seed, 6, 80);
        let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<f64> = (0..lat.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = FeFunction::from_coeffs(&lat, coeffs.clone());
        let qu = q_of_piecewise(&lat, &u);
        for (a, b) in qu.coeffs.iter().zip(&coeffs) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let nb = lat.reference.num_basis();
        let mut random_piecewise = || {
            let local: BTreeMap<PrismId, Vec<f64>> =
                p.leaves().map(|l| (l, (0..nb).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
            FeFunction::discontinuous(Arc::clone(&lat.reference), local)
        };
        let (g, h) = (random_piecewise(), random_piecewise());
        let (alpha, beta) = (0.7, -1.3);
        let lhs = q_of_piecewise(&lat, &g.add_scaled(alpha, &h, beta));
        let rhs = q_of_piecewise(&lat, &g).add_scaled(alpha, &q_of_piecewise(&lat, &h), beta);
        for (a, b) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn prolongation_reproduces_coarse_functions(d in 1usize..=2, seed: u64) {
        let mut p = random_mesh(d, 2, seed, 4, 40);
        let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
        let re = Arc::clone(&lat.reference);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse = FeFunction::from_coeffs(&lat, (0..lat.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let old = p.clone();
        marked_refine(&mut p, mark_all, 1, &Budget::default()).unwrap();
        let fine = prolong(&p, &coarse, &re);
        let (index, fine_index) = (old.leaf_index(), p.leaf_index());
        for _ in 0..50 {
            let t: f64 = rng.random();
            let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let (Some(a), Some(b)) = (coarse.eval(&old, &index, t, &x), fine.eval(&p, &fine_index, t, &x)) else { continue };
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn moduli_grow_with_the_step(name in prop::sample::select(vec!["tkink center=0.37", "smooth-sine freq=1", "tsingular beta=0.4"]),
                                 small in 0.02f64..0.2, factor in 1.5f64..3.0, p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let f = TestFunction::parse(name).unwrap();
        let g = |t: f64, x: &[f64]| f.eval(t, x);
        let cyl = Cylinder::from_box(0.0, 1.0, &[0.0], &[1.0]).unwrap();
        let s = Sampling::default();
        for dir in [Direction::Time, Direction::Space] {
            let a = modulus(&g, &cyl, dir, 2, small, p, s);
            let b = modulus(&g, &cyl, dir, 2, small * factor, p, s);
            prop_assert!(a <= 1.05 * b + 1e-14, "{:?}: {} > {}", dir, a, b);
        }
    }
}

#[test]
fn bisection_halves_and_saturates_edges() {
    for d in 1..=3 {
        for pts in kuhn_simplices(&vec![0.0; d], &vec![1.0; d], &vec![1; d]).unwrap() {
            let root = TaggedSimplex::new(&pts, d).unwrap();
            let mut gen = vec![root.clone()];
            let mut verts: BTreeSet<Vec<Dyadic>> = root.vertices.iter().cloned().collect();
            let mut classes = BTreeSet::new();
            for depth in 1..=2 * d {
                let mut next = Vec::new();
                for s in &gen {
                    let (a, b) = s.bisect();
                    assert_eq!(a.measure() + b.measure(), s.measure());
                    assert_eq!(a.measure(), b.measure());
                    let mut union: BTreeSet<Vec<Dyadic>> = a.vertices.iter().chain(&b.vertices).cloned().collect();
                    let (e0, e1) = s.refinement_edge();
                    let z: Vec<Dyadic> = e0.iter().zip(e1).map(|(x, y)| Dyadic::midpoint(*x, *y)).collect();
                    assert!(union.remove(&z));
                    assert_eq!(union, s.vertices.iter().cloned().collect());
                    verts.extend(a.vertices.iter().chain(&b.vertices).cloned());
                    next.extend([a, b]);
                }
                gen = next;
                for s in &gen {
                    classes.insert(fingerprint(&s.points()));
                }
                if depth == d {
                    for i in 0..=d {
                        for j in i + 1..=d {
                            let (a, b) = (&root.vertices[i], &root.vertices[j]);
                            let m: Vec<Dyadic> = a.iter().zip(b).map(|(x, y)| Dyadic::midpoint(*x, *y)).collect();
                            assert!(verts.contains(&m), "d={d}: edge {i}-{j} not bisected");
                        }
                    }
                }
            }
            assert!(classes.len() <= d * (1 << d), "d={d}: {} shape classes", classes.len());
        }
    }
}

/// Sorted edge lengths relative to the longest edge.
fn fingerprint(pts: &[Vec<f64>]) -> Vec<i64> {
    let mut e = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            e.push(pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    let top = e.iter().cloned().fold(0.0, f64::max);
    let mut k: Vec<i64> = e.iter().map(|x| (x / top * 1e9).round() as i64).collect();
    k.sort();
    k
}

#[test]
fn greedy_runs_end_valid_with_shrinking_error() {
    let f = TestFunction::parse("tsingular beta=0.3").unwrap();
    let p0 = unit(1, 1.0, 2.0);
    let orders = PolyOrders::new(2, 2).unwrap();
    let cfg = AdaptConfig {
        orders,
        norms: NormParams::with_default_rho(2.0, 2.0).unwrap(),
        mode: MarkMode::Oracle,
        budget: Budget::default(),
        max_rounds: 60,
    };
    let mut last = f64::INFINITY;
    for delta in [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4] {
        let r = greedy_adapt(&p0, &f, &cfg, delta).unwrap();
        assert!(r.partition.validate().is_valid());
        assert!(r.error <= last * 1.01, "{delta}: {} after {last}", r.error);
        last = r.error;
    }
}
