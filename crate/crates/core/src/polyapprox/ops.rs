use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::fit::{lp_fit, LpFit};
use super::{barycentric, PolyOrders, ReferenceElement};
use crate::error::{Error, Result};
use crate::ids::PrismId;
use crate::mesh::{LeafIndex, Partition};
use crate::nodes::NodeLattice;

/// Affine frame of one leaf: reference `(tau, lambda)` to physical `(t, x)`.
#[derive(Clone, Debug)]
pub struct LeafFrame {
    pub t0: f64,
    pub t1: f64,
    pub verts: Vec<Vec<f64>>,
    /// `|I x S| / |I_hat x S_hat|`.
    pub jac: f64,
}

impl LeafFrame {
    pub fn new(p: &Partition, leaf: PrismId) -> Self {
        let (t0, t1) = p.prism_interval(leaf).bounds();
        let verts = p.simplex_points(p.prism(leaf).simplex);
        let fact: f64 = (1..=p.d()).map(|k| k as f64).product();
        LeafFrame { t0, t1, verts, jac: p.prism_measure(leaf) * fact }
    }

    pub fn map(&self, tau: f64, lam: &[f64]) -> (f64, Vec<f64>) {
        let d = self.verts[0].len();
        let x = (0..d).map(|c| lam.iter().zip(&self.verts).map(|(l, v)| l * v[c]).sum()).collect();
        (self.t0 + tau * (self.t1 - self.t0), x)
    }

    pub fn values_at<F: Fn(f64, &[f64]) -> f64>(&self, pts: &[(f64, Vec<f64>)], f: &F) -> DVector<f64> {
        DVector::from_iterator(
            pts.len(),
            pts.iter().map(|(tau, lam)| {
                let (t, x) = self.map(*tau, lam);
                f(t, &x)
            }),
        )
    }

    /// Physical quadrature weights.
    pub fn weights(&self, re: &ReferenceElement) -> Vec<f64> {
        re.rule.weights.iter().map(|w| w * self.jac).collect()
    }
}

/// Dual functions of a leaf at its quadrature points, one column per local node.
pub fn dual_functions(p: &Partition, re: &ReferenceElement, leaf: PrismId) -> DMatrix<f64> {
    &re.dual_at_quad / LeafFrame::new(p, leaf).jac
}

/// `max |int b_mu zeta_nu - delta|` on one leaf, integrated with the physical rule.
pub fn biorthogonality_residual(p: &Partition, re: &ReferenceElement, leaf: PrismId) -> f64 {
    let frame = LeafFrame::new(p, leaf);
    let zeta = dual_functions(p, re, leaf);
    let mut wb = re.basis_at_quad.clone();
    for (q, w) in frame.weights(re).iter().enumerate() {
        wb.row_mut(q).scale_mut(*w);
    }
    let g = wb.transpose() * zeta;
    (&g - DMatrix::identity(g.nrows(), g.ncols())).amax()
}

/// Piecewise polynomial given by local nodal values; continuous when built
/// from free-node coefficients.
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub orders: PolyOrders,
    pub reference: Arc<ReferenceElement>,
    /// Free-node coefficients, empty for a discontinuous function.
    pub coeffs: Vec<f64>,
    pub local: BTreeMap<PrismId, Vec<f64>>,
}

impl FeFunction {
    pub fn from_coeffs(lat: &NodeLattice, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), lat.num_free());
        let local = lat.local.keys().map(|&l| (l, lat.local_values(l, &coeffs))).collect();
        FeFunction { orders: lat.orders, reference: lat.reference.clone(), coeffs, local }
    }

    /// Element of the discontinuous space with the given nodal values per leaf.
    pub fn discontinuous(reference: Arc<ReferenceElement>, local: BTreeMap<PrismId, Vec<f64>>) -> Self {
        FeFunction { orders: reference.orders, reference, coeffs: Vec::new(), local }
    }

    pub fn is_continuous_rep(&self) -> bool {
        !self.coeffs.is_empty()
    }

    /// Value of the polynomial of `leaf` at a point (extrapolating outside).
    pub fn eval_on(&self, p: &Partition, leaf: PrismId, t: f64, x: &[f64]) -> f64 {
        let (t0, t1) = p.prism_interval(leaf).bounds();
        let lam = barycentric(&p.simplex_points(p.prism(leaf).simplex), x);
        let b = self.reference.eval_basis((t - t0) / (t1 - t0), &lam);
        b.iter().zip(&self.local[&leaf]).map(|(b, v)| b * v).sum()
    }

    pub fn eval(&self, p: &Partition, index: &LeafIndex, t: f64, x: &[f64]) -> Option<f64> {
        index.locate(p, t, x).map(|l| self.eval_on(p, l, t, x))
    }

    pub fn at_quadrature(&self, leaf: PrismId) -> DVector<f64> {
        &self.reference.basis_at_quad * DVector::from_column_slice(&self.local[&leaf])
    }

    pub fn add_scaled(&self, a: f64, other: &FeFunction, b: f64) -> FeFunction {
        let local = self
            .local
            .iter()
            .map(|(l, v)| (*l, v.iter().zip(&other.local[l]).map(|(x, y)| a * x + b * y).collect()))
            .collect();
        let coeffs = if self.coeffs.len() == other.coeffs.len() {
            self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect()
        } else {
            Vec::new()
        };
        FeFunction { orders: self.orders, reference: self.reference.clone(), coeffs, local }
    }
}

/// `Q_P g`, where `g_at_quad(leaf)` returns `g` restricted to `leaf` at the
/// leaf's quadrature points. Each coefficient is integrated on the owner with
/// the lowest id.
pub fn q_operator<G>(lat: &NodeLattice, g_at_quad: G) -> FeFunction
where
    G: Fn(PrismId) -> DVector<f64> + Sync,
{
    let re = &lat.reference;
    let owner = |i: usize| *lat.node(lat.free[i]).owners.iter().min().unwrap();
    let owners: BTreeSet<PrismId> = (0..lat.num_free()).map(owner).collect();
    let gw: HashMap<PrismId, DVector<f64>> = owners
        .into_par_iter()
        .map(|o| {
            let mut g = g_at_quad(o);
            for (q, w) in re.rule.weights.iter().enumerate() {
                g[q] *= w;
            }
            (o, g)
        })
        .collect();
    let coeffs = (0..lat.num_free())
        .map(|i| {
            let o = owner(i);
            let k = lat.local[&o].iter().position(|&n| n == lat.free[i]).unwrap();
            gw[&o].dot(&re.dual_at_quad.column(k))
        })
        .collect();
    FeFunction::from_coeffs(lat, coeffs)
}

/// `Q_P f` for a function defined everywhere.
pub fn q_of_function<F>(p: &Partition, lat: &NodeLattice, f: &F) -> FeFunction
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let pts = &lat.reference.rule.points;
    q_operator(lat, |l| LeafFrame::new(p, l).values_at(pts, f))
}

/// `Q_P g` for a piecewise polynomial `g`.
pub fn q_of_piecewise(lat: &NodeLattice, g: &FeFunction) -> FeFunction {
    q_operator(lat, |l| g.at_quadrature(l))
}

#[derive(Clone, Debug)]
pub struct LocalFit {
    /// Nodal values on the leaf.
    pub values: Vec<f64>,
    pub error: f64,
    pub heuristic: bool,
}

fn sup_basis(re: &ReferenceElement) -> (Vec<(f64, Vec<f64>)>, DMatrix<f64>) {
    let pts = re.sup_lattice();
    let nb = re.num_basis();
    let mut a = DMatrix::zeros(pts.len(), nb);
    for (i, (tau, lam)) in pts.iter().enumerate() {
        for (k, v) in re.eval_basis(*tau, lam).into_iter().enumerate() {
            a[(i, k)] = v;
        }
    }
    (pts, a)
}

/// Best `L_rho` approximation of `f` on one leaf from the local polynomial space.
pub fn best_approx_leaf<F>(p: &Partition, re: &ReferenceElement, leaf: PrismId, f: &F, rho: f64) -> Result<LocalFit>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let frame = LeafFrame::new(p, leaf);
    let fit = if rho.is_infinite() {
        let (pts, a) = sup_basis(re);
        let w = vec![1.0; pts.len()];
        lp_fit(&a, &frame.values_at(&pts, f), &w, rho)?
    } else {
        lp_fit(&re.basis_at_quad, &frame.values_at(&re.rule.points, f), &frame.weights(re), rho)?
    };
    Ok(LocalFit { values: fit.coeffs.iter().copied().collect(), error: fit.error, heuristic: fit.heuristic })
}

/// Scaled monomials `t^a x^alpha`, `a < r1`, `|alpha| < r2`, centred on a box.
fn monomial_exponents(d: usize, orders: PolyOrders) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 0..orders.r1 {
        for alpha in super::basis::simplex_multi_indices(d, orders.r2 - 1) {
            let mut e = vec![a];
            e.extend_from_slice(&alpha[1..]);
            out.push(e);
        }
    }
    out
}

/// `E(f, Pi, D)_rho` for `D` the union of the given leaves, fitting one
/// polynomial over all of them.
pub fn best_approx_region<F>(
    p: &Partition,
    re: &ReferenceElement,
    leaves: &BTreeSet<PrismId>,
    f: &F,
    rho: f64,
) -> Result<LpFit>
where
    F: Fn(f64, &[f64]) -> f64,
{
    if leaves.is_empty() {
        return Err(Error::InvalidInput("empty region".into()));
    }
    let d = p.d();
    let sup = if rho.is_infinite() { Some(re.sup_lattice()) } else { None };
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut w = Vec::new();
    let mut vals = Vec::new();
    for &l in leaves {
        let frame = LeafFrame::new(p, l);
        let (ref_pts, ws): (&[(f64, Vec<f64>)], Vec<f64>) = match &sup {
            Some(s) => (s, vec![1.0; s.len()]),
            None => (&re.rule.points, frame.weights(re)),
        };
        for ((tau, lam), wq) in ref_pts.iter().zip(ws) {
            let (t, x) = frame.map(*tau, lam);
            vals.push(f(t, &x));
            pts.push((t, x));
            w.push(wq);
        }
    }
    let mut lo = vec![f64::INFINITY; d + 1];
    let mut hi = vec![f64::NEG_INFINITY; d + 1];
    for (t, x) in &pts {
        for (c, v) in std::iter::once(t).chain(x).enumerate() {
            lo[c] = lo[c].min(*v);
            hi[c] = hi[c].max(*v);
        }
    }
    let exps = monomial_exponents(d, re.orders);
    let a = DMatrix::from_fn(pts.len(), exps.len(), |i, j| {
        let (t, x) = &pts[i];
        std::iter::once(t)
            .chain(x)
            .enumerate()
            .map(|(c, v)| {
                let mid = 0.5 * (lo[c] + hi[c]);
                let h = (0.5 * (hi[c] - lo[c])).max(1e-300);
                ((v - mid) / h).powi(exps[j][c] as i32)
            })
            .product()
    });
    lp_fit(&a, &DVector::from_vec(vals), &w, rho)
}

/// `pi_{rho,P} f = Q_P B_rho f` with the local best-approximation errors.
pub fn quasi_interpolate<F>(
    p: &Partition,
    lat: &NodeLattice,
    f: &F,
    rho: f64,
) -> Result<(FeFunction, BTreeMap<PrismId, LocalFit>)>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let re = &lat.reference;
    let leaves: Vec<PrismId> = p.leaves().collect();
    let fits: BTreeMap<PrismId, LocalFit> = leaves
        .par_iter()
        .map(|&l| best_approx_leaf(p, re, l, f, rho).map(|fit| (l, fit)))
        .collect::<Result<_>>()?;
    let dc = FeFunction::discontinuous(re.clone(), fits.iter().map(|(l, f)| (*l, f.values.clone())).collect());
    Ok((q_of_piecewise(lat, &dc), fits))
}

/// `L_2` orthogonal projection of `f` onto the continuous space, solved
/// matrix-free by Jacobi-preconditioned conjugate gradients.
pub fn least_squares_projection<F>(p: &Partition, lat: &NodeLattice, f: &F) -> Result<FeFunction>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let re = &lat.reference;
    let n = lat.num_free();
    struct LeafOp<'a> {
        jac: f64,
        cons: Vec<&'a [(usize, f64)]>,
    }
    let leaves: Vec<PrismId> = p.leaves().collect();
    let ops: Vec<LeafOp> = leaves
        .iter()
        .map(|&l| LeafOp { jac: LeafFrame::new(p, l).jac, cons: lat.local[&l].iter().map(|&id| lat.constraint(id)).collect() })
        .collect();
    let mut rhs = DVector::<f64>::zeros(n);
    let loads: Vec<DVector<f64>> = leaves
        .par_iter()
        .map(|&l| {
            let frame = LeafFrame::new(p, l);
            let mut fw = frame.values_at(&re.rule.points, f);
            for (q, w) in frame.weights(re).iter().enumerate() {
                fw[q] *= w;
            }
            re.basis_at_quad.transpose() * fw
        })
        .collect();
    let mut diag = DVector::<f64>::zeros(n);
    for (op, bl) in ops.iter().zip(&loads) {
        for (a, ca) in op.cons.iter().enumerate() {
            for &(i, wi) in *ca {
                rhs[i] += wi * bl[a];
            }
        }
        // diagonal of C^T M C
        for i_set in op.cons.iter().flat_map(|c| c.iter().map(|&(i, _)| i)).collect::<BTreeSet<_>>() {
            let col: DVector<f64> = DVector::from_iterator(
                op.cons.len(),
                op.cons.iter().map(|c| c.iter().filter(|&&(k, _)| k == i_set).map(|&(_, w)| w).sum()),
            );
            diag[i_set] += op.jac * (col.transpose() * &re.mass * &col)[0];
        }
    }
    let apply = |x: &DVector<f64>| -> DVector<f64> {
        let mut y = DVector::zeros(n);
        for op in &ops {
            let loc = DVector::from_iterator(op.cons.len(), op.cons.iter().map(|c| c.iter().map(|&(i, w)| w * x[i]).sum()));
            let ml = &re.mass * loc * op.jac;
            for (a, ca) in op.cons.iter().enumerate() {
                for &(i, wi) in *ca {
                    y[i] += wi * ml[a];
                }
            }
        }
        y
    };
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Singular("global mass matrix".into()));
    }
    let mut x = rhs.component_div(&diag);
    let mut r = &rhs - apply(&x);
    let mut z = r.component_div(&diag);
    let mut dir = z.clone();
    let mut rz = r.dot(&z);
    let target = 1e-14 * rhs.norm().max(1e-300);
    for _ in 0..10 * n + 100 {
        if r.norm() <= target {
            break;
        }
        let ad = apply(&dir);
        let alpha = rz / dir.dot(&ad);
        x.axpy(alpha, &dir, 1.0);
        r.axpy(-alpha, &ad, 1.0);
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        dir = &z + &dir * (rz_new / rz);
        rz = rz_new;
    }
    Ok(FeFunction::from_coeffs(lat, x.iter().copied().collect()))
}

/// `||f - F||_{L_p(leaf)}^p` for finite `p`, or the sampled max for `p = inf`.
fn leaf_error_pow<F>(p: &Partition, fe: &FeFunction, leaf: PrismId, f: &F, pn: f64, sup: &(Vec<(f64, Vec<f64>)>, DMatrix<f64>)) -> f64
where
    F: Fn(f64, &[f64]) -> f64,
{
    let frame = LeafFrame::new(p, leaf);
    let v = DVector::from_column_slice(&fe.local[&leaf]);
    if pn.is_infinite() {
        let r = frame.values_at(&sup.0, f) - &sup.1 * v;
        r.amax()
    } else {
        let re = &fe.reference;
        let r = frame.values_at(&re.rule.points, f) - &re.basis_at_quad * v;
        r.iter().zip(frame.weights(re)).map(|(x, w)| w * x.abs().powf(pn)).sum()
    }
}

/// Per-leaf `||f - F||_{L_p(leaf)}`. The `p = inf` value is a max over the
/// reference lattice of [`ReferenceElement::sup_lattice`].
pub fn leaf_errors<F>(p: &Partition, fe: &FeFunction, f: &F, pn: f64) -> BTreeMap<PrismId, f64>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let sup = if pn.is_infinite() { sup_basis(&fe.reference) } else { (Vec::new(), DMatrix::zeros(0, 0)) };
    let leaves: Vec<PrismId> = fe.local.keys().copied().collect();
    leaves
        .par_iter()
        .map(|&l| {
            let e = leaf_error_pow(p, fe, l, f, pn, &sup);
            (l, if pn.is_infinite() { e } else { e.powf(1.0 / pn) })
        })
        .collect()
}

/// `||f - F||_{L_p}` over the whole domain.
pub fn global_error<F>(p: &Partition, fe: &FeFunction, f: &F, pn: f64) -> f64
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let per = leaf_errors(p, fe, f, pn);
    if pn.is_infinite() {
        per.values().fold(0.0, |m, &e| m.max(e))
    } else {
        per.values().map(|e| e.powf(pn)).sum::<f64>().powf(1.0 / pn)
    }
}

/// Nodal interpolant at the free nodes.
pub fn interpolate_free<F>(lat: &NodeLattice, f: &F) -> FeFunction
where
    F: Fn(f64, &[f64]) -> f64,
{
    let coeffs = lat.free.iter().map(|&n| f(lat.node(n).t, &lat.node(n).x)).collect();
    FeFunction::from_coeffs(lat, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyParams;
    use crate::mesh::SpatialMesh;
    use crate::nodes::classify;
    use crate::refine::patch_refine;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn refined(d: usize, splits: usize, seed: u64) -> Partition {
        let m = if d == 1 { SpatialMesh::interval(0.0, 1.0, 1).unwrap() } else { SpatialMesh::kuhn_box(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap() };
        let mut p = Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(1.0, 1.0, d).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..splits {
            let leaves: Vec<PrismId> = p.leaves().collect();
            let l = leaves[rng.random_range(0..leaves.len())];
            patch_refine(&mut p, l).unwrap();
        }
        p
    }

    #[test]
    fn duals_are_biorthogonal() {
        let p = refined(2, 15, 1);
        let re = ReferenceElement::new(2, PolyOrders::new(2, 3).unwrap()).unwrap();
        for l in p.leaves() {
            assert!(biorthogonality_residual(&p, &re, l) < 1e-12);
        }
    }

    #[test]
    fn q_reproduces_the_finite_element_space() {
        for d in [1, 2] {
            let p = refined(d, 20, 7);
            let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
            assert!(lat.num_hanging() > 0);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let c: Vec<f64> = (0..lat.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = FeFunction::from_coeffs(&lat, c.clone());
            let q = q_of_piecewise(&lat, &f);
            for (a, b) in q.coeffs.iter().zip(&c) {
                assert!((a - b).abs() < 1e-10);
            }
            let one = q_of_function(&p, &lat, &|_, _| 1.0);
            assert!(one.coeffs.iter().all(|c| (c - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn resolved_functions_are_continuous() {
        let p = refined(2, 25, 11);
        let lat = classify(&p, PolyOrders::new(3, 3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..lat.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = FeFunction::from_coeffs(&lat, c);
        let index = p.leaf_index();
        let mut checked = 0;
        for _ in 0..400 {
            let t = rng.random_range(0.0..1.0);
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let owners = index.locate_all(&p, t, &x);
            let a = owners[0];
            // move to the boundary of a's interval and compare against the other side
            let (t0, t1) = p.prism_interval(a).bounds();
            for tb in [t0, t1] {
                for b in index.locate_all(&p, tb, &x) {
                    checked += 1;
                    assert!((f.eval_on(&p, a, tb, &x) - f.eval_on(&p, b, tb, &x)).abs() < 1e-10);
                }
            }
        }
        assert!(checked > 400);
    }

    #[test]
    fn quasi_interpolant_reproduces_polynomials() {
        let p = refined(2, 20, 9);
        let lat = classify(&p, PolyOrders::new(3, 2).unwrap()).unwrap();
        let poly = |t: f64, x: &[f64]| 1.0 - 2.0 * t * t + 3.0 * x[0] - x[1] * t;
        for rho in [1.0, 2.0, f64::INFINITY] {
            let (fe, _) = quasi_interpolate(&p, &lat, &poly, rho).unwrap();
            assert!(global_error(&p, &fe, &poly, 2.0) < 1e-10);
        }
    }

    #[test]
    fn linear_time_error_on_one_prism() {
        let p = refined(1, 0, 0);
        let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
        let (fe, fits) = quasi_interpolate(&p, &lat, &|t, _| t * t, 2.0).unwrap();
        // t^2 - (t - 1/6) has squared norm 1/180
        let want = (1.0f64 / 180.0).sqrt();
        assert!((global_error(&p, &fe, &|t, _| t * t, 2.0) - want).abs() < 1e-12);
        assert!((fits.values().next().unwrap().error - want).abs() < 1e-12);
        let lin = quasi_interpolate(&p, &lat, &|t, _| t, 2.0).unwrap().0;
        assert!(global_error(&p, &lin, &|t, _| t, 2.0) < 1e-14);
    }

    #[test]
    fn projection_beats_quasi_interpolation() {
        let p = refined(2, 30, 4);
        let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
        let f = |t: f64, x: &[f64]| (3.0 * t).sin() * (2.0 * x[0] + x[1]).cos();
        let ls = least_squares_projection(&p, &lat, &f).unwrap();
        let (pi, _) = quasi_interpolate(&p, &lat, &f, 2.0).unwrap();
        let (e_ls, e_pi) = (global_error(&p, &ls, &f, 2.0), global_error(&p, &pi, &f, 2.0));
        assert!(e_ls <= e_pi && e_pi < 10.0 * e_ls, "{e_ls} {e_pi}");
    }

    #[test]
    fn region_fit_matches_leaf_fit_on_one_leaf() {
        let p = refined(2, 5, 2);
        let re = ReferenceElement::new(2, PolyOrders::new(2, 2).unwrap()).unwrap();
        let f = |t: f64, x: &[f64]| (t + x[0] * x[1]).exp();
        let l = p.leaves().next().unwrap();
        let a = best_approx_leaf(&p, &re, l, &f, 2.0).unwrap().error;
        let b = best_approx_region(&p, &re, &[l].into_iter().collect(), &f, 2.0).unwrap().error;
        assert!((a - b).abs() < 1e-10 * a.max(1e-300));
    }
}
