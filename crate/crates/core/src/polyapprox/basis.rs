//! Tensor Lagrange basis on the reference prism `[0,1] x S_hat`.

use nalgebra::DMatrix;

use super::quadrature::{prism_rule, PrismRule};
use crate::error::{invalid, Error, Result};

/// Temporal order `r1` and spatial order `r2` (polynomial degrees `r - 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PolyOrders {
    pub r1: usize,
    pub r2: usize,
}

impl PolyOrders {
    pub fn new(r1: usize, r2: usize) -> Result<Self> {
        if r1 < 2 || r2 < 2 {
            return invalid(format!("orders must be at least 2, got ({r1}, {r2})"));
        }
        Ok(PolyOrders { r1, r2 })
    }

    /// Local space dimension `r1 * C(r2 - 1 + d, d)`.
    pub fn local_dim(&self, d: usize) -> usize {
        self.r1 * binomial(self.r2 - 1 + d, d)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Barycentric multi-indices `beta` with `|beta| = k`, ordered
/// lexicographically in `(beta_1, .., beta_d)`.
pub fn simplex_multi_indices(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            let mut b = vec![left];
            b.extend_from_slice(cur);
            out.push(b);
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(d, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, k, &mut Vec::new(), &mut out);
    out
}

/// 1-d Lagrange basis on the equispaced nodes `n / (r - 1)`.
pub fn time_basis(r: usize, tau: f64) -> Vec<f64> {
    let k = (r - 1) as f64;
    (0..r)
        .map(|n| {
            (0..r)
                .filter(|&m| m != n)
                .map(|m| (k * tau - m as f64) / (n as f64 - m as f64))
                .product()
        })
        .collect()
}

/// Simplex Lagrange basis for the principal lattice of order `r`.
pub fn space_basis(r: usize, betas: &[Vec<usize>], lam: &[f64]) -> Vec<f64> {
    let k = (r - 1) as f64;
    betas
        .iter()
        .map(|b| {
            b.iter()
                .zip(lam)
                .map(|(&bi, &l)| (0..bi).map(|j| (k * l - j as f64) / (j + 1) as f64).product::<f64>())
                .product()
        })
        .collect()
}

/// Reference data shared by all prisms of one `(d, orders)` pair.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub d: usize,
    pub orders: PolyOrders,
    pub space_nodes: Vec<Vec<usize>>,
    /// Local nodes as `(time index, space index)`, time-major.
    pub nodes: Vec<(usize, usize)>,
    pub rule: PrismRule,
    /// `basis_at_quad[(q, k)] = b_k(point q)`.
    pub basis_at_quad: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub mass_inv: DMatrix<f64>,
    /// Reference dual functions at the quadrature points.
    pub dual_at_quad: DMatrix<f64>,
}

impl ReferenceElement {
    pub fn new(d: usize, orders: PolyOrders) -> Result<Self> {
        let space_nodes = simplex_multi_indices(d, orders.r2 - 1);
        let nodes: Vec<(usize, usize)> =
            (0..orders.r1).flat_map(|n| (0..space_nodes.len()).map(move |j| (n, j))).collect();
        let rule = prism_rule(d, 2 * orders.r1 + 2, 2 * orders.r2 + 2);
        let nq = rule.points.len();
        let nb = nodes.len();
        let mut bq = DMatrix::zeros(nq, nb);
        for (q, (tau, lam)) in rule.points.iter().enumerate() {
            let tb = time_basis(orders.r1, *tau);
            let sb = space_basis(orders.r2, &space_nodes, lam);
            for (k, &(n, j)) in nodes.iter().enumerate() {
                bq[(q, k)] = tb[n] * sb[j];
            }
        }
        let mut weighted = bq.clone();
        for (q, w) in rule.weights.iter().enumerate() {
            weighted.row_mut(q).scale_mut(*w);
        }
        let mass = bq.transpose() * &weighted;
        let mass_inv = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("reference mass matrix".into()))?
            .inverse();
        let dual_at_quad = &bq * &mass_inv;
        Ok(ReferenceElement { d, orders, space_nodes, nodes, rule, basis_at_quad: bq, mass, mass_inv, dual_at_quad })
    }

    pub fn num_basis(&self) -> usize {
        self.nodes.len()
    }

    /// `|I_hat x S_hat| = 1/d!`.
    pub fn volume(&self) -> f64 {
        1.0 / (1..=self.d).map(|k| k as f64).product::<f64>()
    }

    /// Reference coordinates of local node `k`.
    pub fn node_coords(&self, k: usize) -> (f64, Vec<f64>) {
        let (n, j) = self.nodes[k];
        let kt = (self.orders.r1 - 1) as f64;
        let ks = (self.orders.r2 - 1) as f64;
        (n as f64 / kt, self.space_nodes[j].iter().map(|&b| b as f64 / ks).collect())
    }

    pub fn eval_basis(&self, tau: f64, lam: &[f64]) -> Vec<f64> {
        let tb = time_basis(self.orders.r1, tau);
        let sb = space_basis(self.orders.r2, &self.space_nodes, lam);
        self.nodes.iter().map(|&(n, j)| tb[n] * sb[j]).collect()
    }

    /// Reference lattice of `(4 r1 + 1) x` simplex points with `4 r2` subdivisions,
    /// used for sup-norm estimates.
    pub fn sup_lattice(&self) -> Vec<(f64, Vec<f64>)> {
        let nt = 4 * self.orders.r1;
        let ns = 4 * self.orders.r2;
        let betas = simplex_multi_indices(self.d, ns);
        let mut out = Vec::with_capacity((nt + 1) * betas.len());
        for i in 0..=nt {
            for b in &betas {
                out.push((i as f64 / nt as f64, b.iter().map(|&x| x as f64 / ns as f64).collect()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_dimensions() {
        assert_eq!(PolyOrders::new(2, 2).unwrap().local_dim(2), 6);
        assert_eq!(PolyOrders::new(3, 2).unwrap().local_dim(1), 6);
        assert_eq!(PolyOrders::new(2, 3).unwrap().local_dim(2), 12);
        assert!(PolyOrders::new(1, 2).is_err());
        assert_eq!(simplex_multi_indices(2, 2).len(), 6);
        assert_eq!(simplex_multi_indices(2, 1), vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]);
    }

    #[test]
    fn nodal_basis_is_a_kronecker_delta() {
        for (d, r1, r2) in [(1, 2, 2), (1, 3, 4), (2, 2, 3), (2, 3, 2), (3, 2, 3)] {
            let re = ReferenceElement::new(d, PolyOrders::new(r1, r2).unwrap()).unwrap();
            for k in 0..re.num_basis() {
                let (t, l) = re.node_coords(k);
                let v = re.eval_basis(t, &l);
                for (m, x) in v.iter().enumerate() {
                    assert!((x - if m == k { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn reference_mass_matches_closed_form() {
        // r = (2, 2), d = 1: time mass [[1/3, 1/6], [1/6, 1/3]] tensor segment mass
        let re = ReferenceElement::new(1, PolyOrders::new(2, 2).unwrap()).unwrap();
        let m1 = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];
        for a in 0..4 {
            for b in 0..4 {
                let exact = m1[a / 2][b / 2] * m1[a % 2][b % 2];
                assert!((re.mass[(a, b)] - exact).abs() < 1e-15);
            }
        }
        let id = &re.mass * &re.mass_inv;
        assert!((id - DMatrix::identity(4, 4)).amax() < 1e-13);
    }
}
