//! Local polynomial spaces, quadrature and the approximation operators.

pub mod basis;
pub mod fit;
mod ops;
pub mod quadrature;

pub use basis::{PolyOrders, ReferenceElement};
pub use fit::{lp_fit, LpFit};
pub use ops::*;
pub use quadrature::{prism_rule, simplex_rule, PrismRule, SimplexRule};

/// Barycentric coordinates of `x` in the simplex with vertices `v`.
pub fn barycentric(v: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let d = v.len() - 1;
    let m = nalgebra::DMatrix::from_fn(d, d, |r, c| v[c + 1][r] - v[0][r]);
    let rhs = nalgebra::DVector::from_fn(d, |r, _| x[r] - v[0][r]);
    let lam = m.lu().solve(&rhs).unwrap_or_else(|| nalgebra::DVector::from_element(d, f64::NAN));
    let mut out = Vec::with_capacity(d + 1);
    out.push(1.0 - lam.sum());
    out.extend(lam.iter());
    out
}

/// Integrability `p`, fine index `q` and fitting exponent `rho <= p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub rho: f64,
}

impl NormParams {
    pub fn new(p: f64, q: f64, rho: f64) -> crate::Result<Self> {
        if !(p > 0.0 && q > 0.0 && rho > 0.0) || rho > p {
            return Err(crate::Error::InvalidInput(format!("need 0 < rho <= p and q > 0, got p={p} q={q} rho={rho}")));
        }
        Ok(NormParams { p, q, rho })
    }

    /// `rho = min(p, q, 2)`.
    pub fn with_default_rho(p: f64, q: f64) -> crate::Result<Self> {
        Self::new(p, q, p.min(q).min(2.0))
    }
}
