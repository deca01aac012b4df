//! Discrete `l_p` polynomial fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LpFit {
    pub coeffs: DVector<f64>,
    /// Weighted `l_p` norm of the residual (max norm for `p = inf`).
    pub error: f64,
    /// Set for `p < 1`, where the iteration has no convergence guarantee.
    pub heuristic: bool,
}

fn lp_norm(r: &DVector<f64>, w: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    } else {
        r.iter().zip(w).map(|(x, w)| w * x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn weighted_ls(a: &DMatrix<f64>, f: &DVector<f64>, w: &[f64]) -> Result<DVector<f64>> {
    let mut aw = a.clone();
    let mut fw = f.clone();
    for (i, &wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        aw.row_mut(i).scale_mut(s);
        fw[i] *= s;
    }
    let svd = aw.svd(true, true);
    let tol = 1e-13 * svd.singular_values.max();
    svd.solve(&fw, tol).map_err(|e| Error::Singular(e.to_string()))
}

/// Minimise the weighted `l_p` residual of `a c - f`.
///
/// `p = 2` is a direct least-squares solve. Finite `p >= 1` uses iteratively
/// reweighted least squares to relative change `1e-8`; `p < 1` continues the
/// same iteration from the `l_1` solution. `p = inf` is solved as a linear
/// program and ignores `w`.
pub fn lp_fit(a: &DMatrix<f64>, f: &DVector<f64>, w: &[f64], p: f64) -> Result<LpFit> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("norm exponent {p} must be positive")));
    }
    let scale = f.amax().max(1e-300);
    if p == 2.0 {
        let c = weighted_ls(a, f, w)?;
        let error = lp_norm(&(a * &c - f), w, 2.0);
        return Ok(LpFit { coeffs: c, error, heuristic: false });
    }
    if p.is_infinite() {
        return minimax(a, f);
    }
    let irls = |start: DVector<f64>, q: f64| -> Result<DVector<f64>> {
        let mut c = start;
        let eps = 1e-10 * scale;
        for _ in 0..300 {
            let r = a * &c - f;
            let ww: Vec<f64> = r.iter().zip(w).map(|(x, wi)| wi * x.abs().max(eps).powf(q - 2.0)).collect();
            let next = weighted_ls(a, f, &ww)?;
            let change = (&next - &c).amax() / next.amax().max(1e-300);
            c = next;
            if change < 1e-8 {
                break;
            }
        }
        Ok(c)
    };
    let c0 = weighted_ls(a, f, w)?;
    let (c, heuristic) = if p >= 1.0 { (irls(c0, p)?, false) } else { (irls(irls(c0, 1.0)?, p)?, true) };
    let error = lp_norm(&(a * &c - f), w, p);
    Ok(LpFit { coeffs: c, error, heuristic })
}

/// Chebyshev fit as the linear program `min e` subject to `|a c - f| <= e`.
fn minimax(a: &DMatrix<f64>, f: &DVector<f64>) -> Result<LpFit> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let c: Vec<_> = (0..a.ncols()).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let e = lp.add_var(1.0, (0.0, f64::INFINITY));
    for i in 0..a.nrows() {
        let row: Vec<_> = c.iter().enumerate().map(|(j, &v)| (v, a[(i, j)])).collect();
        let mut up = row.clone();
        up.push((e, -1.0));
        lp.add_constraint(&up[..], ComparisonOp::Le, f[i]);
        let mut down = row;
        down.push((e, 1.0));
        lp.add_constraint(&down[..], ComparisonOp::Ge, f[i]);
    }
    let sol = lp.solve().map_err(|err| Error::Singular(format!("minimax fit: {err}")))?;
    let coeffs = DVector::from_iterator(c.len(), c.iter().map(|&v| sol[v]));
    let error = (a * &coeffs - f).amax();
    Ok(LpFit { coeffs, error, heuristic: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_problem() -> (DMatrix<f64>, DVector<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let a = DMatrix::from_fn(xs.len(), 2, |i, j| xs[i].powi(j as i32));
        let f = DVector::from_iterator(xs.len(), xs.iter().map(|x| x * x));
        let w = vec![1.0 / 41.0; xs.len()];
        (a, f, w)
    }

    #[test]
    fn minimax_line_for_parabola() {
        // best uniform linear fit of x^2 on [0,1] is x - 1/8, error 1/8
        let (a, f, w) = line_problem();
        let fit = lp_fit(&a, &f, &w, f64::INFINITY).unwrap();
        assert!((fit.error - 0.125).abs() < 1e-6, "{}", fit.error);
        assert!((fit.coeffs[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn exponents_order_the_errors() {
        let (a, f, w) = line_problem();
        let e: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|&p| lp_fit(&a, &f, &w, p).unwrap().error).collect();
        assert!(e[0] <= e[1] + 1e-12 && e[1] <= e[2] + 1e-12, "{e:?}");
        let half = lp_fit(&a, &f, &w, 0.5).unwrap();
        assert!(half.heuristic && half.error.is_finite());
    }

    #[test]
    fn exact_members_have_zero_residual() {
        let (a, _, w) = line_problem();
        let f = &a * DVector::from_vec(vec![0.3, -2.0]);
        for p in [0.5, 1.0, 2.0, 3.0, f64::INFINITY] {
            assert!(lp_fit(&a, &f, &w, p).unwrap().error < 1e-10);
        }
    }
}
