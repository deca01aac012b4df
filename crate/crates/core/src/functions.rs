//! Built-in analytic test functions, selected by name and `key=value` parameters,
//! e.g. `tsingular beta=0.75` or `xcorner alpha=0.6`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Axis-aligned description of a cell handed to the oracle.
#[derive(Clone, Debug)]
pub struct Cell {
    pub t0: f64,
    pub t1: f64,
    pub xlo: Vec<f64>,
    pub xhi: Vec<f64>,
    pub diam_x: f64,
}

type Eval = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
/// Closed-form proxies for the sup-norm polynomial error in time (order `r1`)
/// and in space (order `r2`) on a cell.
type Oracle = Arc<dyn Fn(&Cell, usize, usize) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    eval: Eval,
    oracle: Option<Oracle>,
    /// Degrees in `(t, x)` when the function is a polynomial.
    pub degrees: Option<(usize, usize)>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({self})")
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

pub const NAMES: &[&str] = &["smooth-sine", "tsingular", "tkink", "xcorner", "front", "poly", "const"];

fn falling(beta: f64, r: usize) -> f64 {
    (0..r).map(|k| beta - k as f64).product::<f64>().abs()
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// Sup error of the best degree `r-1` fit to `|s|^beta` on `[a, a+h]`, `a >= 0`, up to constants.
fn power_error(beta: f64, a: f64, h: f64, r: usize) -> f64 {
    if (beta.fract() == 0.0 && beta >= 0.0 && (beta as usize) < r) || h <= 0.0 {
        return 0.0;
    }
    let far = if a > 0.0 { h.powi(r as i32) * falling(beta, r) * a.powf(beta - r as f64) / factorial(r) } else { f64::INFINITY };
    far.min(h.powf(beta))
}

impl TestFunction {
    /// Parse `name key=value ...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut it = spec.split_whitespace();
        let name = it.next().ok_or_else(|| Error::Config("empty function spec".into()))?;
        let mut params = BTreeMap::new();
        for kv in it {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v.parse().map_err(|_| Error::Config(format!("bad number in '{kv}'")))?;
            params.insert(k.to_string(), v);
        }
        Self::new(name, params)
    }

    pub fn new(name: &str, mut params: BTreeMap<String, f64>) -> Result<Self> {
        let mut take = |k: &str, default: f64| *params.entry(k.to_string()).or_insert(default);
        let (eval, oracle, degrees): (Eval, Option<Oracle>, _) = match name {
            "smooth-sine" => {
                let w = take("freq", 1.0) * PI;
                (
                    Arc::new(move |t, x| (w * t).sin() * x.iter().map(|&xi| (w * xi).sin()).product::<f64>()),
                    Some(Arc::new(move |c: &Cell, r1, r2| {
                        let ht = c.t1 - c.t0;
                        ((w * ht).powi(r1 as i32) / factorial(r1), (w * c.diam_x).powi(r2 as i32) / factorial(r2))
                    })),
                    None,
                )
            }
            "tsingular" => {
                let beta = take("beta", 0.75);
                if beta <= 0.0 {
                    return Err(Error::Config("tsingular needs beta > 0".into()));
                }
                (
                    Arc::new(move |t, _| t.max(0.0).powf(beta)),
                    Some(Arc::new(move |c: &Cell, r1, _| (power_error(beta, c.t0.max(0.0), c.t1 - c.t0, r1), 0.0))),
                    None,
                )
            }
            "tkink" => {
                let c0 = take("center", 0.5);
                (
                    Arc::new(move |t, _| (t - c0).abs()),
                    Some(Arc::new(move |c: &Cell, _, _| {
                        let inside = c.t0 < c0 && c0 < c.t1;
                        (if inside { (c.t1 - c.t0) / 4.0 } else { 0.0 }, 0.0)
                    })),
                    None,
                )
            }
            "xcorner" => {
                let alpha = take("alpha", 0.6);
                if alpha <= 0.0 {
                    return Err(Error::Config("xcorner needs alpha > 0".into()));
                }
                (
                    Arc::new(move |_, x| x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(alpha)),
                    Some(Arc::new(move |c: &Cell, _, r2| {
                        let near: f64 = c.xlo.iter().zip(&c.xhi).map(|(&lo, &hi)| (lo.max(0.0).min(hi)).powi(2)).sum::<f64>().sqrt();
                        (0.0, power_error(alpha, near, c.diam_x, r2))
                    })),
                    None,
                )
            }
            "front" => {
                let width = take("width", 0.05);
                let speed = take("speed", 0.5);
                (
                    Arc::new(move |t, x| ((x[0] - 0.25 - speed * t) / width).tanh()),
                    None,
                    None,
                )
            }
            "poly" => {
                let (dt, dx) = (take("tdeg", 1.0), take("xdeg", 1.0));
                if dt < 0.0 || dx < 0.0 || dt.fract() != 0.0 || dx.fract() != 0.0 {
                    return Err(Error::Config("poly needs integer tdeg, xdeg >= 0".into()));
                }
                let (dt, dx) = (dt as i32, dx as i32);
                (
                    Arc::new(move |t, x| (1.0 + 0.5 * t).powi(dt) * (1.0 - 0.5 * x.iter().sum::<f64>()).powi(dx)),
                    None,
                    Some((dt as usize, dx as usize)),
                )
            }
            "const" => {
                let v = take("value", 1.0);
                (Arc::new(move |_, _| v), None, Some((0, 0)))
            }
            _ => return Err(Error::Config(format!("unknown function '{name}' (known: {})", NAMES.join(", ")))),
        };
        Ok(TestFunction { name: name.to_string(), params, eval, oracle, degrees })
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.eval)(t, x)
    }

    /// True when the function lies in the local space of orders `(r1, r2)`.
    pub fn is_in_space(&self, r1: usize, r2: usize) -> bool {
        self.degrees.is_some_and(|(dt, dx)| dt < r1 && dx < r2)
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some() || self.degrees.is_some()
    }

    /// Closed-form `(time, space)` local error proxies, or `None` if the
    /// function has no oracle.
    pub fn oracle_errors(&self, cell: &Cell, r1: usize, r2: usize) -> Option<(f64, f64)> {
        if self.is_in_space(r1, r2) {
            return Some((0.0, 0.0));
        }
        self.oracle.as_ref().map(|o| o(cell, r1, r2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_parameters() {
        let f = TestFunction::parse("tsingular beta=0.5").unwrap();
        assert_eq!(f.eval(0.25, &[0.3]), 0.5);
        assert_eq!(f.to_string(), "tsingular beta=0.5");
        let g = TestFunction::parse("xcorner").unwrap();
        assert!((g.eval(0.0, &[3.0, 4.0]) - 5f64.powf(0.6)).abs() < 1e-14);
        assert!(TestFunction::parse("nope").is_err());
        assert!(TestFunction::parse("poly tdeg=1.5").is_err());
    }

    #[test]
    fn power_error_regimes() {
        // cells touching the singularity see h^beta, far cells the Taylor term
        assert_eq!(power_error(0.5, 0.0, 0.25, 2), 0.5);
        let far = power_error(0.5, 1.0, 0.01, 2);
        assert!((far - 1e-4 * 0.25 / 2.0).abs() < 1e-16);
        assert_eq!(power_error(1.0, 0.3, 0.1, 2), 0.0);
    }

    #[test]
    fn polynomials_have_zero_oracle() {
        let f = TestFunction::parse("poly tdeg=1 xdeg=2").unwrap();
        let c = Cell { t0: 0.0, t1: 1.0, xlo: vec![0.0], xhi: vec![1.0], diam_x: 1.0 };
        assert_eq!(f.oracle_errors(&c, 2, 3), Some((0.0, 0.0)));
        assert!(f.oracle_errors(&c, 2, 2).is_none());
    }
}
