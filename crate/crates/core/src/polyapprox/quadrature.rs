//! Gauss–Legendre rules and collapsed (Duffy) product rules on the simplex.
//! All weights are positive.

/// `n`-point Gauss–Legendre rule on `[0, 1]`; weights sum to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = (1.0 - z) / 2.0;
        x[n - 1 - i] = (1.0 + z) / 2.0;
        w[i] = wt / 2.0;
        w[n - 1 - i] = wt / 2.0;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.5;
    }
    (x, w)
}

/// Points as barycentric coordinates `(l0, .., ld)` on the reference simplex
/// `conv(0, e1, .., ed)`; weights sum to `1/d!`.
#[derive(Clone, Debug)]
pub struct SimplexRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Collapsed product rule exact for polynomials of total degree `degree`.
pub fn simplex_rule(d: usize, degree: usize) -> SimplexRule {
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (1..=d).map(|j| gauss_legendre((degree + d - j + 2) / 2)).collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let mut x = vec![0.0; d];
        let mut rest = 1.0;
        let mut w = 1.0;
        for j in 0..d {
            let (u, wu) = (rules[j].0[idx[j]], rules[j].1[idx[j]]);
            x[j] = u * rest;
            w *= wu * rest;
            rest *= 1.0 - u;
        }
        let mut lam = Vec::with_capacity(d + 1);
        lam.push(1.0 - x.iter().sum::<f64>());
        lam.extend(x);
        points.push(lam);
        weights.push(w);
        let mut j = 0;
        loop {
            if j == d {
                return SimplexRule { points, weights };
            }
            idx[j] += 1;
            if idx[j] < rules[j].0.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Tensor rule on `[0,1] x S_hat`: `(tau, barycentric)` points, weights summing to `1/d!`.
#[derive(Clone, Debug)]
pub struct PrismRule {
    pub points: Vec<(f64, Vec<f64>)>,
    pub weights: Vec<f64>,
    pub degree_t: usize,
    pub degree_x: usize,
}

pub fn prism_rule(d: usize, degree_t: usize, degree_x: usize) -> PrismRule {
    let (tx, tw) = gauss_legendre(degree_t / 2 + 1);
    let s = simplex_rule(d, degree_x);
    let mut points = Vec::with_capacity(tx.len() * s.points.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (t, wt) in tx.iter().zip(&tw) {
        for (l, ws) in s.points.iter().zip(&s.weights) {
            points.push((*t, l.clone()));
            weights.push(wt * ws);
        }
    }
    PrismRule { points, weights, degree_t, degree_x }
}
