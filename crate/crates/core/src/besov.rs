//! Sampled moduli of smoothness, the discrete anisotropic Besov seminorm,
//! multiscale norms along the uniform ladder and marking indicators.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{Cell, TestFunction};
use crate::geometry::{kuhn_simplices, simplex_measure, AnisotropyParams};
use crate::ids::PrismId;
use crate::mesh::{LeafIndex, Partition};
use crate::nodes::{classify, support_depth};
use crate::polyapprox::quadrature::{gauss_legendre, prism_rule, simplex_rule, PrismRule};
use crate::polyapprox::{
    barycentric, best_approx_region, global_error, LeafFrame, least_squares_projection, quasi_interpolate, FeFunction, NormParams,
    PolyOrders, ReferenceElement,
};
use crate::refine::{marked_refine, mark_all, Budget};

/// `J x R` with `R` a union of simplices.
#[derive(Clone, Debug)]
pub struct Cylinder {
    pub t0: f64,
    pub t1: f64,
    pub simplices: Vec<Vec<Vec<f64>>>,
}

impl Cylinder {
    pub fn new(t0: f64, t1: f64, simplices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if !(t1 > t0) || simplices.is_empty() {
            return Err(Error::InvalidInput("empty cylinder".into()));
        }
        Ok(Cylinder { t0, t1, simplices })
    }

    /// `[t0, t1] x [lo, hi]`, the box split into Kuhn simplices.
    pub fn from_box(t0: f64, t1: f64, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let cells = vec![1; lo.len()];
        Self::new(t0, t1, kuhn_simplices(lo, hi, &cells)?)
    }

    /// Cylinder spanned by a set of leaves: time hull times the spatial
    /// simplices met by a generic time slice.
    pub fn from_leaves(p: &Partition, leaves: &BTreeSet<PrismId>) -> Result<Self> {
        let (mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &l in leaves {
            let (a, b) = p.prism_interval(l).bounds();
            t0 = t0.min(a);
            t1 = t1.max(b);
        }
        let ts = t0 + 0.382 * (t1 - t0);
        let mut seen = BTreeSet::new();
        let simplices = leaves
            .iter()
            .filter(|&&l| {
                let (a, b) = p.prism_interval(l).bounds();
                a <= ts && ts < b && seen.insert(p.prism(l).simplex)
            })
            .map(|&l| p.simplex_points(p.prism(l).simplex))
            .collect();
        Self::new(t0, t1, simplices)
    }

    pub fn d(&self) -> usize {
        self.simplices[0].len() - 1
    }

    pub fn measure(&self) -> f64 {
        (self.t1 - self.t0) * self.simplices.iter().map(|s| simplex_measure(s)).sum::<f64>()
    }

    fn contains(&self, t: f64, x: &[f64]) -> bool {
        let tol = 1e-12 * (self.t1 - self.t0);
        t >= self.t0 - tol
            && t <= self.t1 + tol
            && self.simplices.iter().any(|s| barycentric(s, x).iter().all(|&l| l >= -1e-12))
    }

    pub fn cell(&self) -> Cell {
        let d = self.d();
        let mut xlo = vec![f64::INFINITY; d];
        let mut xhi = vec![f64::NEG_INFINITY; d];
        for v in self.simplices.iter().flatten() {
            for c in 0..d {
                xlo[c] = xlo[c].min(v[c]);
                xhi[c] = xhi[c].max(v[c]);
            }
        }
        let diam_x = xlo.iter().zip(&xhi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        Cell { t0: self.t0, t1: self.t1, xlo, xhi, diam_x }
    }
}

/// Tensor sample set: `time_cells` equal subintervals with `time_points`
/// Gauss points each, times a collapsed Gauss rule with `space_points` points
/// per direction on every simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub time_cells: usize,
    pub time_points: usize,
    pub space_points: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { time_cells: 64, time_points: 2, space_points: 4 }
    }
}

struct Samples {
    pts: Vec<(f64, Vec<f64>)>,
    w: Vec<f64>,
}

fn samples(d: &Cylinder, s: Sampling) -> Samples {
    let (gt, wt) = gauss_legendre(s.time_points);
    let rule = simplex_rule(d.d(), 2 * s.space_points - 1);
    let fact: f64 = (1..=d.d()).map(|k| k as f64).product();
    let h = (d.t1 - d.t0) / s.time_cells as f64;
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for c in 0..s.time_cells {
        for (g, wg) in gt.iter().zip(&wt) {
            let t = d.t0 + h * (c as f64 + g);
            for simplex in &d.simplices {
                let jac = simplex_measure(simplex) * fact;
                for (lam, ws) in rule.points.iter().zip(&rule.weights) {
                    let x = (0..d.d()).map(|k| lam.iter().zip(simplex).map(|(l, v)| l * v[k]).sum()).collect();
                    pts.push((t, x));
                    w.push(h * wg * ws * jac);
                }
            }
        }
    }
    Samples { pts, w }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Time,
    Space,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `r`-th forward difference at `(t, x)` with step `(ht, hx)`, or `None` when
/// a stencil point leaves `D`.
pub fn forward_difference<F>(f: &F, d: &Cylinder, r: usize, t: f64, x: &[f64], ht: f64, hx: &[f64]) -> Option<f64>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let mut acc = 0.0;
    let mut y = x.to_vec();
    for k in 0..=r {
        let tk = t + k as f64 * ht;
        for (c, yc) in y.iter_mut().enumerate() {
            *yc = x[c] + k as f64 * hx[c];
        }
        if !d.contains(tk, &y) {
            return None;
        }
        let sign = if (r - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binom(r, k) * f(tk, &y);
    }
    Some(acc)
}

/// Shift lattice for `sup_{|h| <= delta}`: 16 magnitudes in time and in space
/// for `d = 1`; 8 directions times 4 magnitudes in space for `d >= 2`.
pub fn shifts(direction: Direction, d: usize, delta: f64) -> Vec<(f64, Vec<f64>)> {
    match direction {
        Direction::Time => (1..=16).map(|k| (delta * k as f64 / 16.0, vec![0.0; d])).collect(),
        Direction::Space if d == 1 => (1..=16).map(|k| (0.0, vec![delta * k as f64 / 16.0])).collect(),
        Direction::Space => {
            let mut out = Vec::new();
            for a in 0..8 {
                let th = std::f64::consts::PI * a as f64 / 8.0;
                for m in 1..=4 {
                    let h = delta * m as f64 / 4.0;
                    let mut v = vec![0.0; d];
                    v[0] = h * th.cos();
                    v[1] = h * th.sin();
                    out.push((0.0, v));
                }
            }
            out
        }
    }
}

fn pnorm(vals: impl Iterator<Item = (f64, f64)>, p: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, |m, (v, _)| m.max(v.abs()))
    } else {
        vals.map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn modulus_on<F>(f: &F, d: &Cylinder, s: &Samples, dir: Direction, r: usize, delta: f64, p: f64) -> f64
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    if delta <= 0.0 {
        return 0.0;
    }
    shifts(dir, d.d(), delta)
        .par_iter()
        .map(|(ht, hx)| {
            pnorm(
                s.pts.iter().zip(&s.w).filter_map(|((t, x), &w)| forward_difference(f, d, r, *t, x, *ht, hx).map(|v| (v, w))),
                p,
            )
        })
        .reduce(|| 0.0, f64::max)
}

/// `omega_r(f, D, delta)_p` in one direction: sup over the shift lattice of
/// the sampled `L_p(D_{r,h})` norm of the `r`-th difference.
pub fn modulus<F>(f: &F, d: &Cylinder, direction: Direction, r: usize, delta: f64, p: f64, sampling: Sampling) -> f64
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    modulus_on(f, d, &samples(d, sampling), direction, r, delta, p)
}

#[derive(Clone, Debug)]
pub struct ScaleRow {
    pub n: u32,
    pub delta_t: f64,
    pub delta_x: f64,
    pub omega_t: f64,
    pub omega_x: f64,
}

#[derive(Clone, Debug)]
pub struct BesovEstimate {
    pub rows: Vec<ScaleRow>,
    /// Partial sums of the seminorm, one per row.
    pub partial: Vec<f64>,
    pub seminorm: f64,
    /// Geometric extrapolation of the truncated tail; infinite when the terms do not decay.
    pub tail: f64,
    pub p: f64,
    pub q: f64,
    pub s1: f64,
    pub s2: f64,
    pub orders: PolyOrders,
    pub sampling: Sampling,
}

impl BesovEstimate {
    /// `scale_n,delta_t,delta_x,omega_t,omega_x` rows followed by one
    /// `summary` row carrying the seminorm and tail.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scale_n,delta_t,delta_x,omega_t,omega_x")?;
        for r in &self.rows {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.n, r.delta_t, r.delta_x, r.omega_t, r.omega_x)?;
        }
        writeln!(w, "summary,{:.16e},{:.16e},{},{}", self.seminorm, self.tail, self.p, self.q)?;
        Ok(())
    }
}

/// Truncated `(sum_n 2^{n s2 q / d} (omega_t^q + omega_x^q))^{1/q}` over
/// `n = n0..=n0+N`, with `delta_t = 2^{-n s2/(s1 d)}` and `delta_x = 2^{-n/d}`.
#[allow(clippy::too_many_arguments)]
pub fn discrete_seminorm<F>(
    f: &F,
    d: &Cylinder,
    p: f64,
    q: f64,
    s1: f64,
    s2: f64,
    orders: PolyOrders,
    n0: u32,
    depth: u32,
    sampling: Sampling,
) -> Result<BesovEstimate>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    if depth < 4 {
        return Err(Error::InvalidInput("at least 4 scales required".into()));
    }
    let dim = d.d() as f64;
    let s = samples(d, sampling);
    let mut rows = Vec::new();
    let mut terms = Vec::new();
    for n in n0..=n0 + depth {
        let nf = n as f64;
        let delta_t = 2f64.powf(-nf * s2 / (s1 * dim));
        let delta_x = 2f64.powf(-nf / dim);
        let omega_t = modulus_on(f, d, &s, Direction::Time, orders.r1, delta_t, p);
        let omega_x = modulus_on(f, d, &s, Direction::Space, orders.r2, delta_x, p);
        let weight = 2f64.powf(nf * s2 / dim);
        terms.push(if q.is_infinite() {
            weight * omega_t.max(omega_x)
        } else {
            weight.powf(q) * (omega_t.powf(q) + omega_x.powf(q))
        });
        rows.push(ScaleRow { n, delta_t, delta_x, omega_t, omega_x });
    }
    let mut partial = Vec::with_capacity(terms.len());
    let mut acc = 0.0f64;
    for &t in &terms {
        acc = if q.is_infinite() { acc.max(t) } else { acc + t };
        partial.push(if q.is_infinite() { acc } else { acc.powf(1.0 / q) });
    }
    let k = terms.len();
    let (a, b) = (terms[k - 2], terms[k - 1]);
    let tail = if b == 0.0 {
        0.0
    } else if a > 0.0 && b < a {
        let ratio = b / a;
        if q.is_infinite() {
            0.0
        } else {
            (acc + b * ratio / (1.0 - ratio)).powf(1.0 / q) - acc.powf(1.0 / q)
        }
    } else {
        f64::INFINITY
    };
    Ok(BesovEstimate { rows, seminorm: *partial.last().unwrap(), partial, tail, p, q, s1, s2, orders, sampling })
}

#[derive(Clone, Debug)]
pub struct LadderLevel {
    pub n: u32,
    pub leaves: usize,
    pub free_nodes: usize,
    pub hanging_nodes: usize,
    /// `||Delta_n f||_{L_p}`.
    pub delta_norm: f64,
    /// `||f - pi_n f||_{L_p}`.
    pub pi_error: f64,
    /// `E(f, V_{P_n})_p` estimate: the `L_2` projection error for `p = 2`,
    /// otherwise the quasi-interpolation error.
    pub best_error: f64,
}

#[derive(Clone, Debug)]
pub struct MultiscaleLadder {
    pub levels: Vec<LadderLevel>,
    pub alpha: (f64, f64),
    pub f_norm: f64,
    pub norm_delta: f64,
    pub norm_pi: f64,
    pub norm_e: f64,
}

fn weighted_sum(vals: impl Iterator<Item = (u32, f64)>, a2: f64, d: f64, q: f64) -> f64 {
    if q.is_infinite() {
        vals.map(|(n, v)| 2f64.powf(a2 * n as f64 / d) * v).fold(0.0, f64::max)
    } else {
        vals.map(|(n, v)| (2f64.powf(a2 * n as f64 / d) * v).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Builds `P_0..P_N` by all-mark rounds starting from `p0` and evaluates the
/// three multiscale norms of `f` for `(alpha1, alpha2)` collinear with `(s1, s2)`.
pub fn multiscale_norms<F>(
    f: &F,
    p0: &Partition,
    orders: PolyOrders,
    norms: NormParams,
    alpha: (f64, f64),
    depth: u32,
) -> Result<MultiscaleLadder>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let params = *p0.params();
    if (alpha.0 * params.s2 - alpha.1 * params.s1).abs() > 1e-12 * (alpha.0.abs() + alpha.1.abs()).max(1.0) {
        return Err(Error::InvalidInput(format!(
            "(alpha1, alpha2) = {alpha:?} is not a multiple of (s1, s2) = ({}, {})",
            params.s1, params.s2
        )));
    }
    let mut p = p0.clone();
    let pn = norms.p;
    let zero = |_: f64, _: &[f64]| 0.0;
    let mut levels = Vec::new();
    let mut prev: Option<FeFunction> = None;
    for n in 0..=depth {
        if n > 0 {
            marked_refine(&mut p, mark_all, 1, &Budget::default())?;
        }
        let lat = classify(&p, orders)?;
        let (pi, _) = quasi_interpolate(&p, &lat, f, norms.rho)?;
        let pi_error = global_error(&p, &pi, f, pn);
        let best_error = if pn == 2.0 { global_error(&p, &least_squares_projection(&p, &lat, f)?, f, 2.0) } else { pi_error };
        let delta_norm = match &prev {
            None => global_error(&p, &pi, &zero, pn),
            Some(old) => {
                let prolonged = prolong(&p, old, &lat.reference);
                global_error(&p, &pi.add_scaled(1.0, &prolonged, -1.0), &zero, pn)
            }
        };
        levels.push(LadderLevel {
            n,
            leaves: p.num_leaves(),
            free_nodes: lat.num_free(),
            hanging_nodes: lat.num_hanging(),
            delta_norm,
            pi_error,
            best_error,
        });
        log::debug!("ladder n={n} leaves={} |Delta|={delta_norm:.3e}", p.num_leaves());
        prev = Some(pi);
    }
    let f_norm = lp_norm_of(f, p0, &std::sync::Arc::new(ReferenceElement::new(p0.d(), orders)?), pn);
    let d = p.d() as f64;
    let norm_delta = weighted_sum(levels.iter().map(|l| (l.n, l.delta_norm)), alpha.1, d, norms.q);
    let norm_pi = weighted_sum(levels.iter().map(|l| (l.n, l.pi_error)), alpha.1, d, norms.q) + f_norm;
    let norm_e = weighted_sum(levels.iter().map(|l| (l.n, l.best_error)), alpha.1, d, norms.q) + f_norm;
    Ok(MultiscaleLadder { levels, alpha, f_norm, norm_delta, norm_pi, norm_e })
}

fn lp_norm_of<F>(f: &F, p: &Partition, re: &std::sync::Arc<ReferenceElement>, pn: f64) -> f64
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let zero = FeFunction::discontinuous(re.clone(), p.leaves().map(|l| (l, vec![0.0; re.num_basis()])).collect());
    global_error(p, &zero, f, pn)
}

/// Re-express a piecewise polynomial on a refinement of its partition by
/// evaluating each leaf's ancestor polynomial at the leaf's nodes.
pub fn prolong(p: &Partition, old: &FeFunction, re: &ReferenceElement) -> FeFunction {
    let local = p
        .leaves()
        .map(|l| {
            let mut a = l;
            while !old.local.contains_key(&a) {
                a = p.prism(a).parent.expect("leaf is not below the old partition");
            }
            let (t0, t1) = p.prism_interval(l).bounds();
            let verts = p.simplex_points(p.prism(l).simplex);
            let vals = (0..re.num_basis())
                .map(|k| {
                    let (tau, lam) = re.node_coords(k);
                    let x: Vec<f64> = (0..p.d()).map(|c| lam.iter().zip(&verts).map(|(l, v)| l * v[c]).sum()).collect();
                    old.eval_on(p, a, t0 + tau * (t1 - t0), &x)
                })
                .collect();
            (l, vals)
        })
        .collect();
    FeFunction::discontinuous(old.reference.clone(), local)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkMode {
    /// Closed-form local error proxies of the test function.
    Oracle,
    /// Raw `E(f, Pi, cylindric closure of omega^j)_p`.
    Whitney,
    /// Shallow discrete seminorm on the cylindric closure.
    Moduli,
}

impl std::str::FromStr for MarkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(MarkMode::Oracle),
            "whitney" => Ok(MarkMode::Whitney),
            "moduli" => Ok(MarkMode::Moduli),
            _ => Err(Error::Config(format!("unknown mark mode '{s}' (oracle, whitney, moduli)"))),
        }
    }
}

/// Exponent `1/(1/s1 + d/s2) - 1/q + 1/p` of the indicator scaling.
pub fn indicator_exponent(params: &AnisotropyParams, norms: NormParams) -> f64 {
    params.rate() - 1.0 / norms.q + 1.0 / norms.p
}

/// Quadrature samples of `f` on one leaf: physical points, weights, values.
struct LeafSamples {
    pts: Vec<[f64; 4]>,
    w: Vec<f64>,
    vals: Vec<f64>,
}

/// Per-round data shared by all indicator evaluations.
struct RoundCache {
    index: LeafIndex,
    adjacency: HashMap<PrismId, Vec<PrismId>>,
    samples: HashMap<PrismId, LeafSamples>,
}

/// Per-leaf marking indicators.
pub struct Indicator<'a> {
    pub f: &'a TestFunction,
    pub mode: MarkMode,
    pub orders: PolyOrders,
    pub norms: NormParams,
    pub sampling: Sampling,
    reference: ReferenceElement,
    /// Rule of exactness `(2 r1, 2 r2)` for region fits.
    region_rule: PrismRule,
}

impl<'a> Indicator<'a> {
    pub fn new(f: &'a TestFunction, mode: MarkMode, orders: PolyOrders, norms: NormParams, d: usize) -> Result<Self> {
        if mode == MarkMode::Oracle && !f.has_oracle() {
            return Err(Error::Config(format!("function '{f}' has no oracle seminorm")));
        }
        let sampling = Sampling { time_cells: 8, time_points: 2, space_points: 3 };
        let region_rule = prism_rule(d, 2 * orders.r1, 2 * orders.r2);
        Ok(Indicator { f, mode, orders, norms, sampling, reference: ReferenceElement::new(d, orders)?, region_rule })
    }

    fn leaf_samples(&self, p: &Partition, leaf: PrismId) -> LeafSamples {
        let frame = LeafFrame::new(p, leaf);
        let mut pts = Vec::with_capacity(self.region_rule.points.len());
        let mut vals = Vec::with_capacity(pts.capacity());
        for (tau, lam) in &self.region_rule.points {
            let (t, x) = frame.map(*tau, lam);
            vals.push(self.f.eval(t, &x));
            let mut a = [0.0; 4];
            a[0] = t;
            a[1..=x.len()].copy_from_slice(&x);
            pts.push(a);
        }
        let w = self.region_rule.weights.iter().map(|w| w * frame.jac).collect();
        LeafSamples { pts, w, vals }
    }

    fn region(&self, p: &Partition, cache: &RoundCache, leaf: PrismId) -> BTreeSet<PrismId> {
        let j = support_depth(p.d());
        let mut members = BTreeSet::from([leaf]);
        let mut frontier = vec![leaf];
        for _ in 0..j {
            let mut next = Vec::new();
            for m in frontier {
                for &c in &cache.adjacency[&m] {
                    if members.insert(c) {
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        p.cylindric_closure(&members, &cache.index)
    }

    /// `E(f, Pi, region)_p`; normal equations in scaled monomials for `p = 2`.
    fn region_error(&self, p: &Partition, cache: &RoundCache, region: &BTreeSet<PrismId>) -> Result<f64> {
        let fe = |t: f64, x: &[f64]| self.f.eval(t, x);
        if self.norms.p != 2.0 {
            return Ok(best_approx_region(p, &self.reference, region, &fe, self.norms.p)?.error);
        }
        let d = p.d();
        let mut lo = [f64::INFINITY; 4];
        let mut hi = [f64::NEG_INFINITY; 4];
        for &l in region {
            for q in &cache.samples[&l].pts {
                for c in 0..=d {
                    lo[c] = lo[c].min(q[c]);
                    hi[c] = hi[c].max(q[c]);
                }
            }
        }
        let exps = &self.region_exponents(d);
        let m = exps.len();
        let mono = |q: &[f64; 4], out: &mut [f64]| {
            let mut z = [0.0; 4];
            for c in 0..=d {
                let h = 0.5 * (hi[c] - lo[c]);
                z[c] = if h > 0.0 { (q[c] - 0.5 * (hi[c] + lo[c])) / h } else { 0.0 };
            }
            for (o, e) in out.iter_mut().zip(exps) {
                *o = (0..=d).map(|c| z[c].powi(e[c] as i32)).product();
            }
        };
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        let mut row = vec![0.0; m];
        for &l in region {
            let s = &cache.samples[&l];
            for ((q, w), v) in s.pts.iter().zip(&s.w).zip(&s.vals) {
                mono(q, &mut row);
                for a in 0..m {
                    b[a] += w * v * row[a];
                    for c in 0..=a {
                        g[(a, c)] += w * row[a] * row[c];
                    }
                }
            }
        }
        for a in 0..m {
            for c in a + 1..m {
                g[(a, c)] = g[(c, a)];
            }
        }
        let coef = match g.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => return Ok(best_approx_region(p, &self.reference, region, &fe, 2.0)?.error),
        };
        let mut err = 0.0;
        for &l in region {
            let s = &cache.samples[&l];
            for ((q, w), v) in s.pts.iter().zip(&s.w).zip(&s.vals) {
                mono(q, &mut row);
                let r = v - row.iter().zip(coef.iter()).map(|(a, c)| a * c).sum::<f64>();
                err += w * r * r;
            }
        }
        Ok(err.sqrt())
    }

    fn region_exponents(&self, d: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for a in 0..self.orders.r1 {
            for alpha in crate::polyapprox::basis::simplex_multi_indices(d, self.orders.r2 - 1) {
                let mut e = vec![a];
                e.extend_from_slice(&alpha[1..]);
                out.push(e);
            }
        }
        out
    }

    fn build_cache(&self, p: &Partition, leaves: &[PrismId]) -> RoundCache {
        let index = p.leaf_index();
        let needs_region = self.mode != MarkMode::Oracle;
        let adjacency = if needs_region {
            leaves.par_iter().map(|&l| (l, index.touching(p, l))).collect()
        } else {
            HashMap::new()
        };
        let samples = if self.mode == MarkMode::Whitney {
            leaves.par_iter().map(|&l| (l, self.leaf_samples(p, l))).collect()
        } else {
            HashMap::new()
        };
        RoundCache { index, adjacency, samples }
    }

    fn eval_cached(&self, p: &Partition, cache: &RoundCache, leaf: PrismId) -> Result<f64> {
        let fe = |t: f64, x: &[f64]| self.f.eval(t, x);
        let scale = || p.prism_measure(leaf).powf(indicator_exponent(p.params(), self.norms));
        let params = p.params();
        match self.mode {
            MarkMode::Whitney => self.region_error(p, cache, &self.region(p, cache, leaf)),
            MarkMode::Oracle => {
                let cyl = Cylinder::from_leaves(p, &BTreeSet::from([leaf]))?;
                let c = cyl.cell();
                let (et, ex) = self.f.oracle_errors(&c, self.orders.r1, self.orders.r2).unwrap();
                let semi = cyl.measure().powf(1.0 / self.norms.p)
                    * ((c.t1 - c.t0).powf(-params.s1) * et + c.diam_x.powf(-params.s2) * ex);
                Ok(scale() * semi)
            }
            MarkMode::Moduli => {
                let cyl = Cylinder::from_leaves(p, &self.region(p, cache, leaf))?;
                let est = discrete_seminorm(
                    &fe,
                    &cyl,
                    self.norms.p,
                    self.norms.q,
                    params.s1,
                    params.s2,
                    self.orders,
                    p.level(leaf),
                    4,
                    self.sampling,
                )?;
                Ok(scale() * est.seminorm)
            }
        }
    }

    /// Indicator of one leaf; builds the per-round data for the whole mesh.
    pub fn eval(&self, p: &Partition, leaf: PrismId) -> Result<f64> {
        if !p.is_leaf(leaf) {
            return Err(Error::NotALeaf(leaf));
        }
        let leaves: Vec<PrismId> = p.leaves().collect();
        let cache = self.build_cache(p, &leaves);
        self.eval_cached(p, &cache, leaf)
    }

    /// Indicators of all leaves.
    pub fn eval_all(&self, p: &Partition) -> Result<Vec<(PrismId, f64)>> {
        let leaves: Vec<PrismId> = p.leaves().collect();
        let cache = self.build_cache(p, &leaves);
        leaves.par_iter().map(|&l| self.eval_cached(p, &cache, l).map(|v| (l, v))).collect()
    }
}

/// Single-leaf convenience wrapper around [`Indicator`].
pub fn mark_indicator(
    p: &Partition,
    f: &TestFunction,
    leaf: PrismId,
    mode: MarkMode,
    orders: PolyOrders,
    norms: NormParams,
) -> Result<f64> {
    if !p.is_leaf(leaf) {
        return Err(Error::NotALeaf(leaf));
    }
    Indicator::new(f, mode, orders, norms, p.d())?.eval(p, leaf)
}
