//! Greedy adaptive approximation, rate studies and complexity studies.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::besov::{Indicator, MarkMode};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::ids::PrismId;
use crate::mesh::Partition;
use crate::nodes::classify;
use crate::polyapprox::{global_error, quasi_interpolate, FeFunction, NormParams, PolyOrders};
use crate::refine::{marked_refine, Budget, RefineLedger, RefineStatus};

/// Ordinary least squares fit of `log y` against `log x`: `(slope, r^2)`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, r2))
}

#[derive(Clone, Debug)]
pub struct AdaptConfig {
    pub orders: PolyOrders,
    pub norms: NormParams,
    pub mode: MarkMode,
    pub budget: Budget,
    pub max_rounds: usize,
}

pub struct AdaptResult {
    pub partition: Partition,
    pub solution: FeFunction,
    pub ledger: RefineLedger,
    pub status: RefineStatus,
    pub error: f64,
}

/// Refine while some leaf has an indicator above `delta`, then quasi-interpolate.
pub fn greedy_adapt(p0: &Partition, f: &TestFunction, cfg: &AdaptConfig, delta: f64) -> Result<AdaptResult> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be positive, got {delta}")));
    }
    let indicator = Indicator::new(f, cfg.mode, cfg.orders, cfg.norms, p0.d())?;
    let mut p = p0.clone();
    let mut failure = None;
    let mark = |q: &Partition| -> BTreeSet<PrismId> {
        match indicator.eval_all(q) {
            Ok(v) => v.into_iter().filter(|&(_, e)| e > delta).map(|(l, _)| l).collect(),
            Err(e) => {
                failure = Some(e);
                BTreeSet::new()
            }
        }
    };
    let (status, ledger) = marked_refine(&mut p, mark, cfg.max_rounds, &cfg.budget)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let lat = classify(&p, cfg.orders)?;
    let fe = |t: f64, x: &[f64]| f.eval(t, x);
    let (solution, _) = quasi_interpolate(&p, &lat, &fe, cfg.norms.rho)?;
    let error = global_error(&p, &solution, &fe, cfg.norms.p);
    Ok(AdaptResult { partition: p, solution, ledger, status, error })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    /// Threshold, or the round number for uniform refinement.
    pub delta: f64,
    pub leaves: usize,
    pub added: usize,
    pub error: f64,
    pub seconds: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct RateStudy {
    pub adaptive: Vec<RatePoint>,
    pub uniform: Vec<RatePoint>,
    pub slope: f64,
    pub r2: f64,
    pub uniform_slope: f64,
    pub uniform_r2: f64,
    /// `-1 / (1/s1 + d/s2)`.
    pub target: f64,
}

impl RateStudy {
    /// Columns `kind,delta,leaves,added,error_lp,seconds,converged`, then
    /// `fit` rows `fit,<kind>,slope,r2,target`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,delta,leaves,added,error_lp,converged")?;
        for (kind, pts) in [("adaptive", &self.adaptive), ("uniform", &self.uniform)] {
            for r in pts {
                writeln!(w, "{kind},{:.16e},{},{},{:.16e},{}", r.delta, r.leaves, r.added, r.error, r.converged)?;
            }
        }
        writeln!(w, "fit,adaptive,{:.16e},{:.16e},{:.16e}", self.slope, self.r2, self.target)?;
        writeln!(w, "fit,uniform,{:.16e},{:.16e},{:.16e}", self.uniform_slope, self.uniform_r2, self.target)?;
        Ok(())
    }
}

impl RateStudy {
    /// Wall-clock seconds per point, kept apart so that `write_csv` output is reproducible.
    pub fn write_timings_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,delta,leaves,seconds")?;
        for (kind, pts) in [("adaptive", &self.adaptive), ("uniform", &self.uniform)] {
            for r in pts {
                writeln!(w, "{kind},{:.16e},{},{:.3}", r.delta, r.leaves, r.seconds)?;
            }
        }
        Ok(())
    }
}

fn fit_points(pts: &[RatePoint]) -> (f64, f64) {
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().filter(|r| r.added > 0).map(|r| (r.added as f64, r.error)).unzip();
    loglog_fit(&x, &y).unwrap_or((f64::NAN, 0.0))
}

/// Uniform refinement rounds from `p0` while the leaf count stays below `max_leaves`.
pub fn uniform_curve(p0: &Partition, f: &TestFunction, orders: PolyOrders, norms: NormParams, max_leaves: usize) -> Result<Vec<RatePoint>> {
    let fe = |t: f64, x: &[f64]| f.eval(t, x);
    let mut p = p0.clone();
    let mut out = Vec::new();
    for round in 1.. {
        let start = Instant::now();
        if p.num_leaves() * 2 > max_leaves {
            break;
        }
        marked_refine(&mut p, crate::refine::mark_all, 1, &Budget { max_leaves, max_level: 40 })?;
        let lat = classify(&p, orders)?;
        let (sol, _) = quasi_interpolate(&p, &lat, &fe, norms.rho)?;
        out.push(RatePoint {
            delta: round as f64,
            leaves: p.num_leaves(),
            added: p.num_leaves() - p0.num_leaves(),
            error: global_error(&p, &sol, &fe, norms.p),
            seconds: start.elapsed().as_secs_f64(),
            converged: true,
        });
        log::info!("uniform round {round}: {} leaves", p.num_leaves());
    }
    Ok(out)
}

/// Greedy runs for every threshold plus the uniform comparison curve.
pub fn rate_study(p0: &Partition, f: &TestFunction, cfg: &AdaptConfig, deltas: &[f64]) -> Result<RateStudy> {
    if deltas.len() < 6 {
        return Err(Error::InvalidInput("a rate study needs at least 6 thresholds".into()));
    }
    let mut adaptive = Vec::new();
    for &delta in deltas {
        let start = Instant::now();
        let res = greedy_adapt(p0, f, cfg, delta)?;
        let converged = res.status == RefineStatus::Converged;
        log::info!("delta {delta:.3e}: {} leaves, error {:.3e}, {:?}", res.partition.num_leaves(), res.error, res.status);
        adaptive.push(RatePoint {
            delta,
            leaves: res.partition.num_leaves(),
            added: res.partition.num_leaves() - p0.num_leaves(),
            error: res.error,
            seconds: start.elapsed().as_secs_f64(),
            converged,
        });
        if !converged {
            break;
        }
    }
    if adaptive.iter().filter(|r| r.converged && r.added > 0).count() < 3 {
        return Err(Error::BudgetExhausted("fewer than 3 successful adaptive runs".into()));
    }
    let max_leaves = adaptive.iter().map(|r| r.leaves).max().unwrap_or(0).max(4 * p0.num_leaves());
    let uniform = uniform_curve(p0, f, cfg.orders, cfg.norms, max_leaves)?;
    let ok: Vec<RatePoint> = adaptive.iter().filter(|r| r.converged).cloned().collect();
    let (slope, r2) = fit_points(&ok);
    let (uniform_slope, uniform_r2) = fit_points(&uniform);
    Ok(RateStudy { adaptive, uniform, slope, r2, uniform_slope, uniform_r2, target: -p0.params().rate() })
}

/// Scripted marking rules for complexity studies.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    /// Every leaf.
    Uniform,
    /// Nothing.
    Empty,
    /// A random fraction of the leaves.
    RandomFraction { fraction: f64, seed: u64 },
    /// The leaf at the far corner `(T, x_max)` of the domain.
    CornerChasing,
    /// Leaves touching `t = t_start`.
    InitialTime,
    /// Leaves whose closure meets the spatial point `x = 0`.
    SpatialPoint,
    /// The lowest-id leaf of minimal level.
    CoarsestLevel,
}

impl std::str::FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split(':');
        let name = it.next().unwrap_or("");
        match name {
            "uniform" => Ok(Policy::Uniform),
            "empty" => Ok(Policy::Empty),
            "corner" | "corner-chasing" => Ok(Policy::CornerChasing),
            "initial-time" => Ok(Policy::InitialTime),
            "spatial-point" => Ok(Policy::SpatialPoint),
            "coarsest" => Ok(Policy::CoarsestLevel),
            "random" => {
                let fraction = it.next().map(str::parse).transpose().map_err(|_| Error::Config(format!("bad policy '{s}'")))?;
                let seed = it.next().map(str::parse).transpose().map_err(|_| Error::Config(format!("bad policy '{s}'")))?;
                Ok(Policy::RandomFraction { fraction: fraction.unwrap_or(0.1), seed: seed.unwrap_or(0) })
            }
            _ => Err(Error::Config(format!(
                "unknown policy '{s}' (uniform, empty, random:FRAC:SEED, corner, initial-time, spatial-point, coarsest)"
            ))),
        }
    }
}

/// A marker closure for `marked_refine`.
pub fn policy_marker(policy: &Policy) -> impl FnMut(&Partition) -> BTreeSet<PrismId> + '_ {
    let mut rng = match policy {
        Policy::RandomFraction { seed, .. } => ChaCha8Rng::seed_from_u64(*seed),
        _ => ChaCha8Rng::seed_from_u64(0),
    };
    move |p: &Partition| match policy {
        Policy::Uniform => p.leaf_set().clone(),
        Policy::Empty => BTreeSet::new(),
        Policy::RandomFraction { fraction, .. } => {
            let k = ((p.num_leaves() as f64 * fraction).ceil() as usize).max(1);
            p.leaves().choose_multiple(&mut rng, k).into_iter().collect()
        }
        Policy::CornerChasing => {
            let t = p.time_domain().1.to_f64();
            let x = corner_point(p);
            p.leaf_index().locate_all(p, t, &x).into_iter().max_by_key(|&l| (p.level(l), l)).into_iter().collect()
        }
        Policy::InitialTime => {
            let t0 = p.time_domain().0;
            p.leaves().filter(|&l| p.prism_interval(l).lo == t0).collect()
        }
        Policy::SpatialPoint => {
            let x = vec![0.0; p.d()];
            p.leaves()
                .filter(|&l| {
                    crate::polyapprox::barycentric(&p.simplex_points(p.prism(l).simplex), &x).iter().all(|&b| b >= -1e-12)
                })
                .collect()
        }
        Policy::CoarsestLevel => {
            p.leaves().min_by_key(|&l| (p.level(l), l)).into_iter().collect()
        }
    }
}

fn corner_point(p: &Partition) -> Vec<f64> {
    let mut x = vec![f64::NEG_INFINITY; p.d()];
    for v in 0..p.num_vertices() {
        let c = &p.vertex(crate::ids::VertexId::from_index(v)).coords;
        for (a, b) in x.iter_mut().zip(c) {
            *a = a.max(*b);
        }
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexityRow {
    pub round: usize,
    pub leaves: usize,
    /// `#P_k - #P_0`.
    pub added: usize,
    /// `sum_{i < k} #M_i`.
    pub cumulative_marked: usize,
}

impl ComplexityRow {
    pub fn ratio(&self) -> f64 {
        if self.cumulative_marked == 0 {
            0.0
        } else {
            self.added as f64 / self.cumulative_marked as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct ComplexityStudy {
    pub policy: String,
    pub rows: Vec<ComplexityRow>,
    /// Least-squares slope of `added` against `cumulative_marked` through the origin.
    pub slope: f64,
    pub status: RefineStatus,
    pub ledger: RefineLedger,
}

impl ComplexityStudy {
    /// `max/min` of the per-round ratios over rounds `from..=to` (1 when they agree).
    /// Least-squares slope through the origin over rounds `1..=k`.
    pub fn slope_through(&self, k: usize) -> f64 {
        let rows = self.rows.iter().filter(|r| r.round <= k);
        let (sxy, sxx) = rows.fold((0.0, 0.0), |(a, b), r| {
            let m = r.cumulative_marked as f64;
            (a + r.added as f64 * m, b + m * m)
        });
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    }

    pub fn ratio_spread(&self, from: usize, to: usize) -> f64 {
        let r: Vec<f64> =
            self.rows.iter().filter(|r| r.round >= from && r.round <= to && r.cumulative_marked > 0).map(|r| r.ratio()).collect();
        if r.is_empty() {
            return 1.0;
        }
        let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

/// Run a marking policy for `rounds` rounds and record `#P_k - #P_0` against
/// the cumulative number of marked prisms.
pub fn complexity_study(p0: &Partition, policy: &Policy, rounds: usize, budget: &Budget) -> Result<(Partition, ComplexityStudy)> {
    let mut p = p0.clone();
    let (status, ledger) = marked_refine(&mut p, policy_marker(policy), rounds, budget)?;
    let cum = ledger.cumulative_marked();
    let rows: Vec<ComplexityRow> = ledger
        .rounds
        .iter()
        .zip(cum)
        .map(|(r, c)| ComplexityRow { round: r.round, leaves: r.leaves, added: r.leaves - p0.num_leaves(), cumulative_marked: c })
        .collect();
    let mut study = ComplexityStudy { policy: format!("{policy:?}"), rows, slope: 0.0, status, ledger };
    study.slope = study.slope_through(usize::MAX);
    Ok((p, study))
}

/// `policy,round,leaves,added,cumulative_marked,ratio` for several studies.
pub fn write_complexity_csv<W: Write>(studies: &[ComplexityStudy], mut w: W) -> Result<()> {
    writeln!(w, "policy,round,leaves,added,cumulative_marked,ratio")?;
    for s in studies {
        for r in &s.rows {
            writeln!(w, "\"{}\",{},{},{},{},{:.16e}", s.policy, r.round, r.leaves, r.added, r.cumulative_marked, r.ratio())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyParams;
    use crate::mesh::SpatialMesh;

    fn square_d1() -> Partition {
        let m = SpatialMesh::interval(0.0, 1.0, 1).unwrap();
        Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(1.0, 1.0, 1).unwrap()).unwrap()
    }

    #[test]
    fn corner_family_grows_by_three() {
        let p0 = square_d1();
        let (_, s) = complexity_study(&p0, &Policy::CornerChasing, 10, &Budget::default()).unwrap();
        for r in &s.rows {
            assert_eq!(r.leaves, 3 * r.round + 1);
        }
        assert!((s.slope - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_policy_does_nothing() {
        let (p, s) = complexity_study(&square_d1(), &Policy::Empty, 5, &Budget::default()).unwrap();
        assert_eq!(p.num_leaves(), 1);
        assert!(s.rows.is_empty() && s.status == RefineStatus::Converged);
    }

    #[test]
    fn polynomial_needs_no_refinement() {
        let p0 = square_d1();
        let f = TestFunction::parse("poly tdeg=1 xdeg=1").unwrap();
        for mode in [MarkMode::Oracle, MarkMode::Whitney, MarkMode::Moduli] {
            let cfg = AdaptConfig {
                orders: PolyOrders::new(2, 2).unwrap(),
                norms: NormParams::new(2.0, 2.0, 2.0).unwrap(),
                mode,
                budget: Budget::default(),
                max_rounds: 5,
            };
            let r = greedy_adapt(&p0, &f, &cfg, 1e-6).unwrap();
            assert_eq!(r.partition.num_leaves(), 1);
            assert!(r.error < 1e-12);
        }
    }

    #[test]
    fn policies_parse() {
        assert_eq!("random:0.25:7".parse::<Policy>().unwrap(), Policy::RandomFraction { fraction: 0.25, seed: 7 });
        assert!("bogus".parse::<Policy>().is_err());
        assert_eq!(loglog_fit(&[1.0, 2.0, 4.0], &[1.0, 0.5, 0.25]).unwrap().0, -1.0);
    }
}
