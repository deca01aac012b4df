//! Atomic splits, patch refinement and the marking loop.

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::ids::PrismId;
use crate::mesh::Partition;

/// Limits on the size of a refined mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_leaves: usize,
    pub max_level: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_leaves: 200_000, max_level: 40 }
    }
}

/// One invocation of the patch routine, possibly nested.
#[derive(Clone, Debug, PartialEq)]
pub struct CallRecord {
    pub target: PrismId,
    pub depth: usize,
    /// The patch that was atomically split at the end of the call.
    pub patch: Vec<PrismId>,
    pub created: Vec<PrismId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchOutcome {
    pub target: PrismId,
    pub target_level: u32,
    /// Calls in completion order; the outermost call is last.
    pub calls: Vec<CallRecord>,
}

impl PatchOutcome {
    pub fn atomic_splits(&self) -> usize {
        self.calls.iter().map(|c| c.patch.len()).sum()
    }

    /// Prisms created during the call that are leaves of `p`.
    pub fn created_leaves(&self, p: &Partition) -> Vec<PrismId> {
        let mut v: Vec<PrismId> = self.calls.iter().flat_map(|c| c.created.iter().copied()).filter(|&c| p.is_leaf(c)).collect();
        v.sort();
        v
    }

    pub fn max_created_level(&self, p: &Partition) -> u32 {
        self.calls.iter().flat_map(|c| &c.created).map(|&c| p.level(c)).max().unwrap_or(0)
    }
}

/// Replace a leaf by its children: one bisection of the simplex and as many
/// interval bisections as the anisotropy prescribes for the new level.
pub fn atomic_split(p: &mut Partition, id: PrismId) -> Result<Vec<PrismId>> {
    p.split_leaf(id)
}

/// Refine `id` together with whatever neighbours are needed to keep spatial
/// conformity and 1-irregularity.
pub fn patch_refine(p: &mut Partition, id: PrismId) -> Result<PatchOutcome> {
    patch_refine_with_budget(p, id, &Budget::default())
}

pub fn patch_refine_with_budget(p: &mut Partition, id: PrismId, budget: &Budget) -> Result<PatchOutcome> {
    if !p.is_leaf(id) {
        return Err(Error::NotALeaf(id));
    }
    let level = p.level(id);
    if level + 1 > budget.max_level {
        return Err(Error::BudgetExhausted(format!("level {} exceeds {}", level + 1, budget.max_level)));
    }
    let mut out = PatchOutcome { target: id, target_level: level, calls: Vec::new() };
    patch(p, id, 0, &mut out)?;
    if p.num_leaves() > budget.max_leaves {
        return Err(Error::BudgetExhausted(format!("{} leaves exceed {}", p.num_leaves(), budget.max_leaves)));
    }
    Ok(out)
}

fn patch(p: &mut Partition, target: PrismId, depth: usize, out: &mut PatchOutcome) -> Result<()> {
    let mut done: BTreeSet<PrismId> = BTreeSet::new();
    let mut front: BTreeSet<PrismId> = BTreeSet::from([target]);
    while !front.is_empty() {
        let mut next: BTreeSet<PrismId> = BTreeSet::new();
        for &q in &front {
            let lq = p.level(q);
            let mut seen: BTreeSet<PrismId> = BTreeSet::new();
            // re-read the neighbours after each recursive call, which may
            // have replaced some of them by their children
            loop {
                let cand = p
                    .necessary_neighbors(q)?
                    .into_iter()
                    .find(|c| !done.contains(c) && !front.contains(c) && !next.contains(c) && !seen.contains(c));
                let Some(c) = cand else { break };
                seen.insert(c);
                let lc = p.level(c);
                if lc == lq {
                    next.insert(c);
                } else if lc + 1 == lq {
                    let spatial = p.neighbors_space(q)?.contains(&c);
                    patch(p, c, depth + 1, out)?;
                    if spatial {
                        let nb = p.necessary_neighbors(q)?;
                        for ch in p.prism(c).children.clone() {
                            if nb.contains(&ch) {
                                next.insert(ch);
                            }
                        }
                    }
                } else {
                    return Err(Error::InvalidInput(format!(
                        "neighbour {c} of {q} has level {lc}, expected {lq} or {}",
                        lq.saturating_sub(1)
                    )));
                }
            }
        }
        done.extend(front);
        front = next;
    }
    let mut created = Vec::new();
    for &q in &done {
        created.extend(p.split_leaf(q)?);
    }
    out.calls.push(CallRecord { target, depth, patch: done.into_iter().collect(), created });
    Ok(())
}

/// Lower and upper spatial distance between two closed simplices of `p`.
fn simplex_distance(p: &Partition, a: crate::ids::SimplexId, b: crate::ids::SimplexId) -> Result<f64> {
    if p.spatial_meet(a, b).dim.is_some() {
        return Ok(0.0);
    }
    let (va, vb) = (p.simplex_points(a), p.simplex_points(b));
    match p.d() {
        1 => {
            let (a0, a1) = (va[0][0].min(va[1][0]), va[0][0].max(va[1][0]));
            let (b0, b1) = (vb[0][0].min(vb[1][0]), vb[0][0].max(vb[1][0]));
            Ok((b0 - a1).max(a0 - b1).max(0.0))
        }
        2 => {
            let seg = |x: &[f64], s0: &[f64], s1: &[f64]| {
                let e = [s1[0] - s0[0], s1[1] - s0[1]];
                let w = [x[0] - s0[0], x[1] - s0[1]];
                let t = ((w[0] * e[0] + w[1] * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
                dist(x, &[s0[0] + t * e[0], s0[1] + t * e[1]])
            };
            let mut best = f64::MAX;
            for (u, w) in [(&va, &vb), (&vb, &va)] {
                for x in u.iter() {
                    for i in 0..3 {
                        best = best.min(seg(x, &w[i], &w[(i + 1) % 3]));
                    }
                }
            }
            Ok(best)
        }
        _ => Err(Error::InvalidInput("distance checks support d <= 2".into())),
    }
}

/// Euclidean distance between the closures of two prisms.
pub fn prism_distance(p: &Partition, a: PrismId, b: PrismId) -> Result<f64> {
    let (ia, ib) = (p.prism_interval(a), p.prism_interval(b));
    let dt = (ib.lo - ia.hi).to_f64().max((ia.lo - ib.hi).to_f64()).max(0.0);
    let dx = simplex_distance(p, p.prism(a).simplex, p.prism(b).simplex)?;
    Ok((dt * dt + dx * dx).sqrt())
}

/// The bound on how far from the refined prism new prisms may appear:
/// `C 2^g sum_{k = l_new}^{l_ref} 2^(-k g)`, `g` the smaller anisotropic exponent.
pub fn creation_distance_bound(p: &Partition, created_level: u32, refined_level: u32) -> f64 {
    let (_, big) = p.level_size_constants();
    let g = p.params().gamma_min();
    let sum: f64 = (created_level..=refined_level).map(|k| 2f64.powf(-(k as f64) * g)).sum();
    big * 2f64.powf(g) * sum
}

/// Created leaves whose distance to the refined prism exceeds the bound,
/// with their distance and the bound.
pub fn creation_distance_violations(p: &Partition, outcome: &PatchOutcome) -> Result<Vec<(PrismId, f64, f64)>> {
    let mut bad = Vec::new();
    let (c, _) = p.level_size_constants();
    let tol = 1e-12 * c.max(1.0);
    for n in outcome.created_leaves(p) {
        let dist = prism_distance(p, n, outcome.target)?;
        let bound = creation_distance_bound(p, p.level(n), outcome.target_level);
        if dist > bound + tol {
            bad.push((n, dist, bound));
        }
    }
    Ok(bad)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: usize,
    pub marked: usize,
    pub leaves: usize,
    pub atomic_splits: u64,
    pub max_level: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineLedger {
    pub initial_leaves: usize,
    pub rounds: Vec<RoundRecord>,
}

impl RefineLedger {
    /// CSV with header `round,marked,leaves,atomic_splits,max_level`; round 0
    /// is the initial mesh.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,marked,leaves,atomic_splits,max_level")?;
        writeln!(w, "0,0,{},0,0", self.initial_leaves)?;
        for r in &self.rounds {
            writeln!(w, "{},{},{},{},{}", r.round, r.marked, r.leaves, r.atomic_splits, r.max_level)?;
        }
        Ok(())
    }

    /// `sum_{i < k} #M_i` for each recorded round `k`.
    pub fn cumulative_marked(&self) -> Vec<usize> {
        self.rounds
            .iter()
            .scan(0, |acc, r| {
                *acc += r.marked;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefineStatus {
    /// The marker returned an empty set.
    Converged,
    /// `max_rounds` rounds ran and the marker still marked something.
    RoundLimit,
    BudgetExhausted(String),
}

/// Repeatedly mark and patch-refine every marked prism that is still a leaf.
pub fn marked_refine<F>(
    p: &mut Partition,
    mut mark: F,
    max_rounds: usize,
    budget: &Budget,
) -> Result<(RefineStatus, RefineLedger)>
where
    F: FnMut(&Partition) -> BTreeSet<PrismId>,
{
    let mut ledger = RefineLedger { initial_leaves: p.num_leaves(), rounds: Vec::new() };
    let start = p.atomic_split_count();
    for round in 1..=max_rounds {
        let marked = mark(p);
        if marked.is_empty() {
            return Ok((RefineStatus::Converged, ledger));
        }
        for &m in &marked {
            if !p.is_leaf(m) {
                continue;
            }
            match patch_refine_with_budget(p, m, budget) {
                Ok(_) => {}
                Err(Error::BudgetExhausted(msg)) => {
                    push_round(p, &mut ledger, round, marked.len(), start);
                    return Ok((RefineStatus::BudgetExhausted(msg), ledger));
                }
                Err(e) => return Err(e),
            }
        }
        push_round(p, &mut ledger, round, marked.len(), start);
        log::debug!("round {round}: {} marked, {} leaves", marked.len(), p.num_leaves());
    }
    Ok((RefineStatus::RoundLimit, ledger))
}

fn push_round(p: &Partition, ledger: &mut RefineLedger, round: usize, marked: usize, start: u64) {
    let max_level = p.leaves().map(|l| p.level(l)).max().unwrap_or(0);
    ledger.rounds.push(RoundRecord {
        round,
        marked,
        leaves: p.num_leaves(),
        atomic_splits: p.atomic_split_count() - start,
        max_level,
    });
}

/// Mark every leaf: one round is a uniform refinement.
pub fn mark_all(p: &Partition) -> BTreeSet<PrismId> {
    p.leaf_set().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyParams;
    use crate::mesh::SpatialMesh;

    fn unit(d: usize, s1: f64, s2: f64) -> Partition {
        let m = if d == 1 {
            SpatialMesh::interval(0.0, 1.0, 1).unwrap()
        } else {
            SpatialMesh::kuhn_box(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap()
        };
        Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(s1, s2, d).unwrap()).unwrap()
    }

    #[test]
    fn patch_of_root_triangle_includes_its_partner() {
        let mut p = unit(2, 1.0, 2.0);
        let out = patch_refine(&mut p, PrismId(0)).unwrap();
        // the other root triangle shares the refinement edge
        assert_eq!(out.calls.len(), 1);
        assert_eq!(out.calls[0].patch, vec![PrismId(0), PrismId(1)]);
        assert_eq!(p.num_leaves(), 8);
        assert!(p.validate().is_valid());
    }

    #[test]
    fn budget_stops_refinement() {
        let mut p = unit(1, 1.0, 1.0);
        let b = Budget { max_leaves: 10, max_level: 1 };
        patch_refine_with_budget(&mut p, PrismId(0), &b).unwrap();
        let leaf = p.leaves().next().unwrap();
        assert!(matches!(patch_refine_with_budget(&mut p, leaf, &b), Err(Error::BudgetExhausted(_))));
    }

    #[test]
    fn uniform_rounds_double_in_space() {
        let mut p = unit(2, 1.0, 2.0);
        let (status, ledger) = marked_refine(&mut p, mark_all, 4, &Budget::default()).unwrap();
        assert_eq!(status, RefineStatus::RoundLimit);
        // every round halves all simplices and, with s2/(s1 d) = 1, all intervals
        let leaves: Vec<usize> = ledger.rounds.iter().map(|r| r.leaves).collect();
        assert_eq!(leaves, vec![8, 32, 128, 512]);
        let mut csv = Vec::new();
        ledger.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("round,marked,leaves,atomic_splits,max_level\n0,0,2,0,0\n1,2,8,2,1\n"));
    }

    #[test]
    fn prism_distance_basics() {
        let mut p = unit(1, 1.0, 1.0);
        let kids = atomic_split(&mut p, PrismId(0)).unwrap();
        assert_eq!(prism_distance(&p, kids[0], kids[3]).unwrap(), 0.0);
        let kids2 = atomic_split(&mut p, kids[0]).unwrap();
        let far = kids2.iter().map(|&k| prism_distance(&p, k, kids[3]).unwrap()).fold(0.0, f64::max);
        assert!((far - (0.25f64.powi(2) * 2.0).sqrt()).abs() < 1e-15);
    }
}
