use std::collections::{BTreeMap, HashMap, HashSet};

use super::{facet_key, Partition};
use crate::dyadic::Dyadic;
use crate::ids::{PrismId, SimplexId, VertexId};

const MAX_REPORTED: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Only intervals ending at `T` may contain their right endpoint.
    Closure { prism: PrismId },
    /// The active simplices of a time slab do not tile the domain.
    Measure { slab: (f64, f64), expected: f64, found: f64 },
    /// A facet inside the domain is not shared by exactly two active simplices.
    NonConforming { slab: (f64, f64), facet: Vec<VertexId>, prisms: Vec<PrismId> },
    /// Prisms meeting across a time face differ by more than one level.
    TimeIrregular { a: PrismId, b: PrismId },
    /// Segments meeting at a point (d = 1) differ by more than one level.
    SpaceIrregular { a: PrismId, b: PrismId },
    /// Closures meet in something that is a face of neither prism.
    Hierarchy { a: PrismId, b: PrismId },
}

#[derive(Clone, Debug, Default)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
    pub slabs: usize,
    /// Largest number of leaves touching a single leaf, itself included.
    pub max_omega1: usize,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, v: Violation) {
        if self.violations.len() < MAX_REPORTED {
            self.violations.push(v);
        }
    }
}

struct FacetState {
    holders: Vec<PrismId>,
    boundary: bool,
}

impl FacetState {
    fn ok(&self) -> bool {
        let n = self.holders.len();
        n == 0 || n == if self.boundary { 1 } else { 2 }
    }
}

impl Partition {
    /// Full structural check: tiling, per-slab conformity, 1-irregularity and
    /// the common-face property of all touching pairs.
    pub fn validate(&self) -> ValidityReport {
        let mut rep = ValidityReport::default();
        self.check_closure(&mut rep);
        self.sweep(&mut rep);
        self.check_hierarchy(&mut rep);
        rep
    }

    fn check_closure(&self, rep: &mut ValidityReport) {
        for l in self.leaves() {
            let i = self.prism_interval(l);
            if i.right_closed != (i.hi == self.t_end) {
                rep.push(Violation::Closure { prism: l });
            }
        }
    }

    fn sweep(&self, rep: &mut ValidityReport) {
        let mut starts: BTreeMap<Dyadic, Vec<PrismId>> = BTreeMap::new();
        let mut ends: BTreeMap<Dyadic, Vec<PrismId>> = BTreeMap::new();
        for l in self.leaves() {
            let i = self.prism_interval(l);
            starts.entry(i.lo).or_default().push(l);
            ends.entry(i.hi).or_default().push(l);
        }
        let mut times: Vec<Dyadic> = starts.keys().chain(ends.keys()).copied().collect();
        times.sort();
        times.dedup();
        let omega: f64 = self.root_simplices.iter().map(|&s| self.simplex(s).measure).sum();
        let mut facets: HashMap<Vec<VertexId>, FacetState> = HashMap::new();
        let mut bad: HashSet<Vec<VertexId>> = HashSet::new();
        let mut area = 0.0f64;
        let none = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let ending = ends.get(&t).unwrap_or(&none);
            let starting = starts.get(&t).unwrap_or(&none);
            for &e in ending {
                area -= self.prism_simplex(e).measure;
                for key in self.facet_keys(e) {
                    let st = facets.get_mut(&key).unwrap();
                    st.holders.retain(|&x| x != e);
                    if st.ok() {
                        bad.remove(&key);
                    } else {
                        bad.insert(key);
                    }
                }
            }
            for &b in starting {
                area += self.prism_simplex(b).measure;
                let s = self.prism(b).simplex;
                for (skip, key) in self.facet_keys(b).into_iter().enumerate() {
                    let st = facets
                        .entry(key.clone())
                        .or_insert_with(|| FacetState { holders: Vec::new(), boundary: self.is_boundary_facet(s, skip) });
                    if self.d() == 1 {
                        for &o in &st.holders {
                            if self.level(o).abs_diff(self.level(b)) > 1 {
                                rep.push(Violation::SpaceIrregular { a: o.min(b), b: o.max(b) });
                            }
                        }
                    }
                    st.holders.push(b);
                    if st.ok() {
                        bad.remove(&key);
                    } else {
                        bad.insert(key);
                    }
                }
            }
            self.check_time_faces(ending, starting, rep);
            if k + 1 == times.len() {
                break;
            }
            let slab = (t.to_f64(), times[k + 1].to_f64());
            rep.slabs += 1;
            if (area - omega).abs() > 1e-9 * omega {
                rep.push(Violation::Measure { slab, expected: omega, found: area });
            }
            let mut keys: Vec<&Vec<VertexId>> = bad.iter().collect();
            keys.sort();
            for key in keys.into_iter().take(4) {
                let mut prisms = facets[key].holders.clone();
                prisms.sort();
                rep.push(Violation::NonConforming { slab, facet: key.clone(), prisms });
            }
        }
        if times.first() != Some(&self.t_start) || times.last() != Some(&self.t_end) {
            rep.push(Violation::Measure { slab: (self.t_start.to_f64(), self.t_end.to_f64()), expected: omega, found: 0.0 });
        }
    }

    fn facet_keys(&self, p: PrismId) -> Vec<Vec<VertexId>> {
        let vs = &self.prism_simplex(p).vertices;
        (0..vs.len()).map(|skip| facet_key(vs, skip)).collect()
    }

    fn check_time_faces(&self, ending: &[PrismId], starting: &[PrismId], rep: &mut ValidityReport) {
        let index = |v: &[PrismId]| {
            let mut m: HashMap<SimplexId, Vec<PrismId>> = HashMap::new();
            for &p in v {
                m.entry(self.prism(p).simplex).or_default().push(p);
            }
            m
        };
        let (em, sm) = (index(ending), index(starting));
        let mut check = |p: PrismId, other: &HashMap<SimplexId, Vec<PrismId>>, strict: bool| {
            let mut cur = self.prism(p).simplex;
            if strict {
                match self.simplex(cur).parent {
                    Some(q) => cur = q,
                    None => return,
                }
            }
            loop {
                for &o in other.get(&cur).into_iter().flatten() {
                    if self.level(o).abs_diff(self.level(p)) > 1 {
                        rep.push(Violation::TimeIrregular { a: o.min(p), b: o.max(p) });
                    }
                }
                match self.simplex(cur).parent {
                    Some(q) => cur = q,
                    None => break,
                }
            }
        };
        for &e in ending {
            check(e, &sm, false);
        }
        for &b in starting {
            check(b, &em, true);
        }
    }

    fn check_hierarchy(&self, rep: &mut ValidityReport) {
        let leaves: Vec<PrismId> = self.leaves().collect();
        let mut counts: HashMap<PrismId, usize> = leaves.iter().map(|&l| (l, 1)).collect();
        let mut visit = |a: PrismId, b: PrismId, rep: &mut ValidityReport| {
            if !self.closures_intersect(a, b) {
                return;
            }
            *counts.get_mut(&a).unwrap() += 1;
            *counts.get_mut(&b).unwrap() += 1;
            if !self.meets_in_face(a, b) {
                rep.push(Violation::Hierarchy { a, b });
            }
        };
        if leaves.len() <= 400 {
            for (i, &a) in leaves.iter().enumerate() {
                for &b in &leaves[i + 1..] {
                    visit(a, b, rep);
                }
            }
        } else {
            let index = self.leaf_index();
            for &a in &leaves {
                let (lo, hi) = self.prism_box(a);
                for b in index.query(lo, hi) {
                    if b > a {
                        visit(a, b, rep);
                    }
                }
            }
        }
        rep.max_omega1 = counts.values().copied().max().unwrap_or(0);
    }
}
