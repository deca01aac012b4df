use std::collections::{BTreeSet, HashMap, HashSet};

use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

use super::Partition;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::geometry::maubach_split;
use crate::ids::{PrismId, SimplexId};

/// Intersection of two closed simplices of the same hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpatialMeet {
    /// `None` for an empty intersection.
    pub dim: Option<usize>,
    pub face_of_first: bool,
    pub face_of_second: bool,
}

impl SpatialMeet {
    const EMPTY: SpatialMeet = SpatialMeet { dim: None, face_of_first: true, face_of_second: true };
}

/// Closed-interval intersection: `None`, a point, or a proper interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TimeMeet {
    Empty,
    Point,
    Segment { lo: Dyadic, hi: Dyadic },
}

impl Partition {
    /// Support masks of the vertices of `s` relative to its ancestor `anc`.
    fn relative_support(&self, s: SimplexId, anc: SimplexId) -> Vec<u32> {
        let mut chain = vec![s];
        let mut cur = s;
        while cur != anc {
            cur = self.simplex(cur).parent.expect("not an ancestor");
            chain.push(cur);
        }
        let d = self.d();
        let mut masks: Vec<u32> = (0..=d).map(|i| 1 << i).collect();
        for w in chain.windows(2).rev() {
            let (child, parent) = (w[0], w[1]);
            let rec = self.simplex(parent);
            let z = masks[0] | masks[rec.tag];
            let ([a, b], _) = maubach_split(&masks, rec.tag, z);
            masks = if rec.children.unwrap()[0] == child { a } else { b };
        }
        masks
    }

    /// Exact intersection of the closures of two simplices.
    ///
    /// The intersection is always a face of the finer one; it is computed from
    /// the vertices shared with the coarser simplex at the coarser level, where
    /// uniform refinement is conforming.
    pub fn spatial_meet(&self, a: SimplexId, b: SimplexId) -> SpatialMeet {
        let d = self.d();
        if a == b {
            return SpatialMeet { dim: Some(d), face_of_first: true, face_of_second: true };
        }
        let swapped = self.simplex(a).level < self.simplex(b).level;
        let (fine, coarse) = if swapped { (b, a) } else { (a, b) };
        let flip = |m: SpatialMeet| {
            if swapped {
                SpatialMeet { dim: m.dim, face_of_first: m.face_of_second, face_of_second: m.face_of_first }
            } else {
                m
            }
        };
        let anc = self.simplex_ancestor(fine, self.simplex(coarse).level);
        if anc == coarse {
            return flip(SpatialMeet { dim: Some(d), face_of_first: true, face_of_second: false });
        }
        let cverts = &self.simplex(coarse).vertices;
        let shared: u32 = self
            .simplex(anc)
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| cverts.contains(v))
            .fold(0, |m, (i, _)| m | (1 << i));
        if shared == 0 {
            return SpatialMeet::EMPTY;
        }
        let masks = self.relative_support(fine, anc);
        let fverts = &self.simplex(fine).vertices;
        let inside: Vec<usize> = (0..=d).filter(|&i| masks[i] & !shared == 0).collect();
        if inside.is_empty() {
            return SpatialMeet::EMPTY;
        }
        let face_of_coarse = inside.iter().all(|&i| cverts.contains(&fverts[i]));
        flip(SpatialMeet { dim: Some(inside.len() - 1), face_of_first: true, face_of_second: face_of_coarse })
    }

    pub(crate) fn time_meet(&self, a: PrismId, b: PrismId) -> TimeMeet {
        let (ia, ib) = (self.prism_interval(a), self.prism_interval(b));
        let lo = ia.lo.max(ib.lo);
        let hi = ia.hi.min(ib.hi);
        match lo.cmp(&hi) {
            std::cmp::Ordering::Greater => TimeMeet::Empty,
            std::cmp::Ordering::Equal => TimeMeet::Point,
            std::cmp::Ordering::Less => TimeMeet::Segment { lo, hi },
        }
    }

    pub(crate) fn time_overlap_positive(&self, a: PrismId, b: PrismId) -> bool {
        matches!(self.time_meet(a, b), TimeMeet::Segment { .. })
    }

    /// Whether the closures of two prisms intersect.
    pub fn closures_intersect(&self, a: PrismId, b: PrismId) -> bool {
        self.time_meet(a, b) != TimeMeet::Empty
            && self.spatial_meet(self.prism(a).simplex, self.prism(b).simplex).dim.is_some()
    }

    /// Whether `cl(a) ∩ cl(b)` is empty or a face of at least one of the prisms.
    pub fn meets_in_face(&self, a: PrismId, b: PrismId) -> bool {
        let tm = self.time_meet(a, b);
        if tm == TimeMeet::Empty {
            return true;
        }
        let sm = self.spatial_meet(self.prism(a).simplex, self.prism(b).simplex);
        if sm.dim.is_none() {
            return true;
        }
        let time_face = |p: PrismId| match tm {
            TimeMeet::Point => true,
            TimeMeet::Segment { lo, hi } => {
                let i = self.prism_interval(p);
                i.lo == lo && i.hi == hi
            }
            TimeMeet::Empty => unreachable!(),
        };
        (time_face(a) && sm.face_of_first) || (time_face(b) && sm.face_of_second)
    }

    fn require_leaf(&self, id: PrismId) -> Result<()> {
        if self.is_leaf(id) {
            Ok(())
        } else {
            Err(Error::NotALeaf(id))
        }
    }

    /// Neighbours touching in time: the parent simplex over an adjacent interval.
    pub fn neighbors_time(&self, id: PrismId) -> Result<BTreeSet<PrismId>> {
        self.require_leaf(id)?;
        let rec = self.prism(id);
        let mut out = BTreeSet::new();
        let Some(parent) = self.simplex(rec.simplex).parent else {
            return Ok(out);
        };
        let i = self.interval(rec.interval);
        if let Some(set) = self.by_simplex.get(&parent) {
            for &c in set {
                let j = self.prism_interval(c);
                if j.hi == i.lo || j.lo == i.hi {
                    out.insert(c);
                }
            }
        }
        Ok(out)
    }

    /// Neighbours in space whose refinement is forced by bisecting `id`.
    ///
    /// For `d >= 2` these contain the refinement edge and meet the simplex in a
    /// lower-dimensional face; for `d = 1` they are coarser segments sharing an
    /// endpoint. Both require positive overlap in time.
    pub fn neighbors_space(&self, id: PrismId) -> Result<BTreeSet<PrismId>> {
        self.require_leaf(id)?;
        let rec = self.prism(id);
        let s = self.simplex(rec.simplex);
        let d = self.d();
        let mut out = BTreeSet::new();
        let empty = BTreeSet::new();
        if d == 1 {
            for v in &s.vertices {
                for &c in self.by_vertex.get(v).unwrap_or(&empty) {
                    if c != id
                        && self.level(c) + 1 == rec.level
                        && self.time_overlap_positive(id, c)
                        && self.spatial_meet(rec.simplex, self.prism(c).simplex).dim == Some(0)
                    {
                        out.insert(c);
                    }
                }
            }
        } else {
            let a = self.by_vertex.get(&s.vertices[0]).unwrap_or(&empty);
            let b = self.by_vertex.get(&s.vertices[s.tag]).unwrap_or(&empty);
            for &c in a.intersection(b) {
                if c == id || !self.time_overlap_positive(id, c) {
                    continue;
                }
                let dim = self.spatial_meet(rec.simplex, self.prism(c).simplex).dim;
                if matches!(dim, Some(k) if k >= 1 && k < d) {
                    out.insert(c);
                }
            }
        }
        Ok(out)
    }

    /// Union of the time and space neighbours.
    pub fn necessary_neighbors(&self, id: PrismId) -> Result<BTreeSet<PrismId>> {
        let mut n = self.neighbors_time(id)?;
        n.extend(self.neighbors_space(id)?);
        Ok(n)
    }

    pub(crate) fn prism_box(&self, id: PrismId) -> ([f64; 4], [f64; 4]) {
        let (t0, t1) = self.prism_interval(id).bounds();
        let mut lo = [0.0; 4];
        let mut hi = [0.0; 4];
        lo[0] = t0;
        hi[0] = t1;
        for (k, _) in (0..self.d()).enumerate() {
            lo[k + 1] = f64::MAX;
            hi[k + 1] = f64::MIN;
        }
        for v in &self.prism_simplex(id).vertices {
            let c = &self.vertex(*v).coords;
            for k in 0..self.d() {
                lo[k + 1] = lo[k + 1].min(c[k]);
                hi[k + 1] = hi[k + 1].max(c[k]);
            }
        }
        (lo, hi)
    }

    /// Bounding-box index over the current leaves.
    pub fn leaf_index(&self) -> LeafIndex {
        let items = self
            .leaves()
            .map(|l| {
                let (lo, hi) = self.prism_box(l);
                GeomWithData::new(Rectangle::from_corners(pad(lo, -1.0), pad(hi, 1.0)), l)
            })
            .collect();
        LeafIndex { tree: RTree::bulk_load(items) }
    }

    /// `omega^j`: leaves reachable by `j` steps of closure contact from `id`.
    pub fn neighborhood(&self, id: PrismId, j: usize, index: &LeafIndex) -> BTreeSet<PrismId> {
        let mut members = BTreeSet::from([id]);
        let mut frontier = vec![id];
        for _ in 0..j {
            let mut next = Vec::new();
            for &m in &frontier {
                for c in index.touching(self, m) {
                    if members.insert(c) {
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        members
    }

    /// Leaves contained in `hull(union of intervals) x (union of simplices)`.
    pub fn cylindric_closure(&self, members: &BTreeSet<PrismId>, index: &LeafIndex) -> BTreeSet<PrismId> {
        let mut lo = Dyadic::ZERO;
        let mut hi = Dyadic::ZERO;
        let mut blo = [f64::MAX; 4];
        let mut bhi = [f64::MIN; 4];
        let mut simplices = HashSet::new();
        let mut ancestors = HashSet::new();
        for (k, &m) in members.iter().enumerate() {
            let i = self.prism_interval(m);
            if k == 0 || i.lo < lo {
                lo = i.lo;
            }
            if k == 0 || i.hi > hi {
                hi = i.hi;
            }
            let (a, b) = self.prism_box(m);
            for c in 0..4 {
                blo[c] = blo[c].min(a[c]);
                bhi[c] = bhi[c].max(b[c]);
            }
            let s = self.prism(m).simplex;
            simplices.insert(s);
            let mut cur = Some(s);
            while let Some(x) = cur {
                if !ancestors.insert(x) {
                    break;
                }
                cur = self.simplex(x).parent;
            }
        }
        let mut memo = HashMap::new();
        let mut out = BTreeSet::new();
        for c in index.query(pad(blo, -1.0), pad(bhi, 1.0)) {
            let i = self.prism_interval(c);
            if i.lo >= lo && i.hi <= hi && self.covered(self.prism(c).simplex, &simplices, &ancestors, &mut memo) {
                out.insert(c);
            }
        }
        out
    }

    fn covered(
        &self,
        s: SimplexId,
        members: &HashSet<SimplexId>,
        ancestors: &HashSet<SimplexId>,
        memo: &mut HashMap<SimplexId, bool>,
    ) -> bool {
        if let Some(&v) = memo.get(&s) {
            return v;
        }
        let mut cur = Some(s);
        let mut hit = false;
        while let Some(x) = cur {
            if members.contains(&x) {
                hit = true;
                break;
            }
            cur = self.simplex(x).parent;
        }
        if !hit && ancestors.contains(&s) {
            if let Some([a, b]) = self.simplex(s).children {
                hit = self.covered(a, members, ancestors, memo) && self.covered(b, members, ancestors, memo);
            }
        }
        memo.insert(s, hit);
        hit
    }
}

fn pad(mut p: [f64; 4], sign: f64) -> [f64; 4] {
    for x in &mut p {
        *x += sign * 1e-9 * x.abs().max(1.0);
    }
    p
}

/// R-tree over the bounding boxes of the leaves of one partition state.
/// Refining the partition invalidates it.
pub struct LeafIndex {
    tree: RTree<GeomWithData<Rectangle<[f64; 4]>, PrismId>>,
}

impl LeafIndex {
    /// Leaves whose padded boxes meet `[lo, hi]`, ascending by id.
    pub fn query(&self, lo: [f64; 4], hi: [f64; 4]) -> Vec<PrismId> {
        let mut v: Vec<PrismId> = self
            .tree
            .locate_in_envelope_intersecting(AABB::from_corners(lo, hi))
            .map(|g| g.data)
            .collect();
        v.sort();
        v
    }

    /// Leaves other than `id` whose closures meet the closure of `id`.
    pub fn touching(&self, part: &Partition, id: PrismId) -> Vec<PrismId> {
        let (lo, hi) = part.prism_box(id);
        self.query(pad(lo, -1.0), pad(hi, 1.0))
            .into_iter()
            .filter(|&c| c != id && part.closures_intersect(id, c))
            .collect()
    }

    /// Leaves whose closure contains the point, with a relative tolerance.
    pub fn locate_all(&self, part: &Partition, t: f64, x: &[f64]) -> Vec<PrismId> {
        let mut p = [0.0; 4];
        p[0] = t;
        p[1..=x.len()].copy_from_slice(x);
        self.query(pad(p, -1.0), pad(p, 1.0))
            .into_iter()
            .filter(|&c| {
                let (t0, t1) = part.prism_interval(c).bounds();
                let tol = 1e-12 * (t1 - t0).abs().max(1e-300);
                t >= t0 - tol
                    && t <= t1 + tol
                    && crate::polyapprox::barycentric(&part.simplex_points(part.prism(c).simplex), x)
                        .iter()
                        .all(|&l| l >= -1e-12)
            })
            .collect()
    }

    /// First leaf (by id) whose closure contains the point.
    pub fn locate(&self, part: &Partition, t: f64, x: &[f64]) -> Option<PrismId> {
        self.locate_all(part, t, x).into_iter().next()
    }

    pub fn len(&self) -> usize {
        self.tree.size()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.size() == 0
    }
}
