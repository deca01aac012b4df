//! Space-time partitions into prisms `I x S`.
//!
//! Intervals, simplices and vertices live in append-only arenas shared by all
//! prisms. Children are created once and reused, so two prisms occupy the same
//! time interval (or spatial simplex) exactly when they share the id. The leaf
//! set is kept in ascending id order and every query iterates it in that order.

mod io;
mod neighbors;
mod spatial;
mod validate;

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::dyadic::Dyadic;
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    descendant_shape_bound, det_exact, diameter, point_in_simplex_exact, maubach_split, simplex_measure, simplex_shape,
    unit_ball_volume, AnisotropyParams, TaggedSimplex,
};
use crate::ids::{IntervalId, PrismId, SimplexId, VertexId};

pub use io::{export_vtk, read_mesh, write_mesh};
pub use neighbors::{LeafIndex, SpatialMeet};
pub use spatial::SpatialMesh;
pub use validate::{ValidityReport, Violation};

#[derive(Clone, Debug)]
pub struct VertexRec {
    pub exact: Vec<Dyadic>,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct IntervalRec {
    pub lo: Dyadic,
    pub hi: Dyadic,
    pub right_closed: bool,
    pub level: u32,
    pub parent: Option<IntervalId>,
    pub children: Option<[IntervalId; 2]>,
}

impl IntervalRec {
    pub fn bounds(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).to_f64()
    }
}

#[derive(Clone, Debug)]
pub struct SimplexRec {
    pub vertices: Vec<VertexId>,
    pub tag: usize,
    pub level: u32,
    pub parent: Option<SimplexId>,
    pub children: Option<[SimplexId; 2]>,
    pub root: SimplexId,
    /// Per vertex, the bitmask of root vertices carrying positive barycentric weight.
    pub support: Vec<u32>,
    pub measure: f64,
}

#[derive(Clone, Debug)]
pub struct PrismRec {
    pub interval: IntervalId,
    pub simplex: SimplexId,
    pub level: u32,
    pub parent: Option<PrismId>,
    pub children: Vec<PrismId>,
}

/// Aggregate mesh constants.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshStats {
    pub leaves: usize,
    pub max_level: u32,
    /// Largest and smallest root interval length.
    pub mu1: f64,
    pub mu2: f64,
    /// Largest and smallest root simplex measure.
    pub mu3: f64,
    pub mu4: f64,
    pub kappa0: f64,
    pub a0: f64,
    pub kappa: f64,
    pub a: f64,
}

#[derive(Clone, Debug)]
pub struct Partition {
    params: AnisotropyParams,
    t_start: Dyadic,
    t_end: Dyadic,
    vertices: Vec<VertexRec>,
    vertex_lookup: HashMap<Vec<Dyadic>, VertexId>,
    intervals: Vec<IntervalRec>,
    simplices: Vec<SimplexRec>,
    prisms: Vec<Option<PrismRec>>,
    leaves: BTreeSet<PrismId>,
    by_simplex: HashMap<SimplexId, BTreeSet<PrismId>>,
    by_vertex: HashMap<VertexId, BTreeSet<PrismId>>,
    root_intervals: Vec<IntervalId>,
    root_simplices: Vec<SimplexId>,
    boundary_root_facets: HashSet<(SimplexId, usize)>,
    atomic_splits: u64,
    size_constants: std::sync::OnceLock<(f64, f64)>,
}

impl Partition {
    /// Tensor mesh `{[t_k, t_{k+1})} x T0`. The last interval is closed.
    pub fn tensor_initial(time_points: &[f64], mesh: &SpatialMesh, params: AnisotropyParams) -> Result<Self> {
        if params.d != mesh.d {
            return invalid(format!("params have d = {} but the mesh has d = {}", params.d, mesh.d));
        }
        if time_points.len() < 2 {
            return invalid("need at least two time points");
        }
        let times: Vec<Dyadic> = time_points
            .iter()
            .map(|&t| Dyadic::from_f64(t).ok_or_else(|| Error::InvalidInput(format!("time point {t}"))))
            .collect::<Result<_>>()?;
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("time points must be strictly increasing");
        }
        let mut p = Partition {
            params,
            t_start: times[0],
            t_end: *times.last().unwrap(),
            vertices: Vec::new(),
            vertex_lookup: HashMap::new(),
            intervals: Vec::new(),
            simplices: Vec::new(),
            prisms: Vec::new(),
            leaves: BTreeSet::new(),
            by_simplex: HashMap::new(),
            by_vertex: HashMap::new(),
            root_intervals: Vec::new(),
            root_simplices: Vec::new(),
            boundary_root_facets: HashSet::new(),
            atomic_splits: 0,
            size_constants: Default::default(),
        };
        for (k, w) in times.windows(2).enumerate() {
            let id = IntervalId::from_index(p.intervals.len());
            p.intervals.push(IntervalRec {
                lo: w[0],
                hi: w[1],
                right_closed: k + 2 == times.len(),
                level: 0,
                parent: None,
                children: None,
            });
            p.root_intervals.push(id);
        }
        let vids: Vec<VertexId> = mesh
            .vertices
            .iter()
            .map(|v| {
                let exact: Option<Vec<Dyadic>> = v.iter().map(|&x| Dyadic::from_f64(x)).collect();
                exact
                    .map(|e| p.vertex_id(e))
                    .ok_or_else(|| Error::InvalidInput("non-finite vertex".into()))
            })
            .collect::<Result<_>>()?;
        if vids.iter().collect::<HashSet<_>>().len() != vids.len() {
            return invalid("spatial mesh has duplicate vertices");
        }
        for (cell, tag) in &mesh.cells {
            let id = SimplexId::from_index(p.simplices.len());
            let vertices: Vec<VertexId> = cell.iter().map(|&i| vids[i]).collect();
            let pts: Vec<Vec<f64>> = cell.iter().map(|&i| mesh.vertices[i].clone()).collect();
            p.simplices.push(SimplexRec {
                vertices,
                tag: *tag,
                level: 0,
                parent: None,
                children: None,
                root: id,
                support: (0..=mesh.d).map(|i| 1u32 << i).collect(),
                measure: simplex_measure(&pts),
            });
            p.root_simplices.push(id);
        }
        p.classify_root_facets()?;
        p.check_refinement_conformity()?;
        for &i in &p.root_intervals.clone() {
            for &s in &p.root_simplices.clone() {
                p.new_prism(i, s, 0, None);
            }
        }
        Ok(p)
    }

    fn classify_root_facets(&mut self) -> Result<()> {
        let mut count: HashMap<Vec<VertexId>, Vec<(SimplexId, usize)>> = HashMap::new();
        for &s in &self.root_simplices {
            let vs = &self.simplices[s.index()].vertices;
            for skip in 0..vs.len() {
                count.entry(facet_key(vs, skip)).or_default().push((s, skip));
            }
        }
        for (key, owners) in count {
            match owners.len() {
                1 => {
                    self.boundary_root_facets.insert(owners[0]);
                }
                2 => {}
                n => {
                    return Err(Error::NonConforming(format!(
                        "facet {key:?} is shared by {n} simplices"
                    )))
                }
            }
        }
        // a facet seen once may still be interior when another cell meets it
        // in a T-junction; look for foreign vertices on boundary facets
        let facets: Vec<(SimplexId, usize)> = self.boundary_root_facets.iter().copied().collect();
        let root_vertices: BTreeSet<VertexId> =
            self.root_simplices.iter().flat_map(|s| self.simplices[s.index()].vertices.iter().copied()).collect();
        for (s, skip) in facets {
            let vs = self.simplices[s.index()].vertices.clone();
            let exact: Vec<Vec<Dyadic>> = vs.iter().map(|v| self.vertices[v.index()].exact.clone()).collect();
            let pts: Vec<&Vec<f64>> = vs.iter().map(|v| &self.vertices[v.index()].coords).collect();
            let d = self.params.d;
            let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
                .map(|k| {
                    let it = pts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p[k]);
                    (it.clone().fold(f64::MAX, f64::min), it.fold(f64::MIN, f64::max))
                })
                .unzip();
            for &vi in &root_vertices {
                let v = &self.vertices[vi.index()];
                if vs.contains(&vi)
                    || (0..d).any(|k| v.coords[k] < lo[k] || v.coords[k] > hi[k])
                {
                    continue;
                }
                let mut moved = exact.clone();
                moved[skip] = v.exact.clone();
                let rows: Vec<Vec<Dyadic>> = moved[1..]
                    .iter()
                    .map(|q| q.iter().zip(&moved[0]).map(|(a, b)| *a - *b).collect())
                    .collect();
                if det_exact(&rows).is_zero() && point_in_simplex_exact(&exact, &v.exact) {
                    return Err(Error::NonConforming(format!(
                        "vertex {:?} lies on a facet of cell {s} without being its vertex",
                        v.coords
                    )));
                }
            }
        }
        Ok(())
    }

    /// Uniform refinement must stay conforming for the exact intersection
    /// predicates; it does for Kuhn-type labelings. Checked `d` levels deep.
    fn check_refinement_conformity(&mut self) -> Result<()> {
        let mut level: Vec<SimplexId> = self.root_simplices.clone();
        for depth in 0..=self.params.d {
            let mut count: HashMap<Vec<VertexId>, usize> = HashMap::new();
            for &s in &level {
                let vs = self.simplices[s.index()].vertices.clone();
                for skip in 0..vs.len() {
                    let key = facet_key(&vs, skip);
                    let boundary = self.is_boundary_facet(s, skip);
                    let c = count.entry(key).or_insert(0);
                    *c += if boundary { 2 } else { 1 };
                }
            }
            if let Some((key, c)) = count.iter().find(|(_, &c)| c != 2) {
                return Err(Error::NonConforming(format!(
                    "uniform refinement of depth {depth} is not conforming: facet {key:?} seen {c} times"
                )));
            }
            if depth == self.params.d {
                break;
            }
            let mut next = Vec::with_capacity(level.len() * 2);
            for s in level {
                next.extend(self.simplex_children(s));
            }
            level = next;
        }
        Ok(())
    }

    pub(crate) fn is_boundary_facet(&self, s: SimplexId, skip: usize) -> bool {
        let rec = &self.simplices[s.index()];
        let d = self.params.d;
        let mask = rec
            .support
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .fold(0u32, |m, (_, &b)| m | b);
        let full = (1u32 << (d + 1)) - 1;
        let missing = full & !mask;
        if missing == 0 {
            return false;
        }
        let i = missing.trailing_zeros() as usize;
        self.boundary_root_facets.contains(&(rec.root, i))
    }

    fn vertex_id(&mut self, exact: Vec<Dyadic>) -> VertexId {
        if let Some(&id) = self.vertex_lookup.get(&exact) {
            return id;
        }
        let id = VertexId::from_index(self.vertices.len());
        let coords = exact.iter().map(|c| c.to_f64()).collect();
        self.vertices.push(VertexRec { exact: exact.clone(), coords });
        self.vertex_lookup.insert(exact, id);
        id
    }

    pub(crate) fn simplex_children(&mut self, s: SimplexId) -> [SimplexId; 2] {
        if let Some(c) = self.simplices[s.index()].children {
            return c;
        }
        let rec = self.simplices[s.index()].clone();
        let a = &self.vertices[rec.vertices[0].index()].exact;
        let b = &self.vertices[rec.vertices[rec.tag].index()].exact;
        let z: Vec<Dyadic> = a.iter().zip(b).map(|(x, y)| Dyadic::midpoint(*x, *y)).collect();
        let zid = self.vertex_id(z);
        let ([va, vb], tag) = maubach_split(&rec.vertices, rec.tag, zid);
        let zmask = rec.support[0] | rec.support[rec.tag];
        let ([ma, mb], _) = maubach_split(&rec.support, rec.tag, zmask);
        let mut ids = [SimplexId(0); 2];
        for (k, (vs, support)) in [(va, ma), (vb, mb)].into_iter().enumerate() {
            ids[k] = SimplexId::from_index(self.simplices.len());
            self.simplices.push(SimplexRec {
                vertices: vs,
                tag,
                level: rec.level + 1,
                parent: Some(s),
                children: None,
                root: rec.root,
                support,
                measure: rec.measure * 0.5,
            });
        }
        self.simplices[s.index()].children = Some(ids);
        ids
    }

    pub(crate) fn interval_children(&mut self, i: IntervalId) -> [IntervalId; 2] {
        if let Some(c) = self.intervals[i.index()].children {
            return c;
        }
        let rec = self.intervals[i.index()].clone();
        let mid = Dyadic::midpoint(rec.lo, rec.hi);
        let a = IntervalId::from_index(self.intervals.len());
        let b = IntervalId::from_index(self.intervals.len() + 1);
        let mk = |lo, hi, rc| IntervalRec {
            lo,
            hi,
            right_closed: rc,
            level: rec.level + 1,
            parent: Some(i),
            children: None,
        };
        self.intervals.push(mk(rec.lo, mid, false));
        self.intervals.push(mk(mid, rec.hi, rec.right_closed));
        self.intervals[i.index()].children = Some([a, b]);
        [a, b]
    }

    /// The `2^m` descendants of `i` after `m` bisections, in time order.
    fn interval_descendants(&mut self, i: IntervalId, m: u32) -> Vec<IntervalId> {
        let mut cur = vec![i];
        for _ in 0..m {
            cur = cur.into_iter().flat_map(|j| self.interval_children(j)).collect();
        }
        cur
    }

    fn new_prism(&mut self, interval: IntervalId, simplex: SimplexId, level: u32, parent: Option<PrismId>) -> PrismId {
        let id = PrismId::from_index(self.prisms.len());
        self.prisms.push(Some(PrismRec { interval, simplex, level, parent, children: Vec::new() }));
        self.insert_leaf(id);
        id
    }

    fn insert_leaf(&mut self, id: PrismId) {
        let s = self.prism(id).simplex;
        self.leaves.insert(id);
        self.by_simplex.entry(s).or_default().insert(id);
        for v in self.simplices[s.index()].vertices.clone() {
            self.by_vertex.entry(v).or_default().insert(id);
        }
    }

    fn remove_leaf(&mut self, id: PrismId) {
        let s = self.prism(id).simplex;
        self.leaves.remove(&id);
        if let Some(set) = self.by_simplex.get_mut(&s) {
            set.remove(&id);
            if set.is_empty() {
                self.by_simplex.remove(&s);
            }
        }
        for v in self.simplices[s.index()].vertices.clone() {
            if let Some(set) = self.by_vertex.get_mut(&v) {
                set.remove(&id);
                if set.is_empty() {
                    self.by_vertex.remove(&v);
                }
            }
        }
    }

    /// Replace a leaf by its `2^(m+1)` children: one spatial bisection and
    /// `m` interval bisections, `m` fixed by the anisotropy.
    pub(crate) fn split_leaf(&mut self, id: PrismId) -> Result<Vec<PrismId>> {
        if !self.is_leaf(id) {
            return Err(Error::NotALeaf(id));
        }
        let rec = self.prism(id).clone();
        let n = rec.level + 1;
        let m = self.params.temporal_bisections(n);
        let kids = self.simplex_children(rec.simplex);
        let ints = self.interval_descendants(rec.interval, m);
        debug_assert_eq!(self.intervals[ints[0].index()].level, self.params.interval_level(n));
        self.remove_leaf(id);
        let mut children = Vec::with_capacity(ints.len() * 2);
        for &i in &ints {
            for &s in &kids {
                children.push(self.new_prism(i, s, n, Some(id)));
            }
        }
        self.prisms[id.index()].as_mut().unwrap().children = children.clone();
        self.atomic_splits += 1;
        Ok(children)
    }

    pub fn params(&self) -> &AnisotropyParams {
        &self.params
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    /// `(0, T)` as given by the first and last time point.
    pub fn time_domain(&self) -> (Dyadic, Dyadic) {
        (self.t_start, self.t_end)
    }

    pub fn leaves(&self) -> impl Iterator<Item = PrismId> + '_ {
        self.leaves.iter().copied()
    }

    pub fn leaf_set(&self) -> &BTreeSet<PrismId> {
        &self.leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, id: PrismId) -> bool {
        self.leaves.contains(&id)
    }

    pub fn atomic_split_count(&self) -> u64 {
        self.atomic_splits
    }

    pub fn prism_exists(&self, id: PrismId) -> bool {
        self.prisms.get(id.index()).is_some_and(|p| p.is_some())
    }

    pub fn prism(&self, id: PrismId) -> &PrismRec {
        self.prisms[id.index()].as_ref().expect("unknown prism id")
    }

    pub fn interval(&self, id: IntervalId) -> &IntervalRec {
        &self.intervals[id.index()]
    }

    pub fn simplex(&self, id: SimplexId) -> &SimplexRec {
        &self.simplices[id.index()]
    }

    pub fn vertex(&self, id: VertexId) -> &VertexRec {
        &self.vertices[id.index()]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn prism_interval(&self, id: PrismId) -> &IntervalRec {
        self.interval(self.prism(id).interval)
    }

    pub fn prism_simplex(&self, id: PrismId) -> &SimplexRec {
        self.simplex(self.prism(id).simplex)
    }

    pub fn level(&self, id: PrismId) -> u32 {
        self.prism(id).level
    }

    pub fn simplex_points(&self, s: SimplexId) -> Vec<Vec<f64>> {
        self.simplices[s.index()]
            .vertices
            .iter()
            .map(|v| self.vertices[v.index()].coords.clone())
            .collect()
    }

    pub fn simplex_exact(&self, s: SimplexId) -> Vec<Vec<Dyadic>> {
        self.simplices[s.index()]
            .vertices
            .iter()
            .map(|v| self.vertices[v.index()].exact.clone())
            .collect()
    }

    /// The simplex as a standalone value (vertex coordinates, tag and level).
    pub fn tagged_simplex(&self, s: SimplexId) -> TaggedSimplex {
        let r = self.simplex(s);
        TaggedSimplex { vertices: self.simplex_exact(s), tag: r.tag, level: r.level }
    }

    pub fn prism_measure(&self, id: PrismId) -> f64 {
        self.prism_interval(id).length() * self.prism_simplex(id).measure
    }

    pub fn prism_diameter(&self, id: PrismId) -> f64 {
        let t = self.prism_interval(id).length();
        let x = diameter(&self.simplex_points(self.prism(id).simplex));
        (t * t + x * x).sqrt()
    }

    pub fn root_simplices(&self) -> &[SimplexId] {
        &self.root_simplices
    }

    pub fn root_intervals(&self) -> &[IntervalId] {
        &self.root_intervals
    }

    /// Ancestor of `s` at `level` (itself when the levels agree).
    pub fn simplex_ancestor(&self, mut s: SimplexId, level: u32) -> SimplexId {
        while self.simplices[s.index()].level > level {
            s = self.simplices[s.index()].parent.expect("root above requested level");
        }
        s
    }

    /// Ancestor prism of `id` that is a leaf, if `id` lies below the leaves.
    pub fn leaf_ancestor(&self, mut id: PrismId) -> Option<PrismId> {
        loop {
            if self.is_leaf(id) {
                return Some(id);
            }
            id = self.prism(id).parent?;
        }
    }

    /// Simplices active at time `t`, i.e. the spatial slice of the partition.
    pub fn active_triangulation(&self, t: f64) -> Result<Vec<SimplexId>> {
        let td = Dyadic::from_f64(t).ok_or(Error::TimeOutOfRange(t))?;
        if td < self.t_start || td > self.t_end {
            return Err(Error::TimeOutOfRange(t));
        }
        let mut out: Vec<SimplexId> = self
            .leaves
            .iter()
            .filter(|&&p| {
                let i = self.prism_interval(p);
                i.lo <= td && (td < i.hi || (i.right_closed && td == i.hi))
            })
            .map(|&p| self.prism(p).simplex)
            .collect();
        out.sort();
        Ok(out)
    }

    /// Root-level constants plus current shape and anisotropy measures.
    pub fn stats(&self) -> MeshStats {
        let ri: Vec<f64> = self.root_intervals.iter().map(|&i| self.interval(i).length()).collect();
        let rs: Vec<f64> = self.root_simplices.iter().map(|&s| self.simplex(s).measure).collect();
        let fmax = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max);
        let fmin = |v: &[f64]| v.iter().cloned().fold(f64::MAX, f64::min);
        let kappa0 = self
            .root_simplices
            .iter()
            .map(|&s| simplex_shape(&self.simplex_points(s)))
            .fold(0.0, f64::max);
        let sigma = self.params.ratio();
        let aniso = |len: f64, meas: f64| {
            let r = len / meas.powf(sigma);
            r.max(1.0 / r)
        };
        let mut a0: f64 = 0.0;
        for &i in &self.root_intervals {
            for &s in &self.root_simplices {
                a0 = a0.max(aniso(self.interval(i).length(), self.simplex(s).measure));
            }
        }
        let mut kappa: f64 = 0.0;
        let mut a: f64 = 0.0;
        let mut seen = HashSet::new();
        let mut max_level = 0;
        for &p in &self.leaves {
            let r = self.prism(p);
            max_level = max_level.max(r.level);
            a = a.max(aniso(self.interval(r.interval).length(), self.simplex(r.simplex).measure));
            if seen.insert(r.simplex) {
                kappa = kappa.max(simplex_shape(&self.simplex_points(r.simplex)));
            }
        }
        MeshStats {
            leaves: self.leaves.len(),
            max_level,
            mu1: fmax(&ri),
            mu2: fmin(&ri),
            mu3: fmax(&rs),
            mu4: fmin(&rs),
            kappa0,
            a0,
            kappa,
            a,
        }
    }

    /// Constants `(c, C)` with
    /// `c 2^(-gmax l) <= diam(I x S) <= C 2^(-gmin l)` for every prism of level `l`,
    /// where `gmax, gmin` are the extreme anisotropic exponents.
    pub fn level_size_constants(&self) -> (f64, f64) {
        *self.size_constants.get_or_init(|| self.compute_size_constants())
    }

    fn compute_size_constants(&self) -> (f64, f64) {
        let st = self.stats();
        let d = self.params.d;
        let fact: f64 = (1..=d).map(|k| k as f64).product();
        let kmax = self
            .root_simplices
            .iter()
            .map(|&s| descendant_shape_bound(&self.tagged_simplex(s), 3 * d as u32 + 1))
            .fold(0.0, f64::max);
        let regular = ((d + 1) as f64 / 2f64.powi(d as i32)).sqrt();
        let low_s = (fact * st.mu4 / regular).powf(1.0 / d as f64);
        let up_s = kmax * (st.mu3 / unit_ball_volume(d)).powf(1.0 / d as f64);
        let c = (st.mu2 / 2.0).min(low_s);
        let big = (st.mu1 * st.mu1 + up_s * up_s).sqrt();
        (c, big)
    }

    /// Bracket for the diameter of prisms at `level`.
    pub fn level_size_bounds(&self, level: u32) -> (f64, f64) {
        let (c, big) = self.level_size_constants();
        let l = level as f64;
        (
            c * 2f64.powf(-self.params.gamma_max() * l),
            big * 2f64.powf(-self.params.gamma_min() * l),
        )
    }
}

pub(crate) fn facet_key(vs: &[VertexId], skip: usize) -> Vec<VertexId> {
    let mut k: Vec<VertexId> = vs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, v)| *v)
        .collect();
    k.sort();
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square(s1: f64, s2: f64) -> Partition {
        let m = SpatialMesh::kuhn_box(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap();
        Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(s1, s2, 2).unwrap()).unwrap()
    }

    #[test]
    fn tensor_initial_layout() {
        let m = SpatialMesh::interval(0.0, 1.0, 2).unwrap();
        let p = Partition::tensor_initial(&[0.0, 0.5, 1.0], &m, AnisotropyParams::new(1.0, 1.0, 1).unwrap()).unwrap();
        assert_eq!(p.num_leaves(), 4);
        let st = p.stats();
        assert_eq!((st.mu1, st.mu2, st.mu3, st.mu4), (0.5, 0.5, 0.5, 0.5));
        assert_eq!(st.a0, 1.0);
        assert!(!p.prism_interval(PrismId(0)).right_closed);
        assert!(p.prism_interval(PrismId(3)).right_closed);
    }

    #[test]
    fn split_produces_anisotropic_children() {
        let mut p = unit_square(1.0, 4.0);
        // s2/(s1 d) = 2: the first spatial bisection comes with two time bisections
        let kids = p.split_leaf(PrismId(0)).unwrap();
        assert_eq!(kids.len(), 8);
        for &k in &kids {
            assert_eq!(p.prism_interval(k).length(), 0.25);
            assert_eq!(p.prism_simplex(k).measure, 0.25);
            assert_eq!(p.level(k), 1);
        }
        let total: f64 = p.leaves().map(|l| p.prism_measure(l)).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(matches!(p.split_leaf(PrismId(0)), Err(Error::NotALeaf(_))));
    }

    #[test]
    fn children_are_shared_between_prisms() {
        let mut p = unit_square(1.0, 1.0);
        let a = p.split_leaf(PrismId(0)).unwrap();
        let sa: BTreeSet<SimplexId> = a.iter().map(|&k| p.prism(k).simplex).collect();
        assert_eq!(sa.len(), 2);
        let before = p.simplices.len();
        p.simplex_children(p.prism(PrismId(0)).simplex);
        assert_eq!(p.simplices.len(), before);
    }

    #[test]
    fn nonconforming_root_mesh_is_rejected() {
        // a hanging vertex at (0.5, 0)
        let verts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, -1.0]];
        let cells = vec![(vec![0, 1, 3], 2), (vec![1, 4, 3], 2), (vec![0, 2, 5], 2)];
        let m = SpatialMesh::new(2, verts, cells).unwrap();
        let r = Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(1.0, 1.0, 2).unwrap());
        assert!(matches!(r, Err(Error::NonConforming(_))));
    }

    #[test]
    fn active_triangulation_respects_half_open_intervals() {
        let mut p = unit_square(1.0, 2.0);
        p.split_leaf(PrismId(0)).unwrap();
        assert_eq!(p.active_triangulation(0.5).unwrap().len(), 3);
        assert_eq!(p.active_triangulation(1.0).unwrap().len(), 3);
        assert!(p.active_triangulation(1.5).is_err());
    }

    #[test]
    fn diameters_respect_level_bracket() {
        let mut p = unit_square(1.0, 0.5);
        for _ in 0..6 {
            let l = *p.leaf_set().iter().next_back().unwrap();
            p.split_leaf(l).unwrap();
        }
        for l in p.leaves().collect::<Vec<_>>() {
            let (lo, hi) = p.level_size_bounds(p.level(l));
            let dm = p.prism_diameter(l);
            assert!(lo <= dm && dm <= hi, "{lo} {dm} {hi}");
        }
    }
}
