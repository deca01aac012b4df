//! Global Lagrange lattice with hanging-node classification.
//!
//! Nodes are keyed by exact coordinates scaled by `r1 - 1` (time) and `r2 - 1`
//! (space), which are integer combinations of dyadic vertex coordinates.
//! A hanging node takes the value of its master's polynomial; masters always
//! sit on a coarser level, so the constraints resolve by recursion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::sync::Arc;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::geometry::point_in_simplex_exact;
use crate::ids::{NodeId, PrismId};
use crate::mesh::Partition;
use crate::polyapprox::{barycentric, PolyOrders, ReferenceElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Free,
    HangingInTime,
    HangingInSpace,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Free => "free",
            NodeStatus::HangingInTime => "hanging-time",
            NodeStatus::HangingInSpace => "hanging-space",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LagrangeNode {
    pub id: NodeId,
    pub t: f64,
    pub x: Vec<f64>,
    /// Exact `(r1 - 1) t` followed by `(r2 - 1) x`.
    pub key: Vec<Dyadic>,
    pub owners: Vec<PrismId>,
    pub hangers: Vec<PrismId>,
    pub status: NodeStatus,
    pub master: Option<PrismId>,
}

/// `j(d)` such that every basis support lies in `omega^j` of its owners.
pub fn support_depth(d: usize) -> usize {
    if d == 1 {
        2
    } else {
        3
    }
}

#[derive(Clone, Debug)]
pub struct NodeLattice {
    pub orders: PolyOrders,
    pub d: usize,
    pub reference: Arc<ReferenceElement>,
    pub nodes: Vec<LagrangeNode>,
    /// Local node ids per leaf, in reference order.
    pub local: BTreeMap<PrismId, Vec<NodeId>>,
    /// Free nodes in ascending id order; their position is the coefficient index.
    pub free: Vec<NodeId>,
    free_index: HashMap<NodeId, usize>,
    /// Each node as a sparse combination of free coefficients.
    constraints: Vec<Vec<(usize, f64)>>,
    supports: Vec<BTreeSet<PrismId>>,
}

fn node_keys(p: &Partition, prism: PrismId, re: &ReferenceElement) -> Vec<Vec<Dyadic>> {
    let r1 = re.orders.r1 as i64;
    let iv = p.prism_interval(prism);
    let verts = p.simplex_exact(p.prism(prism).simplex);
    re.nodes
        .iter()
        .map(|&(n, j)| {
            let n = n as i64;
            let mut key = vec![iv.lo.scale_int(r1 - 1 - n) + iv.hi.scale_int(n)];
            let beta = &re.space_nodes[j];
            for c in 0..re.d {
                let mut acc = Dyadic::ZERO;
                for (b, v) in beta.iter().zip(&verts) {
                    acc = acc + v[c].scale_int(*b as i64);
                }
                key.push(acc);
            }
            key
        })
        .collect()
}

/// Physical coordinates of the local nodes of a prism, in reference order.
pub fn local_nodes(p: &Partition, prism: PrismId, orders: PolyOrders) -> Result<Vec<(f64, Vec<f64>)>> {
    let re = ReferenceElement::new(p.d(), orders)?;
    let (t0, t1) = p.prism_interval(prism).bounds();
    let verts = p.simplex_points(p.prism(prism).simplex);
    Ok((0..re.num_basis())
        .map(|k| {
            let (tau, lam) = re.node_coords(k);
            let x = (0..p.d()).map(|c| lam.iter().zip(&verts).map(|(l, v)| l * v[c]).sum()).collect();
            (t0 + tau * (t1 - t0), x)
        })
        .collect())
}

/// Build the lattice of the current leaves, classify every node, pick
/// masters and resolve the hanging constraints.
pub fn classify(p: &Partition, orders: PolyOrders) -> Result<NodeLattice> {
    let d = p.d();
    let re = Arc::new(ReferenceElement::new(d, orders)?);
    let (kt, ks) = ((orders.r1 - 1) as i64, (orders.r2 - 1) as i64);
    let mut lookup: HashMap<Vec<Dyadic>, NodeId> = HashMap::new();
    let mut nodes: Vec<LagrangeNode> = Vec::new();
    let mut local = BTreeMap::new();
    for l in p.leaves() {
        let ids: Vec<NodeId> = node_keys(p, l, &re)
            .into_iter()
            .map(|key| {
                let id = *lookup.entry(key.clone()).or_insert_with(|| {
                    let id = NodeId::from_index(nodes.len());
                    let t = key[0].to_f64() / kt as f64;
                    let x = key[1..].iter().map(|c| c.to_f64() / ks as f64).collect();
                    nodes.push(LagrangeNode {
                        id,
                        t,
                        x,
                        key,
                        owners: Vec::new(),
                        hangers: Vec::new(),
                        status: NodeStatus::Free,
                        master: None,
                    });
                    id
                });
                nodes[id.index()].owners.push(l);
                id
            })
            .collect();
        local.insert(l, ids);
    }
    let index = p.leaf_index();
    let mut scaled_cache: HashMap<PrismId, Vec<Vec<Dyadic>>> = HashMap::new();
    for node in nodes.iter_mut() {
        let mut status = None;
        for c in index.locate_all(p, node.t, &node.x) {
            if node.owners.contains(&c) {
                continue;
            }
            let iv = p.prism_interval(c);
            let (lo, hi) = (iv.lo.scale_int(kt), iv.hi.scale_int(kt));
            if node.key[0] < lo || node.key[0] > hi {
                continue;
            }
            let sv = scaled_cache.entry(c).or_insert_with(|| {
                p.simplex_exact(p.prism(c).simplex)
                    .into_iter()
                    .map(|v| v.into_iter().map(|x| x.scale_int(ks)).collect())
                    .collect()
            });
            if !point_in_simplex_exact(sv, &node.key[1..]) {
                continue;
            }
            node.hangers.push(c);
            let s = if node.key[0] == lo || node.key[0] == hi {
                NodeStatus::HangingInSpace
            } else {
                NodeStatus::HangingInTime
            };
            if status.is_some_and(|x| x != s) {
                return Err(Error::InconsistentHanging(node.id));
            }
            status = Some(s);
        }
        node.hangers.sort();
        if let Some(s) = status {
            node.status = s;
            node.master = Some(pick_master(p, node));
        }
    }
    let free: Vec<NodeId> = nodes.iter().filter(|n| n.status == NodeStatus::Free).map(|n| n.id).collect();
    let free_index: HashMap<NodeId, usize> = free.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut lat = NodeLattice {
        orders,
        d,
        reference: re,
        nodes,
        local,
        free,
        free_index,
        constraints: Vec::new(),
        supports: Vec::new(),
    };
    lat.resolve_constraints(p)?;
    Ok(lat)
}

fn pick_master(p: &Partition, node: &LagrangeNode) -> PrismId {
    let by_level = || *node.hangers.iter().min_by_key(|&&h| (p.level(h), h)).unwrap();
    if node.status == NodeStatus::HangingInSpace {
        // the hanger whose simplex was bisected into an owner's simplex
        let parents: BTreeSet<_> = node.owners.iter().filter_map(|&o| p.prism_simplex(o).parent).collect();
        if let Some(&h) = node.hangers.iter().find(|&&h| parents.contains(&p.prism(h).simplex)) {
            return h;
        }
    }
    by_level()
}

impl NodeLattice {
    fn resolve_constraints(&mut self, p: &Partition) -> Result<()> {
        let n = self.nodes.len();
        let mut memo: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
        for i in 0..n {
            let mut visiting = vec![false; n];
            self.resolve(p, NodeId::from_index(i), &mut memo, &mut visiting)?;
        }
        self.constraints = memo.into_iter().map(|c| c.unwrap()).collect();
        let mut supports = vec![BTreeSet::new(); self.free.len()];
        for (&l, ids) in &self.local {
            for id in ids {
                for &(k, w) in &self.constraints[id.index()] {
                    if w != 0.0 {
                        supports[k].insert(l);
                    }
                }
            }
        }
        self.supports = supports;
        Ok(())
    }

    fn resolve(
        &self,
        p: &Partition,
        id: NodeId,
        memo: &mut Vec<Option<Vec<(usize, f64)>>>,
        visiting: &mut Vec<bool>,
    ) -> Result<Vec<(usize, f64)>> {
        if let Some(c) = &memo[id.index()] {
            return Ok(c.clone());
        }
        let node = &self.nodes[id.index()];
        let out = match node.master {
            None => vec![(self.free_index[&id], 1.0)],
            Some(m) => {
                if visiting[id.index()] {
                    return Err(Error::InvalidInput(format!("cyclic hanging-node constraint at {id}")));
                }
                visiting[id.index()] = true;
                let w = self.local_basis_at(p, m, node.t, &node.x);
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for (k, &mu) in self.local[&m].iter().enumerate() {
                    if w[k].abs() < 1e-14 {
                        continue;
                    }
                    for (j, c) in self.resolve(p, mu, memo, visiting)? {
                        *acc.entry(j).or_insert(0.0) += w[k] * c;
                    }
                }
                acc.into_iter().filter(|(_, c)| c.abs() > 1e-15).collect()
            }
        };
        memo[id.index()] = Some(out.clone());
        Ok(out)
    }

    /// Local basis of leaf `l` evaluated at a physical point.
    pub fn local_basis_at(&self, p: &Partition, l: PrismId, t: f64, x: &[f64]) -> Vec<f64> {
        let (t0, t1) = p.prism_interval(l).bounds();
        let lam = barycentric(&p.simplex_points(p.prism(l).simplex), x);
        self.reference.eval_basis((t - t0) / (t1 - t0), &lam)
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn node(&self, id: NodeId) -> &LagrangeNode {
        &self.nodes[id.index()]
    }

    pub fn hanging(&self) -> impl Iterator<Item = &LagrangeNode> {
        self.nodes.iter().filter(|n| n.status != NodeStatus::Free)
    }

    pub fn num_hanging(&self) -> usize {
        self.hanging().count()
    }

    pub fn free_index(&self, id: NodeId) -> Option<usize> {
        self.free_index.get(&id).copied()
    }

    /// Sparse expression of node `id` in the free coefficients.
    pub fn constraint(&self, id: NodeId) -> &[(usize, f64)] {
        &self.constraints[id.index()]
    }

    /// Values at the local nodes of `l` for the given free coefficients.
    pub fn local_values(&self, l: PrismId, coeffs: &[f64]) -> Vec<f64> {
        self.local[&l]
            .iter()
            .map(|id| self.constraints[id.index()].iter().map(|&(k, w)| w * coeffs[k]).sum())
            .collect()
    }

    /// Leaves on which the basis function of free node `id` does not vanish.
    pub fn basis_support(&self, id: NodeId) -> Result<&BTreeSet<PrismId>> {
        match self.free_index(id) {
            Some(k) => Ok(&self.supports[k]),
            None => Err(Error::HangingNode(id)),
        }
    }

    /// Structural facts about hanging nodes, returned as messages when violated:
    /// masters are coarser than owners, and the master face containing the
    /// node carries only free nodes.
    pub fn check_hanging_structure(&self, p: &Partition) -> Vec<String> {
        let mut bad = Vec::new();
        for node in self.hanging() {
            let m = node.master.unwrap();
            if node.owners.iter().any(|&o| p.level(o) <= p.level(m)) {
                bad.push(format!("{}: master {m} not coarser than all owners", node.id));
            }
            let ids = &self.local[&m];
            let re = &self.reference;
            let face: Vec<NodeId> = match node.status {
                NodeStatus::HangingInSpace => ids
                    .iter()
                    .enumerate()
                    .filter(|(k, id)| {
                        let (_, j) = re.nodes[*k];
                        self.nodes[id.index()].key[0] == node.key[0]
                            && (self.d == 1 || re.space_nodes[j].iter().all(|&b| b > 0))
                    })
                    .map(|(_, id)| *id)
                    .collect(),
                NodeStatus::HangingInTime => {
                    let seg: Vec<NodeId> =
                        ids.iter().filter(|id| self.nodes[id.index()].key[1..] == node.key[1..]).copied().collect();
                    if seg.len() != self.orders.r1 {
                        bad.push(format!("{}: spatial position is not a lattice point of master {m}", node.id));
                    }
                    seg
                }
                NodeStatus::Free => unreachable!(),
            };
            for f in face {
                if self.nodes[f.index()].status != NodeStatus::Free {
                    bad.push(format!("{}: master face node {f} of {m} is hanging", node.id));
                }
            }
        }
        bad
    }

    /// One line per node: `NODE id t x.. status master_prism` (`-1` when free).
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        for n in &self.nodes {
            let xs: Vec<String> = n.x.iter().map(|x| format!("{x:.16e}")).collect();
            let m = n.master.map_or("-1".to_string(), |m| m.0.to_string());
            writeln!(w, "NODE {} {:.16e} {} {} {}", n.id.0, n.t, xs.join(" "), n.status.as_str(), m)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyParams;
    use crate::mesh::SpatialMesh;
    use crate::refine::patch_refine;

    fn line(s1: f64, s2: f64) -> Partition {
        let m = SpatialMesh::interval(0.0, 1.0, 1).unwrap();
        Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(s1, s2, 1).unwrap()).unwrap()
    }

    #[test]
    fn single_prism_has_only_free_nodes() {
        let p = line(1.0, 1.0);
        let lat = classify(&p, PolyOrders::new(3, 2).unwrap()).unwrap();
        assert_eq!(lat.nodes.len(), 6);
        assert_eq!(lat.num_free(), 6);
        for &f in &lat.free {
            assert_eq!(lat.basis_support(f).unwrap().len(), 1);
        }
    }

    #[test]
    fn corner_family_hangs_on_the_interface() {
        let mut p = line(1.0, 1.0);
        patch_refine(&mut p, PrismId(0)).unwrap();
        let top = p.leaves().find(|&l| p.prism_interval(l).right_closed && p.simplex_points(p.prism(l).simplex).iter().any(|v| v[0] == 1.0)).unwrap();
        patch_refine(&mut p, top).unwrap();
        let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
        let hanging: Vec<(f64, f64, NodeStatus)> = lat.hanging().map(|n| (n.t, n.x[0], n.status)).collect();
        // (0.75, 0.5) lies inside the time edge of the coarse left neighbour,
        // (0.5, 0.75) inside the spatial edge of the coarse lower neighbour
        assert_eq!(hanging.len(), 2);
        assert!(hanging.contains(&(0.75, 0.5, NodeStatus::HangingInTime)));
        assert!(hanging.contains(&(0.5, 0.75, NodeStatus::HangingInSpace)));
        assert!(lat.check_hanging_structure(&p).is_empty());
        for n in lat.hanging() {
            // linear interpolation along the master edge
            let c = lat.constraint(n.id);
            assert_eq!(c.len(), 2);
            assert!(c.iter().all(|&(_, w)| (w - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn dump_format() {
        let p = line(1.0, 1.0);
        let lat = classify(&p, PolyOrders::new(2, 2).unwrap()).unwrap();
        let mut out = Vec::new();
        lat.write_dump(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().count(), 4);
        assert!(s.starts_with("NODE 0 0.0000000000000000e0 0.0000000000000000e0 free -1"));
    }
}
