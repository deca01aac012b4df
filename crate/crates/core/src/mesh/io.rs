use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use super::{IntervalRec, Partition, PrismRec, SimplexRec, VertexRec};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::geometry::{maubach_split, simplex_measure, AnisotropyParams};
use crate::ids::{IntervalId, PrismId, SimplexId, VertexId};

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "-1".to_string(), |v| v.to_string())
}

/// Serialize the partition: header, vertex, interval and simplex forests,
/// then the leaf prisms, all in ascending id order.
pub fn write_mesh<W: Write>(p: &Partition, mut w: W) -> Result<()> {
    let prm = p.params();
    writeln!(w, "ANISO {} {} {}", prm.d, fmt_f(prm.s1), fmt_f(prm.s2))?;
    for (i, v) in p.vertices.iter().enumerate() {
        if v.exact.iter().any(|c| !c.is_f64_exact()) {
            return Err(Error::InvalidInput(format!("vertex {i} is not representable as f64")));
        }
        let xs: Vec<String> = v.coords.iter().map(|&x| fmt_f(x)).collect();
        writeln!(w, "VTX {} {}", i, xs.join(" "))?;
    }
    for (i, r) in p.intervals.iter().enumerate() {
        writeln!(
            w,
            "IVL {} {} {} {} {} {} {} {}",
            i,
            r.lo.num(),
            r.lo.exp(),
            r.hi.num(),
            r.hi.exp(),
            r.right_closed as u8,
            r.level,
            opt(r.parent.map(|x| x.0))
        )?;
    }
    for (i, r) in p.simplices.iter().enumerate() {
        let vs: Vec<String> = r.vertices.iter().map(|v| v.0.to_string()).collect();
        writeln!(w, "SPX {} {} {} {} {}", i, r.level, r.tag, opt(r.parent.map(|x| x.0)), vs.join(" "))?;
    }
    for l in p.leaves() {
        let r = p.prism(l);
        writeln!(w, "PRISM {} {} {} {}", l.0, r.level, r.interval.0, r.simplex.0)?;
    }
    Ok(())
}

struct Tokens<'a> {
    line: usize,
    it: std::str::SplitWhitespace<'a>,
}

impl Tokens<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.line, msg: msg.into() })
    }

    fn next<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        match self.it.next() {
            Some(s) => s.parse().or_else(|_| self.err(format!("bad {what}: {s}"))),
            None => self.err(format!("missing {what}")),
        }
    }

    fn parent(&mut self) -> Result<Option<u32>> {
        let v: i64 = self.next("parent")?;
        Ok(if v < 0 { None } else { Some(v as u32) })
    }

    fn finish(&mut self) -> Result<()> {
        match self.it.next() {
            Some(s) => self.err(format!("trailing token {s}")),
            None => Ok(()),
        }
    }
}

/// Parse the format produced by [`write_mesh`].
pub fn read_mesh<R: BufRead>(r: R) -> Result<Partition> {
    let mut params = None;
    let mut vertices: Vec<VertexRec> = Vec::new();
    let mut intervals: Vec<IntervalRec> = Vec::new();
    let mut simplices: Vec<(u32, usize, Option<u32>, Vec<u32>)> = Vec::new();
    let mut prisms: Vec<(u32, u32, u32, u32)> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut it = text.split_whitespace();
        let kind = it.next().unwrap();
        let mut tk = Tokens { line: n + 1, it };
        let expect_id = |tk: &mut Tokens, count: usize| -> Result<()> {
            let id: usize = tk.next("id")?;
            if id != count {
                return tk.err(format!("ids must be consecutive, expected {count}, got {id}"));
            }
            Ok(())
        };
        match kind {
            "ANISO" => {
                let d: usize = tk.next("d")?;
                let (s1, s2): (f64, f64) = (tk.next("s1")?, tk.next("s2")?);
                params = Some(AnisotropyParams::new(s1, s2, d)?);
            }
            "VTX" => {
                let d = params.ok_or(Error::Parse { line: n + 1, msg: "VTX before ANISO".into() })?.d;
                expect_id(&mut tk, vertices.len())?;
                let mut coords = Vec::with_capacity(d);
                for _ in 0..d {
                    coords.push(tk.next::<f64>("coordinate")?);
                }
                let exact: Option<Vec<Dyadic>> = coords.iter().map(|&x| Dyadic::from_f64(x)).collect();
                let exact = exact.ok_or(Error::Parse { line: n + 1, msg: "non-finite coordinate".into() })?;
                vertices.push(VertexRec { exact, coords });
            }
            "IVL" => {
                expect_id(&mut tk, intervals.len())?;
                let lo = Dyadic::new(tk.next("lo_num")?, tk.next("lo_exp")?);
                let hi = Dyadic::new(tk.next("hi_num")?, tk.next("hi_exp")?);
                let rc: u8 = tk.next("right_closed")?;
                let level = tk.next("level")?;
                let parent = tk.parent()?.map(IntervalId);
                if lo >= hi {
                    return tk.err("empty interval");
                }
                intervals.push(IntervalRec { lo, hi, right_closed: rc == 1, level, parent, children: None });
            }
            "SPX" => {
                let d = params.ok_or(Error::Parse { line: n + 1, msg: "SPX before ANISO".into() })?.d;
                expect_id(&mut tk, simplices.len())?;
                let level = tk.next("level")?;
                let tag = tk.next("tag")?;
                let parent = tk.parent()?;
                let mut vs = Vec::with_capacity(d + 1);
                for _ in 0..=d {
                    vs.push(tk.next::<u32>("vertex")?);
                }
                simplices.push((level, tag, parent, vs));
            }
            "PRISM" => {
                let id = tk.next("id")?;
                prisms.push((id, tk.next("level")?, tk.next("interval")?, tk.next("simplex")?));
            }
            other => return tk.err(format!("unknown record {other}")),
        }
        tk.finish()?;
    }
    let params = params.ok_or(Error::Parse { line: 0, msg: "missing ANISO header".into() })?;
    build(params, vertices, intervals, simplices, prisms)
}

fn build(
    params: AnisotropyParams,
    vertices: Vec<VertexRec>,
    mut intervals: Vec<IntervalRec>,
    raw: Vec<(u32, usize, Option<u32>, Vec<u32>)>,
    prisms: Vec<(u32, u32, u32, u32)>,
) -> Result<Partition> {
    let bad = |msg: String| Error::Parse { line: 0, msg };
    let d = params.d;
    let mut lookup = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        if lookup.insert(v.exact.clone(), VertexId::from_index(i)).is_some() {
            return Err(bad(format!("duplicate vertex {i}")));
        }
    }
    for i in 0..intervals.len() {
        if let Some(par) = intervals[i].parent {
            if par.index() >= i {
                return Err(bad(format!("interval {i} listed before its parent")));
            }
            let pr = &intervals[par.index()];
            let child = IntervalId::from_index(i);
            let mid = Dyadic::midpoint(pr.lo, pr.hi);
            let slot = if intervals[i].lo == pr.lo && intervals[i].hi == mid {
                0
            } else if intervals[i].lo == mid && intervals[i].hi == pr.hi {
                1
            } else {
                return Err(bad(format!("interval {i} is not a half of its parent")));
            };
            let pr = &mut intervals[par.index()];
            let mut kids = pr.children.unwrap_or([child; 2]);
            kids[slot] = child;
            pr.children = Some(kids);
        }
    }
    let mut simplices: Vec<SimplexRec> = Vec::with_capacity(raw.len());
    let mut roots = Vec::new();
    for (i, (level, tag, parent, vs)) in raw.into_iter().enumerate() {
        let id = SimplexId::from_index(i);
        if vs.iter().any(|&v| v as usize >= vertices.len()) || tag < 1 || tag > d {
            return Err(bad(format!("simplex {i} has invalid vertices or tag")));
        }
        let vids: Vec<VertexId> = vs.iter().map(|&v| VertexId(v)).collect();
        let rec = match parent {
            None => {
                let pts: Vec<Vec<f64>> = vids.iter().map(|v| vertices[v.index()].coords.clone()).collect();
                roots.push(id);
                SimplexRec {
                    vertices: vids,
                    tag,
                    level,
                    parent: None,
                    children: None,
                    root: id,
                    support: (0..=d).map(|k| 1 << k).collect(),
                    measure: simplex_measure(&pts),
                }
            }
            Some(par) => {
                let par = SimplexId(par);
                if par.index() >= i {
                    return Err(bad(format!("simplex {i} listed before its parent")));
                }
                let pr = simplices[par.index()].clone();
                let a = &vertices[pr.vertices[0].index()].exact;
                let b = &vertices[pr.vertices[pr.tag].index()].exact;
                let z: Vec<Dyadic> = a.iter().zip(b).map(|(x, y)| Dyadic::midpoint(*x, *y)).collect();
                let zid = *lookup.get(&z).ok_or_else(|| bad(format!("midpoint of simplex {par} missing")))?;
                let ([va, vb], ctag) = maubach_split(&pr.vertices, pr.tag, zid);
                let zmask = pr.support[0] | pr.support[pr.tag];
                let ([ma, mb], _) = maubach_split(&pr.support, pr.tag, zmask);
                let (slot, support) = if vids == va {
                    (0, ma)
                } else if vids == vb {
                    (1, mb)
                } else {
                    return Err(bad(format!("simplex {i} is not a child of {par}")));
                };
                if tag != ctag || level != pr.level + 1 {
                    return Err(bad(format!("simplex {i} has inconsistent tag or level")));
                }
                let mut kids = pr.children.unwrap_or([id; 2]);
                kids[slot] = id;
                simplices[par.index()].children = Some(kids);
                SimplexRec {
                    vertices: vids,
                    tag,
                    level,
                    parent: Some(par),
                    children: None,
                    root: pr.root,
                    support,
                    measure: pr.measure * 0.5,
                }
            }
        };
        simplices.push(rec);
    }
    for (i, s) in simplices.iter().enumerate() {
        if let Some([a, b]) = s.children {
            if a == b {
                return Err(bad(format!("simplex {i} has only one child listed")));
            }
        }
    }
    let root_intervals: Vec<IntervalId> = (0..intervals.len())
        .filter(|&i| intervals[i].parent.is_none())
        .map(IntervalId::from_index)
        .collect();
    if root_intervals.is_empty() || roots.is_empty() || prisms.is_empty() {
        return Err(bad("mesh has no roots or no prisms".into()));
    }
    let t_start = root_intervals.iter().map(|i| intervals[i.index()].lo).min().unwrap();
    let t_end = root_intervals.iter().map(|i| intervals[i.index()].hi).max().unwrap();
    let max_id = prisms.iter().map(|p| p.0).max().unwrap() as usize;
    let mut part = Partition {
        params,
        t_start,
        t_end,
        vertices,
        vertex_lookup: lookup,
        intervals,
        simplices,
        prisms: vec![None; max_id + 1],
        leaves: BTreeSet::new(),
        by_simplex: HashMap::new(),
        by_vertex: HashMap::new(),
        root_intervals,
        root_simplices: roots,
        boundary_root_facets: HashSet::new(),
        atomic_splits: 0,
        size_constants: Default::default(),
    };
    for (id, level, iv, sx) in prisms {
        if iv as usize >= part.intervals.len() || sx as usize >= part.simplices.len() {
            return Err(bad(format!("prism {id} references unknown interval or simplex")));
        }
        if part.simplices[sx as usize].level != level
            || part.intervals[iv as usize].level != params.interval_level(level)
        {
            return Err(bad(format!("prism {id} has inconsistent levels")));
        }
        if part.prisms[id as usize].is_some() {
            return Err(bad(format!("duplicate prism {id}")));
        }
        part.prisms[id as usize] =
            Some(PrismRec { interval: IntervalId(iv), simplex: SimplexId(sx), level, parent: None, children: Vec::new() });
        part.insert_leaf(PrismId(id));
    }
    part.classify_root_facets()?;
    part.check_refinement_conformity()?;
    Ok(part)
}

/// Legacy VTK unstructured grid of the leaves: quads `(x, t)` for `d = 1`,
/// wedges `(x, y, t)` for `d = 2`, with `level` and `indicator` cell data.
pub fn export_vtk<W: Write>(p: &Partition, indicator: Option<&HashMap<PrismId, f64>>, mut w: W) -> Result<()> {
    let d = p.d();
    if d > 2 {
        return Err(Error::InvalidInput("VTK export supports d = 1 and d = 2".into()));
    }
    let leaves: Vec<PrismId> = p.leaves().collect();
    let per = if d == 1 { 4 } else { 6 };
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "space-time prism partition")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", leaves.len() * per)?;
    for &l in &leaves {
        let (t0, t1) = p.prism_interval(l).bounds();
        let mut pts = p.simplex_points(p.prism(l).simplex);
        if d == 1 {
            let (a, b) = (pts[0][0].min(pts[1][0]), pts[0][0].max(pts[1][0]));
            for (x, t) in [(a, t0), (b, t0), (b, t1), (a, t1)] {
                writeln!(w, "{} {} 0", fmt_f(x), fmt_f(t))?;
            }
        } else {
            let area = (pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1])
                - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1]);
            if area > 0.0 {
                pts.swap(1, 2);
            }
            for t in [t0, t1] {
                for v in &pts {
                    writeln!(w, "{} {} {}", fmt_f(v[0]), fmt_f(v[1]), fmt_f(t))?;
                }
            }
        }
    }
    writeln!(w, "CELLS {} {}", leaves.len(), leaves.len() * (per + 1))?;
    for k in 0..leaves.len() {
        let ids: Vec<String> = (0..per).map(|j| (k * per + j).to_string()).collect();
        writeln!(w, "{} {}", per, ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {}", leaves.len())?;
    let ty = if d == 1 { 9 } else { 13 };
    for _ in &leaves {
        writeln!(w, "{ty}")?;
    }
    writeln!(w, "CELL_DATA {}", leaves.len())?;
    writeln!(w, "SCALARS level int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &l in &leaves {
        writeln!(w, "{}", p.level(l))?;
    }
    writeln!(w, "SCALARS indicator double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for l in &leaves {
        let v = indicator.and_then(|m| m.get(l)).copied().unwrap_or(0.0);
        writeln!(w, "{}", fmt_f(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyParams;
    use crate::mesh::SpatialMesh;
    use crate::refine::patch_refine;

    #[test]
    fn refined_mesh_round_trips() {
        let m = SpatialMesh::kuhn_box(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap();
        let mut p = Partition::tensor_initial(&[0.0, 1.0], &m, AnisotropyParams::new(1.0, 2.0, 2).unwrap()).unwrap();
        for _ in 0..6 {
            let l = p.leaves().last().unwrap();
            patch_refine(&mut p, l).unwrap();
        }
        let mut a = Vec::new();
        write_mesh(&p, &mut a).unwrap();
        let q = read_mesh(&a[..]).unwrap();
        assert!(q.validate().is_valid());
        assert_eq!(q.num_leaves(), p.num_leaves());
        let mut b = Vec::new();
        write_mesh(&q, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_broken_records() {
        assert!(matches!(read_mesh(&b"VTX 0 0.5\n"[..]), Err(Error::Parse { line: 1, .. })));
        assert!(read_mesh(&b"ANISO 1 1 1\nVTX 1 0.5\n"[..]).is_err());
        assert!(read_mesh(&b"ANISO 1 1 1\n"[..]).is_err());
    }
}
