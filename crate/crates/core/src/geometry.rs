//! Intervals, tagged simplices, bisection and shape measures.

use crate::dyadic::Dyadic;
use crate::error::{invalid, Error, Result};

/// Smoothness pair `(s1, s2)` and spatial dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropyParams {
    pub s1: f64,
    pub s2: f64,
    pub d: usize,
}

/// `ceil` that treats values within a relative 1e-9 of an integer as that
/// integer, so ratios such as `3 * (1/3)` land where exact arithmetic would.
pub fn ceil_tol(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as i64
    } else {
        x.ceil() as i64
    }
}

impl AnisotropyParams {
    pub fn new(s1: f64, s2: f64, d: usize) -> Result<Self> {
        if !(s1 > 0.0 && s1.is_finite() && s2 > 0.0 && s2.is_finite()) {
            return invalid(format!("smoothness parameters must be positive, got ({s1}, {s2})"));
        }
        if !(1..=3).contains(&d) {
            return invalid(format!("spatial dimension {d} not supported (1..=3)"));
        }
        Ok(AnisotropyParams { s1, s2, d })
    }

    /// `s2 / (s1 d)`: temporal bisections per spatial bisection.
    pub fn ratio(&self) -> f64 {
        self.s2 / (self.s1 * self.d as f64)
    }

    /// Level of the time intervals that accompany spatial level `n`.
    pub fn interval_level(&self, n: u32) -> u32 {
        ceil_tol(n as f64 * self.ratio()) as u32
    }

    /// Number of interval bisections when a prism moves to spatial level `n`.
    pub fn temporal_bisections(&self, n: u32) -> u32 {
        assert!(n >= 1);
        self.interval_level(n) - self.interval_level(n - 1)
    }

    /// Upper bound on [`temporal_bisections`](Self::temporal_bisections).
    pub fn max_temporal_bisections(&self) -> u32 {
        ceil_tol(self.ratio()) as u32 + 2
    }

    /// Best approximation rate `1 / (1/s1 + d/s2)`.
    pub fn rate(&self) -> f64 {
        1.0 / (1.0 / self.s1 + self.d as f64 / self.s2)
    }

    pub fn gamma_min(&self) -> f64 {
        (self.s2 / self.s1).min(1.0) / self.d as f64
    }

    pub fn gamma_max(&self) -> f64 {
        (self.s2 / self.s1).max(1.0) / self.d as f64
    }
}

/// A time interval `[lo, hi)` or `[lo, hi]` with its bisection level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
    pub right_closed: bool,
    pub level: u32,
}

impl TimeInterval {
    pub fn new(lo: f64, hi: f64, right_closed: bool) -> Result<Self> {
        let (l, h) = match (Dyadic::from_f64(lo), Dyadic::from_f64(hi)) {
            (Some(l), Some(h)) => (l, h),
            _ => return invalid(format!("interval endpoints must be finite: [{lo}, {hi}]")),
        };
        if l >= h {
            return invalid(format!("empty interval [{lo}, {hi}]"));
        }
        Ok(TimeInterval { lo: l, hi: h, right_closed, level: 0 })
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).to_f64()
    }

    pub fn contains(&self, t: Dyadic) -> bool {
        self.lo <= t && (t < self.hi || (self.right_closed && t == self.hi))
    }

    /// `[lo, mid)` and `[mid, hi)` or `[mid, hi]`.
    pub fn bisect(&self) -> (TimeInterval, TimeInterval) {
        let mid = Dyadic::midpoint(self.lo, self.hi);
        let level = self.level + 1;
        (
            TimeInterval { lo: self.lo, hi: mid, right_closed: false, level },
            TimeInterval { lo: mid, hi: self.hi, right_closed: self.right_closed, level },
        )
    }
}

/// Children of a tagged simplex under newest-vertex (Maubach) bisection.
///
/// The refinement edge is `v[0] v[tag]` and `z` its midpoint. Works on any
/// vertex representation so the arena can reuse it with ids.
pub fn maubach_split<T: Clone>(v: &[T], tag: usize, z: T) -> ([Vec<T>; 2], usize) {
    let d = v.len() - 1;
    debug_assert!(tag >= 1 && tag <= d);
    let mut a: Vec<T> = v[..tag].to_vec();
    a.push(z.clone());
    a.extend_from_slice(&v[tag + 1..]);
    let mut b: Vec<T> = v[1..=tag].to_vec();
    b.push(z);
    b.extend_from_slice(&v[tag + 1..]);
    let child_tag = if tag > 1 { tag - 1 } else { d };
    ([a, b], child_tag)
}

/// A `d`-simplex with ordered vertices and a Maubach tag in `1..=d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedSimplex {
    pub vertices: Vec<Vec<Dyadic>>,
    pub tag: usize,
    pub level: u32,
}

impl TaggedSimplex {
    pub fn new(vertices: &[Vec<f64>], tag: usize) -> Result<Self> {
        let d = vertices.len().saturating_sub(1);
        if d == 0 || vertices.iter().any(|v| v.len() != d) {
            return Err(Error::DegenerateSimplex(format!(
                "need d+1 points in R^d, got {} points",
                vertices.len()
            )));
        }
        if tag < 1 || tag > d {
            return invalid(format!("tag {tag} outside 1..={d}"));
        }
        let mut exact = Vec::with_capacity(d + 1);
        for v in vertices {
            let p: Option<Vec<Dyadic>> = v.iter().map(|&x| Dyadic::from_f64(x)).collect();
            exact.push(p.ok_or_else(|| Error::InvalidInput("non-finite vertex".into()))?);
        }
        if simplex_measure(vertices) <= 0.0 {
            return Err(Error::DegenerateSimplex("zero measure".into()));
        }
        Ok(TaggedSimplex { vertices: exact, tag, level: 0 })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(|c| c.to_f64()).collect())
            .collect()
    }

    pub fn measure(&self) -> f64 {
        simplex_measure(&self.points())
    }

    pub fn refinement_edge(&self) -> (&[Dyadic], &[Dyadic]) {
        (&self.vertices[0], &self.vertices[self.tag])
    }

    pub fn bisect(&self) -> (TaggedSimplex, TaggedSimplex) {
        let z: Vec<Dyadic> = self.vertices[0]
            .iter()
            .zip(&self.vertices[self.tag])
            .map(|(a, b)| Dyadic::midpoint(*a, *b))
            .collect();
        let ([a, b], tag) = maubach_split(&self.vertices, self.tag, z);
        let level = self.level + 1;
        (
            TaggedSimplex { vertices: a, tag, level },
            TaggedSimplex { vertices: b, tag, level },
        )
    }
}

/// Simplices of the Kuhn triangulation of the box `[lo, hi]` split into
/// `cells[i]` cells per axis, vertices listed along the Kuhn path with tag `d`.
pub fn kuhn_simplices(lo: &[f64], hi: &[f64], cells: &[usize]) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = lo.len();
    if hi.len() != d || cells.len() != d || d == 0 {
        return invalid("box bounds and cell counts must have equal length");
    }
    if cells.contains(&0) || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return invalid("box must be nonempty with at least one cell per axis");
    }
    let h: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / cells[i] as f64).collect();
    let perms = permutations(d);
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        for p in &perms {
            let mut cur: Vec<f64> = (0..d).map(|i| lo[i] + idx[i] as f64 * h[i]).collect();
            let mut verts = vec![cur.clone()];
            for &axis in p {
                // recompute from the grid index so shared vertices coincide bitwise
                let k = idx[axis] + 1;
                cur[axis] = if k == cells[axis] { hi[axis] } else { lo[axis] + k as f64 * h[axis] };
                verts.push(cur.clone());
            }
            out.push(verts);
        }
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            idx[i] += 1;
            if idx[i] < cells[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

pub(crate) fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Determinant of a small dense matrix by partial-pivot elimination.
pub(crate) fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut sign = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            sign = -sign;
        }
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            let (top, bottom) = m.split_at_mut(r);
            for (a, &b) in bottom[0][c..n].iter_mut().zip(&top[c][c..n]) {
                *a -= f * b;
            }
        }
    }
    sign * (0..n).map(|i| m[i][i]).product::<f64>()
}

/// `k`-dimensional measure of the simplex spanned by `k+1` points in `R^n`.
pub fn simplex_content(points: &[Vec<f64>]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let e: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect();
    let gram: Vec<Vec<f64>> = e
        .iter()
        .map(|a| e.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    det(gram).max(0.0).sqrt() / factorial(k)
}

/// Lebesgue measure of a full-dimensional simplex.
pub fn simplex_measure(points: &[Vec<f64>]) -> f64 {
    let d = points.len() - 1;
    let m: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect();
    det(m).abs() / factorial(d)
}

pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(dist(&points[i], &points[j]));
        }
    }
    best
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Inradius via `d |S| / sum of facet measures`.
pub fn inradius(points: &[Vec<f64>]) -> f64 {
    let d = points.len() - 1;
    let vol = simplex_measure(points);
    let facets: f64 = (0..=d)
        .map(|skip| {
            let f: Vec<Vec<f64>> = points
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, p)| p.clone())
                .collect();
            if d == 1 { 1.0 } else { simplex_content(&f) }
        })
        .sum();
    d as f64 * vol / facets
}

/// Shape regularity `diam(S) / inradius(S)`.
pub fn simplex_shape(points: &[Vec<f64>]) -> f64 {
    diameter(points) / inradius(points)
}

/// Largest shape constant over all descendants of `root` down to `depth`
/// bisections. Maubach bisection produces finitely many similarity classes,
/// all reached within a few multiples of `d` levels.
pub fn descendant_shape_bound(root: &TaggedSimplex, depth: u32) -> f64 {
    let mut best = simplex_shape(&root.points());
    let mut frontier = vec![root.clone()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for s in &frontier {
            let (a, b) = s.bisect();
            best = best.max(simplex_shape(&a.points())).max(simplex_shape(&b.points()));
            next.push(a);
            next.push(b);
        }
        frontier = next;
    }
    best
}

/// Volume of the unit ball in `R^d`.
pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => unreachable!("dimension > 3"),
    }
}

/// Signed determinant of `rows` (each of length `rows.len()`), exact.
pub(crate) fn det_exact(rows: &[Vec<Dyadic>]) -> Dyadic {
    match rows.len() {
        0 => Dyadic::ONE,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        n => {
            let mut acc = Dyadic::ZERO;
            for c in 0..n {
                let minor: Vec<Vec<Dyadic>> = rows[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, x)| *x).collect())
                    .collect();
                let term = rows[0][c] * det_exact(&minor);
                acc = if c % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Exact test whether `p` lies in the closed simplex with vertices `v`.
pub fn point_in_simplex_exact(v: &[Vec<Dyadic>], p: &[Dyadic]) -> bool {
    let d = v.len() - 1;
    let orient = |pts: &[&[Dyadic]]| {
        let rows: Vec<Vec<Dyadic>> = pts[1..]
            .iter()
            .map(|q| q.iter().zip(pts[0]).map(|(a, b)| *a - *b).collect())
            .collect();
        det_exact(&rows).signum()
    };
    let refs: Vec<&[Dyadic]> = v.iter().map(|x| x.as_slice()).collect();
    let s0 = orient(&refs);
    for i in 0..=d {
        let mut r = refs.clone();
        r[i] = p;
        let s = orient(&r);
        if s != 0 && s != s0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> TaggedSimplex {
        TaggedSimplex::new(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]], 2).unwrap()
    }

    #[test]
    fn temporal_bisection_counts() {
        // s2/(s1 d) = 1/2: spatial levels 1,2,3,4 need 1,0,1,0 time bisections.
        let p = AnisotropyParams::new(1.0, 1.0, 2).unwrap();
        let m: Vec<u32> = (1..=4).map(|n| p.temporal_bisections(n)).collect();
        assert_eq!(m, vec![1, 0, 1, 0]);
        // ratio 1/3 accumulates rounding in floating point
        let p = AnisotropyParams::new(3.0, 1.0, 1).unwrap();
        let m: Vec<u32> = (1..=6).map(|n| p.temporal_bisections(n)).collect();
        assert_eq!(m, vec![1, 0, 0, 1, 0, 0]);
        let p = AnisotropyParams::new(1.0, 4.0, 1).unwrap();
        assert_eq!(p.temporal_bisections(1), 4);
    }

    #[test]
    fn interval_bisection_keeps_closure_on_the_right() {
        let i = TimeInterval::new(0.0, 1.0, true).unwrap();
        let (a, b) = i.bisect();
        assert!(!a.right_closed && b.right_closed);
        assert_eq!(a.hi, b.lo);
        assert_eq!((a.level, b.level), (1, 1));
        assert!(!a.contains(a.hi) && b.contains(b.hi));
        assert!(TimeInterval::new(1.0, 1.0, false).is_err());
    }

    #[test]
    fn maubach_children_of_triangle() {
        let (a, b) = unit_triangle().bisect();
        let pts = |s: &TaggedSimplex| s.points();
        assert_eq!(pts(&a), vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(pts(&b), vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.5, 0.5]]);
        assert_eq!((a.tag, b.tag), (1, 1));
        let (c, _) = a.bisect();
        assert_eq!(c.tag, 2);
        assert_eq!(pts(&c), vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.5, 0.5]]);
    }

    #[test]
    fn shape_of_equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let k = simplex_shape(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]);
        assert!((k - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!((simplex_shape(&[vec![0.0], vec![3.0]]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kuhn_box_tiles_the_box() {
        let s = kuhn_simplices(&[0.0, 0.0, 0.0], &[1.0, 2.0, 1.0], &[1, 2, 1]).unwrap();
        assert_eq!(s.len(), 12);
        let total: f64 = s.iter().map(|p| simplex_measure(p)).sum();
        assert!((total - 2.0).abs() < 1e-14);
        assert!(TaggedSimplex::new(&[vec![0.0], vec![0.0]], 1).is_err());
    }

    #[test]
    fn exact_point_location() {
        let t = unit_triangle();
        let d = |x: f64| Dyadic::from_f64(x).unwrap();
        assert!(point_in_simplex_exact(&t.vertices, &[d(0.5), d(0.5)]));
        assert!(point_in_simplex_exact(&t.vertices, &[d(1.0), d(0.25)]));
        assert!(!point_in_simplex_exact(&t.vertices, &[d(0.25), d(0.5)]));
    }

    #[test]
    fn kuhn_descendants_have_bounded_shape() {
        let t = unit_triangle();
        let k4 = descendant_shape_bound(&t, 4);
        let k8 = descendant_shape_bound(&t, 8);
        assert!((k4 - k8).abs() < 1e-12);
    }
}
