use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::geometry::{kuhn_simplices, simplex_measure};

/// An initial spatial triangulation: shared vertex list plus tagged cells.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialMesh {
    pub d: usize,
    pub vertices: Vec<Vec<f64>>,
    /// Vertex indices in bisection order and the Maubach tag.
    pub cells: Vec<(Vec<usize>, usize)>,
}

impl SpatialMesh {
    pub fn new(d: usize, vertices: Vec<Vec<f64>>, cells: Vec<(Vec<usize>, usize)>) -> Result<Self> {
        if vertices.iter().any(|v| v.len() != d) {
            return invalid("vertex dimension does not match d");
        }
        for (vs, tag) in &cells {
            if vs.len() != d + 1 || vs.iter().any(|&i| i >= vertices.len()) {
                return invalid("cell must list d+1 valid vertex indices");
            }
            if *tag < 1 || *tag > d {
                return invalid(format!("tag {tag} outside 1..={d}"));
            }
            let pts: Vec<Vec<f64>> = vs.iter().map(|&i| vertices[i].clone()).collect();
            if !(simplex_measure(&pts) > 0.0) {
                return Err(crate::Error::DegenerateSimplex(format!("cell {vs:?}")));
            }
        }
        if cells.is_empty() {
            return invalid("spatial mesh has no cells");
        }
        Ok(SpatialMesh { d, vertices, cells })
    }

    /// Kuhn triangulation of a box, which stays conforming under bisection.
    pub fn kuhn_box(lo: &[f64], hi: &[f64], cells: &[usize]) -> Result<Self> {
        let simplices = kuhn_simplices(lo, hi, cells)?;
        let d = lo.len();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut out = Vec::new();
        for s in simplices {
            let ids = s
                .into_iter()
                .map(|p| {
                    let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
                    *index.entry(key).or_insert_with(|| {
                        vertices.push(p);
                        vertices.len() - 1
                    })
                })
                .collect();
            out.push((ids, d));
        }
        SpatialMesh::new(d, vertices, out)
    }

    /// `[a, b]` split into `n` equal segments.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::kuhn_box(&[a], &[b], &[n])
    }

    pub fn measure(&self) -> f64 {
        self.cells
            .iter()
            .map(|(vs, _)| {
                let pts: Vec<Vec<f64>> = vs.iter().map(|&i| self.vertices[i].clone()).collect();
                simplex_measure(&pts)
            })
            .sum()
    }
}
