use std::collections::HashMap;

use super::Mesh;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Edge connectivity of a triangulation. Depends only on the triangle list,
/// so it survives mesh deformation unchanged.
#[derive(Clone, Debug)]
pub struct Topology {
    /// Unique edges with sorted endpoints.
    pub edges: Vec<[usize; 2]>,
    /// Local edges of each triangle, ordered (v0,v1), (v1,v2), (v2,v0).
    pub tri_edges: Vec<[usize; 3]>,
    /// Triangles adjacent to each edge; the second slot is `usize::MAX` on the boundary.
    pub edge_tris: Vec<[usize; 2]>,
    lookup: HashMap<(usize, usize), usize>,
}

impl Topology {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lookup = HashMap::with_capacity(mesh.triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_tris: Vec<[usize; 2]> = Vec::new();
        let mut tri_edges = Vec::with_capacity(mesh.triangles.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut local = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_tris.push([NONE, NONE]);
                    edges.len() - 1
                });
                let slot = &mut edge_tris[id];
                if slot[0] == NONE {
                    slot[0] = t;
                } else {
                    slot[1] = t;
                }
                local[k] = id;
            }
            tri_edges.push(local);
        }
        Self {
            edges,
            tri_edges,
            edge_tris,
            lookup,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_tris[e][1] == NONE
    }

    /// The unique triangle adjacent to a boundary edge.
    pub fn boundary_triangle(&self, a: usize, b: usize) -> Result<usize> {
        let e = self
            .edge_id(a, b)
            .ok_or_else(|| Error::Mesh(format!("edge ({a},{b}) is not part of the triangulation")))?;
        // Interior tagged edges (an INT interface) report their first neighbour.
        let t0 = self.edge_tris[e][0];
        if t0 == NONE {
            return Err(Error::Mesh(format!("edge ({a},{b}) has no adjacent element")));
        }
        Ok(t0)
    }

    /// Both neighbours of an edge, second one optional.
    pub fn neighbours(&self, e: usize) -> (usize, Option<usize>) {
        let [t0, t1] = self.edge_tris[e];
        (t0, (t1 != NONE).then_some(t1))
    }
}
