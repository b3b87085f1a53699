//! Post-processing of flow states: nodal fields and boundary fluxes.

use super::space::Space;
use crate::error::Result;
use crate::geometry::{BoundaryEdge, Mesh, MeshFields, Tag};

/// Vertex fields `ux uy p speed` for the mesh text format.
pub fn node_fields(mesh: &Mesh, space: &Space, x: &[f64]) -> MeshFields {
    let values = (0..mesh.n_nodes())
        .map(|v| {
            let [ux, uy] = space.velocity(x, v);
            vec![ux, uy, x[space.p(v)], (ux * ux + uy * uy).sqrt()]
        })
        .collect();
    MeshFields {
        names: ["ux", "uy", "p", "speed"].map(String::from).to_vec(),
        values,
    }
}

/// Outward unit normal of a boundary edge, oriented away from its element.
pub fn outward_normal(mesh: &Mesh, space: &Space, e: &BoundaryEdge) -> Result<[f64; 2]> {
    let [a, b] = e.nodes;
    let t = space.topo.boundary_triangle(a, b)?;
    let c = mesh.triangles[t].into_iter().find(|&v| v != a && v != b).expect("triangle has a third vertex");
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let mut n = [d[1] / len, -d[0] / len];
    if n[0] * (pc[0] - pa[0]) + n[1] * (pc[1] - pa[1]) > 0.0 {
        n = [-n[0], -n[1]];
    }
    Ok(n)
}

/// ∫ u·n ds over one edge; exact for the quadratic velocity trace.
pub fn edge_flux(mesh: &Mesh, space: &Space, x: &[f64], e: &BoundaryEdge) -> Result<f64> {
    let [a, b] = e.nodes;
    let m = space.mid_node(a, b).expect("boundary edge is a mesh edge");
    let n = outward_normal(mesh, space, e)?;
    let un = |node: usize| {
        let u = space.velocity(x, node);
        u[0] * n[0] + u[1] * n[1]
    };
    Ok(mesh.edge_length(e) / 6.0 * (un(a) + 4.0 * un(m) + un(b)))
}

/// Planar outward flux through the edges with the given tags.
pub fn boundary_flux(mesh: &Mesh, space: &Space, x: &[f64], tags: &[Tag]) -> Result<f64> {
    let mut total = 0.0;
    for e in mesh.boundary.iter().filter(|e| tags.contains(&e.tag)) {
        if space.topo.neighbours(space.topo.edge_id(e.nodes[0], e.nodes[1]).expect("mesh edge")).1.is_some() {
            // interior interface edges carry no net flux out of the domain
            continue;
        }
        total += edge_flux(mesh, space, x, e)?;
    }
    Ok(total)
}

/// Net planar outward flux through the whole boundary.
pub fn net_flux(mesh: &Mesh, space: &Space, x: &[f64]) -> Result<f64> {
    boundary_flux(mesh, space, x, &Tag::ALL)
}
