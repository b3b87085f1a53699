use crate::geometry::{Mesh, Topology};

/// Local velocity nodes of a P2 triangle: the three vertices followed by the
/// midpoints of edges (0,1), (1,2), (2,0).
pub const P2_LOCAL: usize = 6;
/// Local state dofs: ux (6), uy (6), p (3).
pub const LOCAL_DOFS: usize = 15;

/// Taylor–Hood P2/P1 dof numbering. Velocity nodes are the mesh vertices
/// followed by one node per edge; the global vector is `[ux | uy | p]`.
#[derive(Clone, Debug)]
pub struct Space {
    pub topo: Topology,
    pub n_vertices: usize,
    /// Velocity nodes (vertices + edges).
    pub n_vel: usize,
    pub n_dofs: usize,
    /// Global P2 node of each local velocity node.
    pub elem_nodes: Vec<[usize; P2_LOCAL]>,
}

impl Space {
    pub fn new(mesh: &Mesh) -> Self {
        let topo = Topology::new(mesh);
        let nv = mesh.n_nodes();
        let n_vel = nv + topo.n_edges();
        let elem_nodes = mesh
            .triangles
            .iter()
            .zip(&topo.tri_edges)
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();
        Self {
            n_vertices: nv,
            n_vel,
            n_dofs: 2 * n_vel + nv,
            elem_nodes,
            topo,
        }
    }

    pub fn ux(&self, node: usize) -> usize {
        node
    }

    pub fn uy(&self, node: usize) -> usize {
        self.n_vel + node
    }

    pub fn p(&self, vertex: usize) -> usize {
        2 * self.n_vel + vertex
    }

    /// P2 node sitting on the midpoint of edge (a, b).
    pub fn mid_node(&self, a: usize, b: usize) -> Option<usize> {
        self.topo.edge_id(a, b).map(|e| self.n_vertices + e)
    }

    /// Global dofs of element `t` in local order.
    pub fn element_dofs(&self, mesh: &Mesh, t: usize) -> [usize; LOCAL_DOFS] {
        let nodes = self.elem_nodes[t];
        let tri = mesh.triangles[t];
        let mut d = [0; LOCAL_DOFS];
        for k in 0..P2_LOCAL {
            d[k] = self.ux(nodes[k]);
            d[P2_LOCAL + k] = self.uy(nodes[k]);
        }
        for k in 0..3 {
            d[12 + k] = self.p(tri[k]);
        }
        d
    }

    /// Coordinates of all velocity nodes.
    pub fn node_coords(&self, mesh: &Mesh) -> Vec<[f64; 2]> {
        let mut c = mesh.nodes.clone();
        for e in &self.topo.edges {
            let (a, b) = (mesh.nodes[e[0]], mesh.nodes[e[1]]);
            c.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }
        c
    }

    /// Velocity at a velocity node.
    pub fn velocity(&self, x: &[f64], node: usize) -> [f64; 2] {
        [x[self.ux(node)], x[self.uy(node)]]
    }
}

/// P2 basis values at barycentric point `l`.
pub fn p2_values(l: [f64; 3]) -> [f64; P2_LOCAL] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// P2 basis gradients as combinations of the barycentric gradients:
/// ∇N_k = Σ_j c[k][j] ∇L_j.
pub fn p2_grad_coeffs(l: [f64; 3]) -> [[f64; 3]; P2_LOCAL] {
    [
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [4.0 * l[1], 4.0 * l[0], 0.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
    ]
}
