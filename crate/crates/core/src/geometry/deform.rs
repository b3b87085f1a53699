use super::{Mesh, Tag, Topology, LABEL_FLUID};
use crate::error::{Error, Result};

/// Nodal displacement field [m].
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationField {
    pub d: Vec<[f64; 2]>,
}

impl DeformationField {
    pub fn zeros(n: usize) -> Self {
        Self { d: vec![[0.0; 2]; n] }
    }

    pub fn max_norm(&self) -> f64 {
        self.d
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.d
            .iter()
            .zip(&other.d)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum()
    }
}

/// Moves every node by `scale * d`. Rejects results with a non-positive
/// element area so the caller can shrink the step.
pub fn apply_deformation(mesh: &Mesh, d: &DeformationField, scale: f64) -> Result<Mesh> {
    if d.d.len() != mesh.n_nodes() {
        return Err(Error::Mesh(format!(
            "deformation has {} entries for {} nodes",
            d.d.len(),
            mesh.n_nodes()
        )));
    }
    let mut out = mesh.clone();
    if scale == 0.0 {
        return Ok(out);
    }
    for (p, v) in out.nodes.iter_mut().zip(&d.d) {
        p[0] += scale * v[0];
        p[1] += scale * v[1];
    }
    for t in 0..out.n_triangles() {
        let area = out.signed_area(t);
        if !(area > 0.0) {
            return Err(Error::InvertedElement { element: t, area });
        }
    }
    Ok(out)
}

/// How a node may move.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeMotion {
    Fixed,
    /// Along the given unit axis only (channel side walls, symmetry line).
    Axial([f64; 2]),
    /// Second corner of a channel mouth: moves exactly like the given first
    /// corner, so mouths stay perpendicular to the channel axis.
    Linked(usize),
    /// Interior node of a channel mouth: follows the two mouth corners,
    /// `(1 - t) d_a + t d_b`, so the channel stays a rectangle.
    Mouth { a: usize, b: usize, t: f64 },
    Free,
}

/// Admissible deformations written as `d = P r` for a reduced design vector
/// `r`. Fixed nodes carry no design variables, side-wall nodes one, free
/// nodes two; mouth nodes and second mouth corners are slaved to the first
/// corner.
#[derive(Clone, Debug)]
pub struct DesignSpace {
    pub motion: Vec<NodeMotion>,
    /// Nonzeros of `P` per node: (design variable, coefficient vector).
    cols: Vec<Vec<(usize, [f64; 2])>>,
    n_vars: usize,
}

impl DesignSpace {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let topo = Topology::new(mesh);
        let n = mesh.n_nodes();
        let mut fixed = vec![false; n];
        let mut axial: Vec<Option<[f64; 2]>> = vec![None; n];
        let mut sym: Vec<Option<[f64; 2]>> = vec![None; n];
        for e in &mesh.boundary {
            let tri = topo.boundary_triangle(e.nodes[0], e.nodes[1])?;
            let label = mesh.labels[tri];
            let pin = match e.tag {
                Tag::In | Tag::Out | Tag::Int => true,
                Tag::Sym => false,
                Tag::Wall => label <= LABEL_FLUID,
                Tag::WssIn | Tag::WssOut => false,
            };
            if pin {
                for &v in &e.nodes {
                    fixed[v] = true;
                }
            } else if e.tag == Tag::Sym {
                // slide along the symmetry line
                let (p, q) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
                let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                let mut t = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
                if t[0] + t[1] < 0.0 {
                    t = [-t[0], -t[1]];
                }
                for &v in &e.nodes {
                    sym[v] = Some(t);
                }
            } else if e.tag == Tag::Wall {
                let axis = mesh
                    .channel(label as usize)
                    .ok_or_else(|| Error::Mesh(format!("wall edge next to unknown channel {label}")))?
                    .axis;
                for &v in &e.nodes {
                    axial[v] = Some(axis);
                }
            }
        }

        // channel mouths: nodes strictly between the two corners on the mouth line
        let mut mouth: Vec<Option<(usize, usize, f64)>> = vec![None; n];
        let mut in_channel = vec![false; n];
        let mut in_fluid = vec![false; n];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for &v in tri {
                if mesh.labels[t] >= 1 {
                    in_channel[v] = true;
                } else {
                    in_fluid[v] = true;
                }
            }
        }
        for c in &mesh.channels {
            for (a, b) in [(c.up_a, c.up_b), (c.down_a, c.down_b)] {
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                let dir = [pb[0] - pa[0], pb[1] - pa[1]];
                let len2 = dir[0] * dir[0] + dir[1] * dir[1];
                let tol = 1e-9 * len2.sqrt();
                for v in 0..n {
                    if v == a || v == b || !in_channel[v] || !in_fluid[v] {
                        continue;
                    }
                    let p = mesh.nodes[v];
                    let rel = [p[0] - pa[0], p[1] - pa[1]];
                    let t = (rel[0] * dir[0] + rel[1] * dir[1]) / len2;
                    let off = (rel[0] * dir[1] - rel[1] * dir[0]).abs() / len2.sqrt();
                    if off < tol && t > 0.0 && t < 1.0 {
                        mouth[v] = Some((a, b, t));
                    }
                }
            }
        }

        let mut motion = Vec::with_capacity(n);
        for v in 0..n {
            motion.push(if fixed[v] {
                NodeMotion::Fixed
            } else if let Some(ax) = axial[v].or(sym[v]) {
                NodeMotion::Axial(ax)
            } else if let Some((a, b, t)) = mouth[v] {
                NodeMotion::Mouth { a, b, t }
            } else {
                NodeMotion::Free
            });
        }
        for c in &mesh.channels {
            for (a, b) in [(c.up_a, c.up_b), (c.down_a, c.down_b)] {
                if let (NodeMotion::Axial(_), NodeMotion::Axial(_)) = (&motion[a], &motion[b]) {
                    motion[b] = NodeMotion::Linked(a);
                }
            }
        }

        let mut var_of = vec![[usize::MAX; 2]; n];
        let mut n_vars = 0;
        for v in 0..n {
            match motion[v] {
                NodeMotion::Free => {
                    var_of[v] = [n_vars, n_vars + 1];
                    n_vars += 2;
                }
                NodeMotion::Axial(_) => {
                    var_of[v][0] = n_vars;
                    n_vars += 1;
                }
                _ => {}
            }
        }
        let own = |v: usize| -> Vec<(usize, [f64; 2])> {
            let v = match motion[v] {
                NodeMotion::Linked(a) => a,
                _ => v,
            };
            match motion[v] {
                NodeMotion::Free => vec![(var_of[v][0], [1.0, 0.0]), (var_of[v][1], [0.0, 1.0])],
                NodeMotion::Axial(ax) => vec![(var_of[v][0], ax)],
                _ => vec![],
            }
        };
        let mut cols = Vec::with_capacity(n);
        for v in 0..n {
            cols.push(match motion[v] {
                NodeMotion::Mouth { a, b, t } => {
                    let scaled = |v: usize, s: f64| {
                        own(v).into_iter().map(move |(k, w)| (k, [s * w[0], s * w[1]]))
                    };
                    let mut merged: Vec<(usize, [f64; 2])> = Vec::new();
                    for (k, w) in scaled(a, 1.0 - t).chain(scaled(b, t)) {
                        match merged.iter_mut().find(|e| e.0 == k) {
                            Some(e) => {
                                e.1[0] += w[0];
                                e.1[1] += w[1];
                            }
                            None => merged.push((k, w)),
                        }
                    }
                    merged
                }
                _ => own(v),
            });
        }
        Ok(Self { motion, cols, n_vars })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_nodes(&self) -> usize {
        self.cols.len()
    }

    /// Nonzeros of the prolongation for one node.
    pub fn node_entries(&self, v: usize) -> &[(usize, [f64; 2])] {
        &self.cols[v]
    }

    /// d = P r
    pub fn prolong(&self, r: &[f64]) -> DeformationField {
        let d = self
            .cols
            .iter()
            .map(|c| {
                let mut v = [0.0; 2];
                for &(k, w) in c {
                    v[0] += w[0] * r[k];
                    v[1] += w[1] * r[k];
                }
                v
            })
            .collect();
        DeformationField { d }
    }

    /// Pᵀ g for a nodal vector g (e.g. a raw coordinate gradient).
    pub fn restrict_transpose(&self, g: &[[f64; 2]]) -> Vec<f64> {
        let mut r = vec![0.0; self.n_vars];
        for (c, gv) in self.cols.iter().zip(g) {
            for &(k, w) in c {
                r[k] += w[0] * gv[0] + w[1] * gv[1];
            }
        }
        r
    }

    /// Design coordinates of a field: the free components of free nodes and the
    /// axial component of side-wall nodes. Inverse of `prolong` on its range.
    pub fn extract(&self, field: &DeformationField) -> Vec<f64> {
        let mut r = vec![0.0; self.n_vars];
        for (v, m) in self.motion.iter().enumerate() {
            match *m {
                NodeMotion::Free => {
                    r[self.cols[v][0].0] = field.d[v][0];
                    r[self.cols[v][1].0] = field.d[v][1];
                }
                NodeMotion::Axial(ax) => {
                    r[self.cols[v][0].0] = field.d[v][0] * ax[0] + field.d[v][1] * ax[1];
                }
                _ => {}
            }
        }
        r
    }

    /// Projection onto admissible fields. Idempotent: `P (extract (P r)) = P r`.
    pub fn project(&self, field: &DeformationField) -> DeformationField {
        self.prolong(&self.extract(field))
    }

    /// Largest violation of the node constraints.
    pub fn violation(&self, field: &DeformationField) -> f64 {
        let p = self.project(field);
        field
            .d
            .iter()
            .zip(&p.d)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }
}
