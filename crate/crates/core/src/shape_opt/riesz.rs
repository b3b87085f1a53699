use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, LuFactor};
use crate::geometry::{DeformationField, DesignSpace, Mesh, NodeMotion};

/// Projection of an arbitrary nodal field onto the admissible deformations.
pub fn project_constraints(design: &DesignSpace, field: &DeformationField) -> DeformationField {
    design.project(field)
}

/// Shape inner product from linear elasticity (unit Lamé parameters, P1 on
/// the mesh triangles) restricted to the design space, K = Pᵀ K_el P.
/// Element stiffness is scaled by (A_mean / A_e)^β so small elements deform
/// less.
///
/// The optimizer controls only the shape-changing motions: the axial
/// position of the channel corners and the flow-axis component of the
/// distributor end-wall nodes. Everything else (interior nodes, sliding of
/// side-wall nodes, tangential motion along the end walls) follows by
/// elastic extension, r_I = −K_II⁻¹ K_IB r_B. Gradients are condensed
/// accordingly, g_B − K_BI K_II⁻¹ g_I, which is the exact derivative of the
/// objective along extended control motions.
pub struct RieszMap {
    matrix: CsrMatrix,
    lu: LuFactor,
    interior_lu: Option<LuFactor>,
    /// Control variables, then extension variables.
    boundary: Vec<usize>,
    interior: Vec<usize>,
    /// Position of each design variable in `boundary` or `interior`.
    slot: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl RieszMap {
    pub fn new(mesh: &Mesh, design: &DesignSpace, stiffening: f64, smoothing: f64) -> Result<Self> {
        Self::with_frozen(mesh, design, stiffening, smoothing, &vec![false; design.n_vars()])
    }

    /// Like [`new`](Self::new) with some design variables held at zero.
    pub fn with_frozen(
        mesh: &Mesh,
        design: &DesignSpace,
        stiffening: f64,
        smoothing: f64,
        frozen: &[bool],
    ) -> Result<Self> {
        if design.n_nodes() != mesh.n_nodes() {
            return Err(Error::Config("design space does not match the mesh".into()));
        }
        let n = design.n_vars();
        if n == 0 {
            return Err(Error::Config("design space has no free variables".into()));
        }
        if frozen.len() != n {
            return Err(Error::Config("frozen mask does not match the design space".into()));
        }
        let mut is_boundary = control_variables(mesh, design)?;
        let mut is_interior: Vec<bool> = is_boundary.iter().map(|b| !b).collect();
        for k in (0..n).filter(|&k| frozen[k]) {
            is_boundary[k] = false;
            is_interior[k] = false;
        }
        let matrix = stiffness(mesh, design, stiffening, smoothing, frozen)?;
        let lu = LuFactor::new(&matrix)?;

        let (mut boundary, mut interior, mut slot) = (Vec::new(), Vec::new(), vec![0; n]);
        for k in 0..n {
            if is_boundary[k] {
                slot[k] = boundary.len();
                boundary.push(k);
            } else if is_interior[k] {
                slot[k] = interior.len();
                interior.push(k);
            }
        }
        if boundary.is_empty() {
            return Err(Error::Config("design space has no control variables".into()));
        }
        let interior_lu = if interior.is_empty() {
            None
        } else {
            let mut trip = Vec::new();
            for (i, &k) in interior.iter().enumerate() {
                for (j, v) in matrix.row(k) {
                    if !is_boundary[j] {
                        trip.push((i, slot[j], v));
                    }
                }
            }
            Some(LuFactor::new(&CsrMatrix::from_triplets(interior.len(), &trip)?)?)
        };
        Ok(Self {
            matrix,
            lu,
            interior_lu,
            boundary,
            interior,
            slot,
            is_boundary,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Number of control variables.
    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// K_II⁻¹ v_I.
    fn interior_solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        match &self.interior_lu {
            Some(lu) if v.iter().any(|&x| x != 0.0) => lu.solve(v),
            _ => Ok(vec![0.0; self.interior.len()]),
        }
    }

    /// Gradient along extended boundary motions: g_B − K_BI K_II⁻¹ g_I.
    pub fn condense(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_finite(g)?;
        let gi: Vec<f64> = self.interior.iter().map(|&k| g[k]).collect();
        let w = self.interior_solve(&gi)?;
        Ok(self
            .boundary
            .iter()
            .map(|&k| {
                let coupling: f64 = self
                    .matrix
                    .row(k)
                    .filter(|&(j, _)| !self.is_boundary[j])
                    .map(|(j, v)| v * w[self.slot[j]])
                    .sum();
                g[k] - coupling
            })
            .collect())
    }

    /// Full design vector of a boundary motion with its elastic extension.
    pub fn extend(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self
            .interior
            .iter()
            .map(|&k| {
                -self
                    .matrix
                    .row(k)
                    .filter(|&(j, _)| self.is_boundary[j])
                    .map(|(j, v)| v * b[self.slot[j]])
                    .sum::<f64>()
            })
            .collect();
        let ri = self.interior_solve(&rhs)?;
        let mut r = vec![0.0; self.slot.len()];
        for (i, &k) in self.boundary.iter().enumerate() {
            r[k] = b[i];
        }
        for (i, &k) in self.interior.iter().enumerate() {
            r[k] = ri[i];
        }
        Ok(r)
    }

    /// Boundary part of K⁻¹ [g_B; 0], i.e. the Schur complement inverse
    /// applied to a condensed gradient.
    pub fn apply_inverse(&self, gb: &[f64]) -> Result<Vec<f64>> {
        check_finite(gb)?;
        if gb.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; gb.len()]);
        }
        let mut full = vec![0.0; self.slot.len()];
        for (i, &k) in self.boundary.iter().enumerate() {
            full[k] = gb[i];
        }
        let r = self.lu.solve(&full)?;
        Ok(self.boundary.iter().map(|&k| r[k]).collect())
    }

    /// Steepest-descent deformation for a design-space gradient `g`: the
    /// elastic response to the condensed gradient as a boundary load.
    pub fn descent(&self, design: &DesignSpace, g: &[f64]) -> Result<DeformationField> {
        let gb = self.condense(g)?;
        let b: Vec<f64> = self.apply_inverse(&gb)?.iter().map(|v| -v).collect();
        Ok(design.prolong(&self.extend(&b)?))
    }

    /// √(g_Bᵀ S⁻¹ g_B) for a condensed gradient.
    pub fn dual_norm(&self, gb: &[f64]) -> Result<f64> {
        let r = self.apply_inverse(gb)?;
        Ok(r.iter().zip(gb).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
    }
}

/// Marks the control variables among the design variables.
fn control_variables(mesh: &Mesh, design: &DesignSpace) -> Result<Vec<bool>> {
    let axis = mesh
        .channels
        .first()
        .ok_or_else(|| Error::Config("mesh has no channels".into()))?
        .axis;
    let mut control = vec![false; design.n_vars()];
    for c in &mesh.channels {
        for v in [c.up_a, c.up_b, c.down_a, c.down_b] {
            if let NodeMotion::Axial(_) = design.motion[v] {
                for &(k, _) in design.node_entries(v) {
                    control[k] = true;
                }
            }
        }
    }
    for e in &mesh.boundary {
        if !e.tag.is_wss() {
            continue;
        }
        for &v in &e.nodes {
            if matches!(design.motion[v], NodeMotion::Free | NodeMotion::Axial(_)) {
                for &(k, w) in design.node_entries(v) {
                    if (w[0] * axis[0] + w[1] * axis[1]).abs() > 0.5 {
                        control[k] = true;
                    }
                }
            }
        }
    }
    Ok(control)
}

fn check_finite(g: &[f64]) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Optimization("non-finite shape gradient".into()));
    }
    Ok(())
}

/// Flow-axis entries of a node's prolongation.
fn axial_entries(design: &DesignSpace, v: usize, axis: [f64; 2]) -> Vec<(usize, f64)> {
    design
        .node_entries(v)
        .iter()
        .map(|&(k, w)| (k, w[0] * axis[0] + w[1] * axis[1]))
        .filter(|&(_, c)| c.abs() > 0.5)
        .collect()
}

/// Pᵀ K_el P plus the end-wall smoothing term. Frozen variables get
/// decoupled unit rows.
fn stiffness(mesh: &Mesh, design: &DesignSpace, stiffening: f64, smoothing: f64, frozen: &[bool]) -> Result<CsrMatrix> {
    let areas: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.signed_area(t)).collect();
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    let mut trip = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = areas[t];
        if !(area > 0.0) {
            return Err(Error::InvertedElement { element: t, area });
        }
        let k = element_stiffness(tri.map(|v| mesh.nodes[v]), area);
        let weight = (mean / area).powf(stiffening);
        for a in 0..3 {
            for b in 0..3 {
                for &(i, wi) in design.node_entries(tri[a]) {
                    for &(j, wj) in design.node_entries(tri[b]) {
                        let mut v = 0.0;
                        for p in 0..2 {
                            for q in 0..2 {
                                v += wi[p] * k[2 * a + p][2 * b + q] * wj[q];
                            }
                        }
                        trip.push((i, j, weight * v));
                    }
                }
            }
        }
    }
    if smoothing > 0.0 {
        // ℓ ∫ |∂_s d_axis|² ds along the distributor end walls
        let ell = smoothing * mesh.size();
        let axis = mesh.channels.first().map_or([0.0, -1.0], |c| c.axis);
        for e in mesh.boundary.iter().filter(|e| e.tag.is_wss()) {
            let c = ell / mesh.edge_length(e);
            let ea = axial_entries(design, e.nodes[0], axis);
            let eb = axial_entries(design, e.nodes[1], axis);
            for (x, sx) in [(&ea, 1.0), (&eb, -1.0)] {
                for (y, sy) in [(&ea, 1.0), (&eb, -1.0)] {
                    for &(i, wi) in x.iter() {
                        for &(j, wj) in y.iter() {
                            trip.push((i, j, c * sx * sy * wi * wj));
                        }
                    }
                }
            }
        }
    }
    trip.retain(|&(i, j, _)| !frozen[i] && !frozen[j]);
    trip.extend((0..design.n_vars()).filter(|&k| frozen[k]).map(|k| (k, k, 1.0)));
    CsrMatrix::from_triplets(design.n_vars(), &trip)
}

/// 6×6 plane-strain stiffness with λ = μ = 1, dofs ordered (x0, y0, x1, ...).
fn element_stiffness(p: [[f64; 2]; 3], area: f64) -> [[f64; 6]; 6] {
    // gradients of the barycentric coordinates
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        g[a] = [(p[b][1] - p[c][1]) / (2.0 * area), (p[c][0] - p[b][0]) / (2.0 * area)];
    }
    let (lambda, mu) = (1.0, 1.0);
    let mut k = [[0.0; 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { dot } else { 0.0 };
                    k[2 * a + i][2 * b + j] = area * (mu * delta + mu * g[a][j] * g[b][i] + lambda * g[a][i] * g[b][j]);
                }
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_motions_are_in_the_kernel() {
        let p = [[0.0, 0.0], [2.0, 0.3], [0.4, 1.5]];
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        let k = element_stiffness(p, area);
        let translation = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let rotation: Vec<f64> = p.iter().flat_map(|q| [-q[1], q[0]]).collect();
        for mode in [translation.to_vec(), rotation] {
            for row in &k {
                let f: f64 = row.iter().zip(&mode).map(|(a, b)| a * b).sum();
                assert!(f.abs() < 1e-13, "{f}");
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                assert!((k[i][j] - k[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn uniform_stretch_energy() {
        // u = (x, 0): ε = diag(1, 0), energy density μ|ε|² + λ/2 (tr ε)² = 1.5 per unit area
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let k = element_stiffness(p, 0.5);
        let u: Vec<f64> = p.iter().flat_map(|q| [q[0], 0.0]).collect();
        let mut e = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                e += 0.5 * u[i] * k[i][j] * u[j];
            }
        }
        assert!((e - 0.75).abs() < 1e-14, "{e}");
    }
}
