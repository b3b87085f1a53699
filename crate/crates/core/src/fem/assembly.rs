use std::sync::OnceLock;

use faer::sparse::linalg::solvers::SymbolicLu;

use super::bc::Dirichlet;
use super::kernels::{element_coord_derivative, element_jacobian, element_residual, ElemCoeffs};
use super::space::{Space, LOCAL_DOFS};
use super::sparse::{CsrMatrix, LuFactor};
use crate::error::Result;
use crate::exec::par_map;
use crate::geometry::Mesh;

/// Connectivity-dependent assembly data: dof numbering, the sparsity pattern
/// of the Jacobian and the position of every element entry inside it. Stays
/// valid while the mesh deforms, since only coordinates change.
pub struct Discretization {
    pub space: Space,
    pattern: CsrMatrix,
    /// Per element, row-major positions of the 15×15 local block in `vals`.
    scatter: Vec<[usize; LOCAL_DOFS * LOCAL_DOFS]>,
    dofs: Vec<[usize; LOCAL_DOFS]>,
    symbolic: OnceLock<SymbolicLu<usize>>,
}

fn local_state(x: &[f64], dofs: &[usize; LOCAL_DOFS]) -> [f64; LOCAL_DOFS] {
    dofs.map(|d| x[d])
}

pub fn vertices(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    mesh.triangles[t].map(|v| mesh.nodes[v])
}

impl Discretization {
    pub fn new(mesh: &Mesh) -> Self {
        let space = Space::new(mesh);
        let dofs: Vec<[usize; LOCAL_DOFS]> = (0..mesh.n_triangles()).map(|t| space.element_dofs(mesh, t)).collect();
        let mut trip = Vec::with_capacity(dofs.len() * LOCAL_DOFS * LOCAL_DOFS);
        for d in &dofs {
            for &i in d {
                for &j in d {
                    trip.push((i, j, 0.0));
                }
            }
        }
        let pattern = CsrMatrix::from_triplets(space.n_dofs, &trip).expect("dofs in range");
        let scatter = dofs
            .iter()
            .map(|d| {
                let mut s = [0; LOCAL_DOFS * LOCAL_DOFS];
                for a in 0..LOCAL_DOFS {
                    for b in 0..LOCAL_DOFS {
                        s[a * LOCAL_DOFS + b] = pattern.find(d[a], d[b]).expect("pattern entry");
                    }
                }
                s
            })
            .collect();
        Self {
            space,
            pattern,
            scatter,
            dofs,
            symbolic: OnceLock::new(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs
    }

    pub fn element_dofs(&self, t: usize) -> &[usize; LOCAL_DOFS] {
        &self.dofs[t]
    }

    /// Free-row residual assembled over elements; Dirichlet rows hold x_d − g_d.
    pub fn residual(&self, mesh: &Mesh, coeffs: &[ElemCoeffs], bc: &Dirichlet, x: &[f64]) -> Vec<f64> {
        let local = par_map(mesh.n_triangles(), |t| {
            element_residual(&vertices(mesh, t), &local_state(x, &self.dofs[t]), &coeffs[t])
        });
        let mut r = vec![0.0; self.n_dofs()];
        for (t, lr) in local.iter().enumerate() {
            for (a, &d) in self.dofs[t].iter().enumerate() {
                r[d] += lr[a];
            }
        }
        bc.apply_to_residual(&mut r, x);
        r
    }

    /// Jacobian with unit Dirichlet rows, plus the residual at `x`.
    pub fn jacobian(&self, mesh: &Mesh, coeffs: &[ElemCoeffs], bc: &Dirichlet, x: &[f64]) -> (CsrMatrix, Vec<f64>) {
        let local = par_map(mesh.n_triangles(), |t| {
            element_jacobian(&vertices(mesh, t), &local_state(x, &self.dofs[t]), &coeffs[t])
        });
        let mut m = self.pattern.clone();
        let mut r = vec![0.0; self.n_dofs()];
        for (t, (lr, lj)) in local.iter().enumerate() {
            let s = &self.scatter[t];
            for a in 0..LOCAL_DOFS {
                r[self.dofs[t][a]] += lr[a];
                for b in 0..LOCAL_DOFS {
                    m.vals[s[a * LOCAL_DOFS + b]] += lj[a][b];
                }
            }
        }
        for &d in &bc.dofs {
            m.set_unit_row(d);
        }
        bc.apply_to_residual(&mut r, x);
        (m, r)
    }

    /// LU factorization reusing the cached symbolic analysis.
    pub fn factor(&self, m: &CsrMatrix) -> Result<LuFactor> {
        if self.symbolic.get().is_none() {
            let sym = m.symbolic_lu()?;
            let _ = self.symbolic.set(sym);
        }
        LuFactor::with_symbolic(m, self.symbolic.get().expect("initialised"))
    }

    /// zᵀ ∂R/∂X per mesh vertex, where R is the constrained residual and z
    /// an adjoint-like vector. Dirichlet rows do not depend on coordinates.
    pub fn coord_vjp(&self, mesh: &Mesh, coeffs: &[ElemCoeffs], bc: &Dirichlet, x: &[f64], z: &[f64]) -> Vec<[f64; 2]> {
        let local = par_map(mesh.n_triangles(), |t| {
            let dr = element_coord_derivative(&vertices(mesh, t), &local_state(x, &self.dofs[t]), &coeffs[t]);
            let mut g = [0.0; 6];
            for (a, &d) in self.dofs[t].iter().enumerate() {
                if bc.is_fixed[d] {
                    continue;
                }
                for k in 0..6 {
                    g[k] += z[d] * dr[a][k];
                }
            }
            g
        });
        let mut out = vec![[0.0; 2]; mesh.n_nodes()];
        for (t, g) in local.iter().enumerate() {
            for (a, &v) in mesh.triangles[t].iter().enumerate() {
                out[v][0] += g[2 * a];
                out[v][1] += g[2 * a + 1];
            }
        }
        out
    }
}
