use crate::error::{Error, Result};
use crate::fem::sparse::norm;
use crate::fem::{FlowSolver, FlowState};
use crate::geometry::Mesh;

/// Adjoint dofs, same layout as the state.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointState {
    pub z: Vec<f64>,
    /// ‖Jᵀz + dJ/dx‖ / ‖dJ/dx‖ after the solve.
    pub relative_residual: f64,
}

const ADJOINT_TOL: f64 = 1e-10;

/// Solves Jᵀ z = −dJ/dx with the Jacobian at the converged state.
pub fn solve_adjoint(solver: &FlowSolver, mesh: &Mesh, state: &FlowState, dj_dstate: &[f64]) -> Result<AdjointState> {
    let n = solver.disc.n_dofs();
    if dj_dstate.len() != n || state.x.len() != n {
        return Err(Error::Config(format!(
            "adjoint right-hand side has {} entries for {n} dofs",
            dj_dstate.len()
        )));
    }
    let scale = norm(dj_dstate);
    if scale == 0.0 {
        return Ok(AdjointState {
            z: vec![0.0; n],
            relative_residual: 0.0,
        });
    }
    let (jac, _) = solver.jacobian(mesh, &state.x)?;
    let lu = solver.disc.factor(&jac)?;
    let rhs: Vec<f64> = dj_dstate.iter().map(|v| -v).collect();
    let z = lu.solve_transpose(&rhs)?;
    let mut r = jac.mul_transpose_vec(&z);
    for (ri, d) in r.iter_mut().zip(dj_dstate) {
        *ri += d;
    }
    let relative_residual = norm(&r) / scale;
    if !(relative_residual < ADJOINT_TOL) {
        return Err(Error::LinearSolver(format!(
            "adjoint relative residual {relative_residual:.3e} above {ADJOINT_TOL:e}"
        )));
    }
    Ok(AdjointState { z, relative_residual })
}

/// dJ/dX = ∂J/∂X + zᵀ ∂R/∂X per mesh vertex.
pub fn shape_gradient(
    solver: &FlowSolver,
    mesh: &Mesh,
    state: &FlowState,
    adjoint: &AdjointState,
    dj_dcoords: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    if dj_dcoords.len() != mesh.n_nodes() {
        return Err(Error::Config("coordinate derivative has the wrong length".into()));
    }
    let bc = solver.dirichlet(mesh)?;
    let coeffs = solver.coeffs(mesh)?;
    let mut g = solver.disc.coord_vjp(mesh, &coeffs, &bc, &state.x, &adjoint.z);
    for (a, b) in g.iter_mut().zip(dj_dcoords) {
        a[0] += b[0];
        a[1] += b[1];
    }
    Ok(g)
}
