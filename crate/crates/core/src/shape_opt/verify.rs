use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ShapeProblem;
use crate::error::Result;
use crate::fem::NewtonOptions;
use crate::geometry::{apply_deformation, Mesh};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionCheck {
    /// Directional derivative from the adjoint gradient.
    pub adjoint: f64,
    /// Central difference of the re-solved objective.
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    /// Largest nodal displacement used for the differences [m].
    pub step: f64,
    pub directions: Vec<DirectionCheck>,
}

impl GradientReport {
    pub fn max_relative_error(&self) -> f64 {
        self.directions.iter().map(|d| d.relative_error).fold(0.0, f64::max)
    }
}

/// Compares the adjoint gradient with central differences of the full
/// deform / re-solve / evaluate pipeline along `n_directions` random
/// admissible directions. The displacement is `rel_step` times the domain
/// size. States are solved to a tight tolerance so the differences resolve
/// the derivative.
pub fn verify_gradient(
    problem: &ShapeProblem,
    mesh: &Mesh,
    n_directions: usize,
    seed: u64,
    rel_step: f64,
) -> Result<GradientReport> {
    let tight = NewtonOptions {
        tol: 1e-13,
        ..problem.solver.options
    };
    let base = problem.evaluate_with(mesh, None, tight)?;
    let grad = problem.gradient(mesh, &base.state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = rel_step * mesh.size();
    let mut directions = Vec::with_capacity(n_directions);
    for _ in 0..n_directions {
        let r: Vec<f64> = (0..problem.design.n_vars()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = problem.design.prolong(&r);
        let eps = step / field.max_norm();
        let adjoint: f64 = grad.design.iter().zip(&r).map(|(g, v)| g * v).sum();
        let value = |s: f64| -> Result<f64> {
            let m = apply_deformation(mesh, &field, s)?;
            Ok(problem.evaluate_with(&m, Some(&base.state.x), tight)?.value)
        };
        let fd = (value(eps)? - value(-eps)?) / (2.0 * eps);
        let relative_error = (fd - adjoint).abs() / adjoint.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        directions.push(DirectionCheck {
            adjoint,
            finite_difference: fd,
            relative_error,
        });
    }
    Ok(GradientReport { step, directions })
}
