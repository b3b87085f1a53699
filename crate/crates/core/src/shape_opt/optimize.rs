use std::collections::VecDeque;
use std::fmt::Write as _;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::riesz::RieszMap;
use super::{Evaluation, ShapeProblem};
use crate::error::{Error, Result};
use crate::fem::FlowState;
use crate::geometry::{apply_deformation, mesh_quality, triangle_quality, DeformationField, Mesh, QualityThresholds};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// L-BFGS history length.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the Riesz norm of the gradient falls below this fraction of
    /// its initial value.
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Step reduction factor on rejection.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Smallest interior angle any accepted mesh may have [deg].
    pub min_angle_deg: f64,
    /// Exponent of the inverse-area stiffening in the Riesz map.
    pub stiffening: f64,
    /// Weight of the end-wall smoothing term in the Riesz map, as a fraction
    /// of the domain size.
    pub smoothing: f64,
    /// Largest nodal displacement of one step, as a fraction of the mesh
    /// target edge length.
    pub max_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            memory: 5,
            max_iterations: 120,
            grad_tol: 1e-3,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 12,
            min_angle_deg: 10.0,
            stiffening: 3.0,
            smoothing: 0.1,
            max_step: 0.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if self.memory < 1 || self.max_backtracks < 1 {
            return Err(Error::Config("memory and max_backtracks must be at least 1".into()));
        }
        if !(pos(self.grad_tol) && pos(self.armijo) && self.armijo < 1.0) {
            return Err(Error::Config("grad_tol and armijo must be positive (armijo < 1)".into()));
        }
        if !(pos(self.backtrack) && self.backtrack < 1.0) {
            return Err(Error::Config("backtrack must lie in (0, 1)".into()));
        }
        if !(self.min_angle_deg >= 0.0 && self.min_angle_deg < 60.0) {
            return Err(Error::Config("min_angle_deg must lie in [0, 60)".into()));
        }
        if !(self.stiffening >= 0.0 && self.smoothing >= 0.0 && pos(self.max_step)) {
            return Err(Error::Config("stiffening and smoothing must be >= 0, max_step > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
    /// Every trial step was rejected by the mesh-angle floor.
    MeshQuality,
    /// A state solve failed for a reason other than Newton divergence.
    SolverFailure(String),
}

impl StopReason {
    /// Whether the run reached a first-order point.
    pub fn converged(&self) -> bool {
        *self == StopReason::Converged
    }

    pub fn as_str(&self) -> &str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max_iterations",
            StopReason::LineSearchFailed => "line_search_failed",
            StopReason::MeshQuality => "mesh_quality",
            StopReason::SolverFailure(_) => "solver_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Scalarized objective.
    pub j: f64,
    /// Riesz norm of the reduced gradient.
    pub grad_norm: f64,
    /// Largest nodal displacement of the accepted step [m].
    pub step: f64,
    pub min_angle_deg: f64,
    pub costs: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,J,grad_norm,step,min_angle_deg,J1,J2,J3\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.iteration, r.j, r.grad_norm, r.step, r.min_angle_deg, r.costs[0], r.costs[1], r.costs[2]
            );
        }
        s
    }

    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

pub struct OptimizationResult {
    pub mesh: Mesh,
    pub state: FlowState,
    pub costs: [f64; 3],
    pub trace: OptimizationTrace,
    pub stop: StopReason,
}

enum Trial {
    Solved(Mesh, Evaluation),
    /// Elements below the angle floor (or inverted).
    Degenerate(Vec<usize>),
    Unsolved,
    Worse,
}

/// Minimizes the scalarized objective over admissible deformations of `mesh0`.
///
/// Euclidean L-BFGS on the boundary design coordinates (interior nodes follow
/// by elastic extension) with the elasticity Schur complement inverse as
/// initial Hessian. Trial meshes below the angle floor, with unconverged
/// states or without sufficient decrease are rejected and the step is
/// reduced. When the line search fails on the angle floor, the design
/// variables of the offending elements are frozen and the iteration continues
/// on the rest; the run stops with [`StopReason::MeshQuality`] once nothing is
/// left to freeze. A failed run still returns the last accepted iterate.
pub fn optimize(problem: &ShapeProblem, mesh0: &Mesh, opt: &OptimizerConfig) -> Result<OptimizationResult> {
    opt.validate()?;
    let thresholds = QualityThresholds {
        min_angle_deg: opt.min_angle_deg,
        ..QualityThresholds::default()
    };
    let cap = opt.max_step * mesh0.target_h;

    let mut mesh = mesh0.clone();
    let mut frozen = vec![false; problem.design.n_vars()];
    let riesz_at = |m: &Mesh, frozen: &[bool]| {
        RieszMap::with_frozen(m, &problem.design, opt.stiffening, opt.smoothing, frozen)
    };
    let mut eval = problem.evaluate(&mesh, None)?;
    let mut raw = problem.gradient(&mesh, &eval.state)?.design;
    let mut riesz = riesz_at(&mesh, &frozen)?;
    let mut grad = riesz.condense(&raw)?;
    let mut gnorm = riesz.dual_norm(&grad)?;
    let g0 = gnorm;
    let mut trace = OptimizationTrace::default();
    let record = |trace: &mut OptimizationTrace, it: usize, e: &Evaluation, gn: f64, step: f64, mesh: &Mesh| {
        trace.records.push(TraceRecord {
            iteration: it,
            j: e.value,
            grad_norm: gn,
            step,
            min_angle_deg: mesh_quality(mesh, &thresholds).min_angle_deg,
            costs: e.costs,
        });
    };
    record(&mut trace, 0, &eval, gnorm, 0.0, &mesh);
    info!("shape optimization: J = {:.6e}, |g| = {:.3e}", eval.value, gnorm);

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut stop = StopReason::MaxIterations;
    let mut it = 0;
    while it < opt.max_iterations {
        if gnorm == 0.0 || gnorm <= opt.grad_tol * g0 {
            stop = StopReason::Converged;
            break;
        }
        let (mut p, scaled) = direction(&riesz, &grad, &memory)?;
        let mut slope = dot(&grad, &p);
        if !(slope < 0.0) {
            debug!("not a descent direction, resetting memory");
            memory.clear();
            p = riesz.apply_inverse(&grad)?.iter().map(|v| -v).collect();
            slope = dot(&grad, &p);
        }
        let field = problem.design.prolong(&riesz.extend(&p)?);
        let max_disp = field.max_norm();
        let mut alpha: f64 = if scaled { cap / max_disp } else { (cap / max_disp).min(1.0) };

        let mut accepted = None;
        let mut last = Trial::Worse;
        for _ in 0..=opt.max_backtracks {
            match try_step(problem, &mesh, &eval, &field, alpha, &thresholds) {
                Ok(Trial::Solved(m, e)) if e.value <= eval.value + opt.armijo * alpha * slope => {
                    accepted = Some((m, e));
                    break;
                }
                Ok(t) => last = t,
                Err(Error::NewtonFailed { .. }) => last = Trial::Unsolved,
                Err(e) => {
                    warn!("state solve failed: {e}");
                    stop = StopReason::SolverFailure(e.to_string());
                    break;
                }
            }
            alpha *= opt.backtrack;
        }
        if let StopReason::SolverFailure(_) = stop {
            break;
        }
        let Some((new_mesh, new_eval)) = accepted else {
            // Hold the nodes of the elements that hit the angle floor and
            // continue with the remaining variables.
            if let Trial::Degenerate(tris) = &last {
                let mut added = 0;
                for &t in tris {
                    for &v in &mesh.triangles[t] {
                        for &(k, _) in problem.design.node_entries(v) {
                            if !frozen[k] {
                                frozen[k] = true;
                                added += 1;
                            }
                        }
                    }
                }
                if added > 0 {
                    if let Ok(r) = riesz_at(&mesh, &frozen) {
                        debug!("freezing {added} design variables at the angle floor");
                        riesz = r;
                        grad = riesz.condense(&raw)?;
                        gnorm = riesz.dual_norm(&grad)?;
                        memory.clear();
                        continue;
                    }
                }
            }
            stop = match last {
                Trial::Degenerate(_) => StopReason::MeshQuality,
                _ => StopReason::LineSearchFailed,
            };
            warn!("line search failed ({})", stop.as_str());
            break;
        };
        it += 1;
        let new_raw = match problem.gradient(&new_mesh, &new_eval.state) {
            Ok(g) => g.design,
            Err(e) => {
                stop = StopReason::SolverFailure(e.to_string());
                break;
            }
        };
        let new_riesz = riesz_at(&new_mesh, &frozen)?;
        let new_grad = new_riesz.condense(&new_raw)?;
        let s: Vec<f64> = p.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            memory.push_back((s, y));
            if memory.len() > opt.memory {
                memory.pop_front();
            }
        } else {
            debug!("iteration {it}: curvature condition failed, skipping update");
        }
        mesh = new_mesh;
        eval = new_eval;
        raw = new_raw;
        grad = new_grad;
        riesz = new_riesz;
        gnorm = riesz.dual_norm(&grad)?;
        record(&mut trace, it, &eval, gnorm, alpha * max_disp, &mesh);
        info!(
            "iteration {it}: J = {:.6e}, |g|/|g0| = {:.3e}, step {:.3e} m",
            eval.value,
            gnorm / g0,
            alpha * max_disp
        );
        if it == opt.max_iterations && gnorm <= opt.grad_tol * g0 {
            stop = StopReason::Converged;
        }
    }
    info!("shape optimization stopped after {it} iterations: {}", stop.as_str());
    Ok(OptimizationResult {
        mesh,
        costs: eval.costs,
        state: eval.state,
        trace,
        stop,
    })
}

/// L-BFGS two-loop recursion with H0 = γ K_r⁻¹. The flag reports whether the
/// direction is the unscaled steepest descent (no history yet).
fn direction(riesz: &RieszMap, grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Result<(Vec<f64>, bool)> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    let mut r = riesz.apply_inverse(&q)?;
    if let Some((s, y)) = memory.back() {
        let hy = riesz.apply_inverse(y)?;
        let gamma = dot(s, y) / dot(y, &hy);
        for v in r.iter_mut() {
            *v *= gamma;
        }
    }
    for ((s, y), (a, rho)) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    Ok((r.iter().map(|v| -v).collect(), memory.is_empty()))
}

/// Deforms, checks the angle floor and solves.
fn try_step(
    problem: &ShapeProblem,
    mesh: &Mesh,
    eval: &Evaluation,
    field: &DeformationField,
    alpha: f64,
    thresholds: &QualityThresholds,
) -> Result<Trial> {
    let trial = match apply_deformation(mesh, field, alpha) {
        Ok(m) => m,
        Err(Error::InvertedElement { element, .. }) => return Ok(Trial::Degenerate(vec![element])),
        Err(e) => return Err(e),
    };
    let q = mesh_quality(&trial, thresholds);
    if q.min_angle_deg < thresholds.min_angle_deg {
        let below = q
            .flagged
            .into_iter()
            .filter(|&t| triangle_quality(trial.triangles[t].map(|v| trial.nodes[v])).0.iter().any(|&a| a < thresholds.min_angle_deg))
            .collect();
        return Ok(Trial::Degenerate(below));
    }
    let e = problem.evaluate(&trial, Some(&eval.state.x))?;
    Ok(Trial::Solved(trial, e))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
