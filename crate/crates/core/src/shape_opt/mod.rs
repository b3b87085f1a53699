//! Shape optimization of the channel layout: discrete adjoints, an
//! elasticity-based Riesz map on the admissible deformations and a
//! limited-memory BFGS iteration with a mesh-quality guarded line search.

mod adjoint;
mod optimize;
mod riesz;
mod verify;

pub use adjoint::{shape_gradient, solve_adjoint, AdjointState};
pub use optimize::{optimize, OptimizationResult, OptimizationTrace, OptimizerConfig, StopReason, TraceRecord};
pub use riesz::{project_constraints, RieszMap};
pub use verify::{verify_gradient, DirectionCheck, GradientReport};

use log::warn;

use crate::error::Result;
use crate::fem::{FlowSolver, FlowState, FluidProps, InflowSpec, Model, NewtonOptions};
use crate::functionals::{check_weights, eval_all, functional_derivatives, FunctionalConfig, FunctionalContext};
use crate::geometry::{DesignSpace, Mesh};

/// A scalarized shape optimization problem Σ λ_i J_i / N_i on a fixed mesh
/// topology. The normalizers N_i are frozen at construction.
pub struct ShapeProblem {
    pub solver: FlowSolver,
    pub cfg: FunctionalConfig,
    pub lambda: [f64; 3],
    pub normalizers: [f64; 3],
    pub design: DesignSpace,
}

/// Solved state on one mesh with its costs.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub state: FlowState,
    /// Raw (J1, J2, J3).
    pub costs: [f64; 3],
    /// Scalarized objective.
    pub value: f64,
}

/// Reduced gradient of the scalarized objective.
#[derive(Clone, Debug)]
pub struct Gradient {
    /// Per mesh vertex.
    pub nodal: Vec<[f64; 2]>,
    /// In design coordinates, Pᵀ · nodal.
    pub design: Vec<f64>,
}

impl ShapeProblem {
    /// Sets up the problem with normalizers taken from the costs on `mesh`.
    /// A vanishing initial cost has nothing to normalize against and gets
    /// normalizer 1.
    pub fn new(
        mesh: &Mesh,
        props: FluidProps,
        inflow: InflowSpec,
        model: Model,
        cfg: FunctionalConfig,
        lambda: [f64; 3],
    ) -> Result<Self> {
        let mut p = Self::with_normalizers(mesh, props, inflow, model, cfg, lambda, [1.0; 3])?;
        let costs = p.evaluate(mesh, None)?.costs;
        for (i, c) in costs.iter().enumerate() {
            if *c > 0.0 && c.is_finite() {
                p.normalizers[i] = *c;
            } else {
                warn!("initial J{} = {c}; using normalizer 1", i + 1);
            }
        }
        Ok(p)
    }

    pub fn with_normalizers(
        mesh: &Mesh,
        props: FluidProps,
        inflow: InflowSpec,
        model: Model,
        cfg: FunctionalConfig,
        lambda: [f64; 3],
        normalizers: [f64; 3],
    ) -> Result<Self> {
        check_weights(lambda)?;
        crate::functionals::check_normalizers(normalizers)?;
        cfg.validate()?;
        Ok(Self {
            solver: FlowSolver::new(mesh, props, inflow, model)?,
            cfg,
            lambda,
            normalizers,
            design: DesignSpace::new(mesh)?,
        })
    }

    /// λ_i / N_i.
    pub fn weights(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.lambda[i] / self.normalizers[i])
    }

    pub fn context<'a>(&'a self, mesh: &'a Mesh) -> Result<FunctionalContext<'a>> {
        FunctionalContext::new(mesh, &self.solver.disc.space, &self.cfg, &self.solver.props, &self.solver.inflow)
    }

    /// Solves the state on `mesh` (warm-started from `warm`) and evaluates
    /// the costs.
    pub fn evaluate(&self, mesh: &Mesh, warm: Option<&[f64]>) -> Result<Evaluation> {
        self.evaluate_with(mesh, warm, self.solver.options)
    }

    pub fn evaluate_with(&self, mesh: &Mesh, warm: Option<&[f64]>, options: NewtonOptions) -> Result<Evaluation> {
        let state = self.solver.solve_with(mesh, warm, options)?;
        let costs = self.costs(mesh, &state.x)?;
        let w = self.weights();
        let value = (0..3).map(|i| w[i] * costs[i]).sum();
        Ok(Evaluation { state, costs, value })
    }

    pub fn costs(&self, mesh: &Mesh, x: &[f64]) -> Result<[f64; 3]> {
        eval_all(&self.context(mesh)?, x)
    }

    /// Adjoint gradient of the scalarized objective at a converged state.
    pub fn gradient(&self, mesh: &Mesh, state: &FlowState) -> Result<Gradient> {
        let ctx = self.context(mesh)?;
        let der = functional_derivatives(&ctx, &state.x, self.weights())?;
        let adj = solve_adjoint(&self.solver, mesh, state, &der.d_state)?;
        let nodal = shape_gradient(&self.solver, mesh, state, &adj, &der.d_coords)?;
        let design = self.design.restrict_transpose(&nodal);
        Ok(Gradient { nodal, design })
    }
}
