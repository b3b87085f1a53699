use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::assembly::Discretization;
use super::bc::{Dirichlet, InflowSpec};
use super::kernels::ElemCoeffs;
use super::sparse::{norm, CsrMatrix, LuFactor};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, LABEL_POROUS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Fluid-only planar model with out-of-plane drag.
    Planar,
    /// Planar model plus a porous strip with Darcy drag μ/K.
    Brinkman,
}

/// Fluid properties. Defaults: water at 80 °C.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidProps {
    /// Density [kg/m³].
    pub rho: f64,
    /// Dynamic viscosity [Pa·s].
    pub mu: f64,
    /// Effective viscosity inside the porous strip [Pa·s]; `None` uses `mu`.
    #[serde(default)]
    pub mu_eff: Option<f64>,
    /// Permeability of the porous strip [m²].
    pub permeability: f64,
    /// Out-of-plane drag coefficient γ [Pa·s/m²]; `None` derives 12μ/h² from
    /// the mesh depth, or 0 when the mesh has none.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Multiplier on the convective term.
    #[serde(default = "one")]
    pub convective_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for FluidProps {
    fn default() -> Self {
        Self {
            rho: 971.79,
            mu: 3.547e-4,
            mu_eff: None,
            permeability: 1e-11,
            gamma: None,
            convective_scale: 1.0,
        }
    }
}

impl FluidProps {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.rho) && pos(self.mu)) {
            return Err(Error::Config("rho and mu must be strictly positive".into()));
        }
        if let Some(m) = self.mu_eff {
            if !pos(m) {
                return Err(Error::Config("mu_eff must be strictly positive".into()));
            }
        }
        if !(self.permeability > 0.0) {
            return Err(Error::Config("permeability must be strictly positive".into()));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Config("gamma must be non-negative".into()));
            }
        }
        if !(self.convective_scale.is_finite() && self.convective_scale >= 0.0) {
            return Err(Error::Config("convective_scale must be non-negative".into()));
        }
        Ok(())
    }

    /// Drag coefficient of the fluid region on `mesh`.
    pub fn gamma_for(&self, mesh: &Mesh) -> f64 {
        match (self.gamma, mesh.depth_h) {
            (Some(g), _) => g,
            (None, Some(h)) => 12.0 * self.mu / (h * h),
            (None, None) => 0.0,
        }
    }
}

/// Per-element coefficients; `rho_factor` scales the convective term during
/// continuation.
pub fn element_coeffs(mesh: &Mesh, props: &FluidProps, model: Model, rho_factor: f64) -> Result<Vec<ElemCoeffs>> {
    let gamma = props.gamma_for(mesh);
    let rho = props.rho * props.convective_scale * rho_factor;
    let mu_eff = props.mu_eff.unwrap_or(props.mu);
    mesh.labels
        .iter()
        .enumerate()
        .map(|(t, &l)| match (model, l) {
            (_, l) if l >= 0 => Ok(ElemCoeffs {
                rho,
                mu: props.mu,
                sigma: gamma,
            }),
            (Model::Brinkman, LABEL_POROUS) => Ok(ElemCoeffs {
                rho,
                mu: mu_eff,
                sigma: mu_eff / props.permeability,
            }),
            (Model::Planar, LABEL_POROUS) => Err(Error::Assembly(format!(
                "element {t} is porous but the planar model has no porous region"
            ))),
            _ => Err(Error::Assembly(format!("element {t} has unknown subdomain label {l}"))),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonOptions {
    /// Relative tolerance on the residual norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    /// `[ux | uy | p]` in the layout of [`super::Space`].
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub converged: bool,
    pub continuation: bool,
    pub history: Vec<f64>,
}

/// Everything needed to solve the flow on one mesh connectivity.
pub struct FlowSolver {
    pub disc: Discretization,
    pub props: FluidProps,
    pub inflow: InflowSpec,
    pub model: Model,
    pub options: NewtonOptions,
}

impl FlowSolver {
    pub fn new(mesh: &Mesh, props: FluidProps, inflow: InflowSpec, model: Model) -> Result<Self> {
        props.validate()?;
        mesh.check()?;
        // surface label errors before any work is done
        element_coeffs(mesh, &props, model, 1.0)?;
        Ok(Self {
            disc: Discretization::new(mesh),
            props,
            inflow,
            model,
            options: NewtonOptions::default(),
        })
    }

    pub fn dirichlet(&self, mesh: &Mesh) -> Result<Dirichlet> {
        Dirichlet::new(mesh, &self.disc.space, &self.inflow, self.model == Model::Brinkman)
    }

    pub fn coeffs(&self, mesh: &Mesh) -> Result<Vec<ElemCoeffs>> {
        element_coeffs(mesh, &self.props, self.model, 1.0)
    }

    pub fn residual(&self, mesh: &Mesh, x: &[f64]) -> Result<Vec<f64>> {
        let bc = self.dirichlet(mesh)?;
        Ok(self.disc.residual(mesh, &self.coeffs(mesh)?, &bc, x))
    }

    pub fn jacobian(&self, mesh: &Mesh, x: &[f64]) -> Result<(CsrMatrix, Vec<f64>)> {
        let bc = self.dirichlet(mesh)?;
        Ok(self.disc.jacobian(mesh, &self.coeffs(mesh)?, &bc, x))
    }

    /// Newton's method from `initial` (or the lifted zero state). The
    /// reference norm is always that of the lifted zero state, so warm starts
    /// stop at the same absolute accuracy as cold ones. Falls back to a
    /// Stokes solve followed by a four-step density ramp when plain Newton
    /// fails.
    pub fn solve(&self, mesh: &Mesh, initial: Option<&[f64]>) -> Result<FlowState> {
        self.solve_with(mesh, initial, self.options)
    }

    /// [`solve`](Self::solve) with explicit Newton options.
    pub fn solve_with(&self, mesh: &Mesh, initial: Option<&[f64]>, options: NewtonOptions) -> Result<FlowState> {
        let bc = self.dirichlet(mesh)?;
        let lifted = bc.lift(self.disc.n_dofs());
        let full = element_coeffs(mesh, &self.props, self.model, 1.0)?;
        let r_ref = norm(&self.disc.residual(mesh, &full, &bc, &lifted));
        let start = match initial {
            Some(x0) => {
                if x0.len() != lifted.len() {
                    return Err(Error::Config("initial state has the wrong length".into()));
                }
                let mut x = x0.to_vec();
                bc.impose(&mut x);
                x
            }
            None => lifted.clone(),
        };
        if r_ref == 0.0 {
            return Ok(FlowState {
                x: lifted,
                residual_norm: 0.0,
                newton_iterations: 0,
                converged: true,
                continuation: false,
                history: vec![0.0],
            });
        }
        match self.newton(mesh, &full, &bc, start, r_ref, options) {
            Ok(s) => return Ok(s),
            Err(Error::NewtonFailed { history, .. }) => {
                warn!("plain Newton failed (history {history:?}); continuing in density");
            }
            Err(e) => return Err(e),
        }
        let mut x = lifted;
        let mut total = Vec::new();
        let mut iterations = 0;
        for step in 0..=4 {
            let coeffs = element_coeffs(mesh, &self.props, self.model, step as f64 / 4.0)?;
            let s = self.newton(mesh, &coeffs, &bc, x, r_ref, options)?;
            iterations += s.newton_iterations;
            total.extend(s.history);
            x = s.x;
            if step == 4 {
                return Ok(FlowState {
                    x,
                    residual_norm: s.residual_norm,
                    newton_iterations: iterations,
                    converged: true,
                    continuation: true,
                    history: total,
                });
            }
        }
        unreachable!()
    }

    fn newton(
        &self,
        mesh: &Mesh,
        coeffs: &[ElemCoeffs],
        bc: &Dirichlet,
        mut x: Vec<f64>,
        r_ref: f64,
        options: NewtonOptions,
    ) -> Result<FlowState> {
        let tol = options.tol * r_ref;
        let mut history = Vec::new();
        for it in 0..=options.max_iter {
            let (jac, r) = self.disc.jacobian(mesh, coeffs, bc, &x);
            let rn = norm(&r);
            history.push(rn / r_ref);
            debug!("newton {it}: relative residual {:.3e}", rn / r_ref);
            if !rn.is_finite() || rn > 1e6 * r_ref {
                break;
            }
            if rn <= tol {
                info!("newton converged in {it} iterations");
                return Ok(FlowState {
                    x,
                    residual_norm: rn,
                    newton_iterations: it,
                    converged: true,
                    continuation: false,
                    history,
                });
            }
            if it == options.max_iter {
                break;
            }
            let lu: LuFactor = self.disc.factor(&jac)?;
            let dx = lu.solve(&r)?;
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi -= d;
            }
        }
        Err(Error::NewtonFailed {
            iterations: history.len().saturating_sub(1),
            reason: "residual did not reach the tolerance".into(),
            history,
        })
    }
}
