//! Taylor–Hood (P2/P1) discretization of the steady incompressible flow
//! model with linear drag, Newton solver and direct linear algebra.

pub mod assembly;
pub mod bc;
pub mod export;
pub mod kernels;
pub mod newton;
pub mod quadrature;
pub mod space;
pub mod sparse;

pub use assembly::Discretization;
pub use bc::{Dirichlet, InflowSpec};
pub use newton::{element_coeffs, FlowSolver, FlowState, FluidProps, Model, NewtonOptions};
pub use space::Space;
pub use sparse::{sparse_solve, CsrMatrix, LuFactor};
