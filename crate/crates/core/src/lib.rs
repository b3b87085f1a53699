pub mod ad;
pub mod error;
pub mod exec;
pub mod fem;
pub mod functionals;
pub mod geometry;
pub mod mco;
pub mod pipeline;
pub mod shape_opt;
pub mod validation;

pub use error::{Error, Result};
