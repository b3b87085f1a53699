use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid flow-field parameters: {0}")]
    Geometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("deformation rejected: element {element} has signed area {area:.3e}")]
    InvertedElement { element: usize, area: f64 },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular matrix (zero pivot at row {pivot})")]
    Singular { pivot: usize },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("Newton solver failed after {iterations} iterations: {reason} (residual history {history:?})")]
    NewtonFailed {
        iterations: usize,
        reason: String,
        history: Vec<f64>,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("stagnant channel {channel}: mean axial velocity is zero")]
    StagnantChannel { channel: usize },

    #[error("optimization aborted: {0}")]
    Optimization(String),

    #[error("pareto run aborted: {0}")]
    Pareto(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
