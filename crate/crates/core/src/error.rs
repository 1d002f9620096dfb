use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite density {value} at x={x:?}, u={u}, p={p:?}")]
    NonFinite {
        value: f64,
        x: Vec<f64>,
        u: f64,
        p: Vec<f64>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("grid too small: axis {axis} has {len} nodes, the stencil needs at least 3")]
    GridTooSmall { axis: usize, len: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids differ; fields must share axes, spacing and origin")]
    GridMismatch,

    #[error("slope mismatch: ordering is undefined between fields of slopes {left} and {right}")]
    SlopeMismatch { left: String, right: String },

    #[error("region is empty")]
    EmptyRegion,

    #[error("energy diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    Unknown {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("lattice: {0}")]
    Lattice(String),

    #[error("invariant extraction failed: {reason}")]
    Extraction {
        reason: String,
        witnesses: Vec<Vec<i64>>,
    },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
