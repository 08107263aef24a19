use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must contain at least two strictly increasing nodes: {0}")]
    InvalidGrid(String),

    #[error("value/node length mismatch: {values} values for {nodes} nodes")]
    LengthMismatch { values: usize, nodes: usize },

    #[error("non-finite value at node index {index}")]
    NonFinite { index: usize },

    #[error("function must be nonnegative for this operation (node index {index})")]
    NegativeValue { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("exponential overflow in cell [{lo}, {hi}]: exponent {exponent}")]
    Overflow { lo: f64, hi: f64, exponent: f64 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("ill-conditioned evaluation point x = {x}: {reason}")]
    IllConditionedPoint { x: f64, reason: String },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
