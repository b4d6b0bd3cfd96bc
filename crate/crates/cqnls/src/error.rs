//! Error type shared by all solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("field does not satisfy the zero-boundary invariant")]
    BoundaryViolation,

    #[error("field length {got} does not match grid ({expected} nodes)")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("unsupported norm exponent p = {0} (supported: 2, 4, 6, 8)")]
    UnsupportedNorm(u32),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "linear solver did not converge after {iterations} iterations \
         (relative residual {residual:.3e})"
    )]
    LinearNoConvergence { iterations: usize, residual: f64 },

    #[error(
        "fixed-point iteration did not converge after {iterations} iterations \
         (relative change {residual:.3e})"
    )]
    FixedPointNoConvergence {
        iterations: usize,
        residual: f64,
        /// L2 norms of the successive iterates, for post-mortem inspection.
        history: Vec<f64>,
    },

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ground-state iteration failed: {0}")]
    NoGroundState(String),

    #[error("run aborted: {0}")]
    Aborted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
