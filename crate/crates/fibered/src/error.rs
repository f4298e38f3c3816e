//! Crate-wide error type.

/// Errors produced by grid construction, field operations, solvers and
/// diagnostics. Variants carry enough context to be actionable from a
/// batch run log.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample value {value} at {coords:?}")]
    NonFiniteSample { coords: Vec<f64>, value: f64 },

    #[error("derivative mode error: {0}")]
    Mode(String),

    #[error("degenerate gradient: |eta| = {magnitude:.3e} below threshold {threshold:.3e}")]
    DegenerateGradient { magnitude: f64, threshold: f64 },

    #[error("matrix asymmetry {0:.3e} exceeds tolerance")]
    Asymmetric(f64),

    #[error("access to node {0} outside the active mask")]
    MaskedNode(usize),

    #[error("solver step failure after {iterations} iterations (residual {residual:.3e}): {message}")]
    StepFailure {
        iterations: usize,
        residual: f64,
        message: String,
    },

    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
