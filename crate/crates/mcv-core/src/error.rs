//! Error taxonomy shared by every module.
//!
//! Each variant names the precondition it reports so that CLI messages and
//! test assertions can match on the name directly.

use thiserror::Error;

/// Errors produced by moment estimation, the SPD kernels, whitening, the
/// metric evaluators, the axiom checks, and the simulations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McvError {
    /// A data value, mean entry, or covariance entry is NaN or infinite.
    #[error("NonFinite: non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// A column has zero variance, so correlations and whitening are
    /// undefined for it.
    #[error("DegenerateColumn: column {index} has zero variance")]
    DegenerateColumn { index: usize },

    /// Two operands disagree on dimension.
    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Weights are negative or do not sum to one within 1e-12.
    #[error("WeightSum: weights must be nonnegative and sum to 1 (sum = {sum})")]
    WeightSum { sum: f64 },

    /// A matrix required to be symmetric positive definite is not.
    #[error("NotPositiveDefinite: {context}")]
    NotPositiveDefinite { context: &'static str },

    /// The eigensolver did not reach its off-diagonal threshold.
    #[error("NoConvergence: eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    /// The mean vector (or scalar mean) is zero where a metric divides by it.
    #[error("ZeroMean: mean is zero; the metric is undefined")]
    ZeroMean,

    /// The quadratic form m^T Sigma^-1 m vanished.
    #[error("ZeroMeanForm: m^T Sigma^-1 m is zero; the metric is undefined")]
    ZeroMeanForm,

    /// A component of the whitened mean vanished.
    #[error("ZeroWhitenedMean: whitened mean component {index} is zero")]
    ZeroWhitenedMean { index: usize },

    /// A component coefficient of variation is zero where its reciprocal is
    /// needed.
    #[error("ZeroCV: component coefficient of variation {index} is zero")]
    ZeroCv { index: usize },

    /// A rising-tide direction has negative inner product c^T Sigma^-1 m.
    #[error("InvalidDirection: c^T Sigma^-1 m = {inner} < 0")]
    InvalidDirection { inner: f64 },

    /// A marginal sequence whose coefficient of variation does not settle.
    #[error("NonConvergentSpec: marginal CV sequence does not converge ({detail})")]
    NonConvergentSpec { detail: String },

    /// Malformed input data (CSV or JSON) with a human-readable reason.
    #[error("InvalidInput: {0}")]
    InvalidInput(String),

    /// Filesystem or stream failure while reading or writing.
    #[error("Io: {0}")]
    Io(String),

    /// Syntactically invalid CSV or JSON.
    #[error("Parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for McvError {
    fn from(e: std::io::Error) -> McvError {
        McvError::Io(e.to_string())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, McvError>;
