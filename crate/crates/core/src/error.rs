use thiserror::Error;

/// Errors raised by the numerical kernels, the data generator and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("SVD did not converge after {sweeps} sweeps on a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize, sweeps: usize },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(&'static str),

    #[error("cannot draw {m} distinct indices out of {n}")]
    InvalidSampleSize { m: usize, n: usize },

    #[error("signal has zero sample variance; noise level cannot be calibrated")]
    DegenerateSignal,

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("objective became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("estimation failed: {0}")]
    EstimationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
