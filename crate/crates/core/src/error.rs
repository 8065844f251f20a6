use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("separation distance undefined for a single point")]
    SingletonSeparation,

    #[error("coordinate {value} lies outside [-1, 1]")]
    OutOfBox { value: f64 },

    #[error("duplicate points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),

    #[error("unsupported Bessel order {0}")]
    UnsupportedOrder(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("problem `{0}` has no exact solution")]
    MissingExactSolution(String),

    #[error("weights require a tensor grid: {0}")]
    NotATensorGrid(String),

    #[error("point generation failed: {0}")]
    Generation(String),

    #[error("iterative solver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("not enough usable records for a rate fit ({0})")]
    InsufficientData(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
