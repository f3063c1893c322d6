use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation orders differ: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("constant term {0} is not a unit; the inverse would have non-integer coefficients")]
    NonUnitConstant(String),

    #[error("malformed product factor: {0}")]
    MalformedFactor(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid precision: {0}")]
    InvalidPrecision(String),

    #[error("invalid series data: {0}")]
    InvalidSeries(String),

    #[error("{what}: size {size} exceeds the limit {limit}")]
    GuardExceeded {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("tolerance {requested:e} unreachable: best achieved bound {achieved:e}")]
    ToleranceUnreachable { requested: f64, achieved: f64 },

    #[error("root finder did not converge (k = {k}, z = {z}): max scaled residual {residual:e}")]
    RootNonConvergence { k: usize, z: f64, residual: f64 },

    #[error("eigenvalue labels swapped between grid points {index} and {}", index + 1)]
    LabelSwap { index: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
