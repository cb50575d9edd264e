use thiserror::Error;

/// Errors raised by set oracles, projectors and iteration drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("kernel domain violation: {0}")]
    Domain(String),

    #[error("the set provides no normal-cone oracle")]
    Unsupported,

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error(
        "no step in (0, 1] reaches the regularized set (residual at anchor {anchor_residual:e})"
    )]
    NoBoundaryCrossing { anchor_residual: f64 },

    #[error(
        "newton iteration did not converge after {iterations} steps (kkt residual {residual:e})"
    )]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("exact projection onto a regularized set is undefined at level zero")]
    ZeroLevel,

    #[error("iterate {k} violates the nonexpansion condition ({gap:e} > {previous:e})")]
    NonexpansionViolated { k: usize, gap: f64, previous: f64 },

    #[error(
        "approximation failure at iterate {k}: normal-cone residual {gamma:e} exceeds {limit:e}"
    )]
    ApproximationFailure { k: usize, gamma: f64, limit: f64 },

    #[error("approximation failure at iterate {k}: the gap stalled at {gap:e}, so the sets do not meet near the iterates")]
    ApproximationStalled { k: usize, gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("too few records for rate measurement: {0}")]
    TooFewRecords(usize),

    #[error("nonconvergent tail: {0}")]
    NonconvergentTail(String),

    #[error("rate hypothesis violated: gamma {gamma} >= sqrt(1 - c^2) = {limit}")]
    RateHypothesis { gamma: f64, limit: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
