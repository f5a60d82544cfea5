use thiserror::Error;

/// Errors produced by model construction, evaluation and fitting.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A special function or kernel was called outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates one of its invariants.
    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParameter { param: String, reason: String },

    /// The assembled covariance failed the randomized nonnegative-definiteness check.
    #[error("model is not nonnegative definite: min eigenvalue {min_eigenvalue:.3e} below tolerance {tolerance:.3e} (trial {trial}, n = {n})")]
    NotNonnegativeDefinite {
        min_eigenvalue: f64,
        tolerance: f64,
        trial: usize,
        n: usize,
    },

    #[error("variable index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    /// Cholesky factorization failed even at the largest jitter level.
    #[error("matrix is not positive definite: pivot {pivot} non-positive after jitter {jitter:.3e}")]
    Factorization { pivot: usize, jitter: f64 },

    #[error("asymmetric shifts require a stationary base model")]
    NonStationaryBase,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("stage {stage} failed: {source}")]
    Stage { stage: usize, source: Box<Error> },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(param: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            param: param.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            found,
        }
    }

    /// True for errors caused by invalid model parameters (as opposed to
    /// numerical or data problems).
    pub fn is_invalid_model(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::NotNonnegativeDefinite { .. }
            | Error::NonStationaryBase
            | Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_invalid_model(),
            _ => false,
        }
    }

    /// True for numerical failures (factorization, optimizer).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Factorization { .. } | Error::Estimation(_) => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
