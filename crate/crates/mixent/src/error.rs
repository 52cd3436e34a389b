use thiserror::Error;

/// Errors produced by estimation, resampling, and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    /// A mixture component lost effectively all weighted mass or its
    /// covariance degenerated below the regularization floor.
    #[error("mixture component collapsed during EM")]
    Collapsed,

    #[error("all EM initializations failed: {0}")]
    AllInitsFailed(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no sign change over bracket ({lo}, {hi}); calibration target unreachable")]
    NoBracket { lo: f64, hi: f64 },

    #[error("bootstrap failed: {0}")]
    Bootstrap(String),

    #[error("model serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: &'static str, requirement: &'static str, value: f64) -> Self {
        Error::Domain {
            what,
            requirement,
            value,
        }
    }
}
