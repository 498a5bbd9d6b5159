use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eigendecomposition did not converge")]
    ConvergenceFailure,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension {0} exceeds the cap of {cap}", cap = crate::matcore::DIM_CAP)]
    DimensionCap(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator is singular where an inverse is required")]
    SingularInput,

    #[error("hypothesis violated (minimum eigenvalue {0:e})")]
    HypothesisViolated(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::DimensionMismatch(..)
            | Error::DimensionCap(_)
            | Error::InvalidState(_)
            | Error::Domain(_)
            | Error::SingularInput
            | Error::HypothesisViolated(_) => 3,
            Error::ConvergenceFailure | Error::Numerical(_) => 4,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
