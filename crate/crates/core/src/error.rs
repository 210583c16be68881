use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("coordinate out of [0,1]: {0}")]
    CoordinateOutOfRange(String),

    #[error("invalid interval: lo > hi")]
    InvalidInterval,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("divisibility violated: {0}")]
    Divisibility(String),

    #[error("malformed point-set file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::ZeroDimension => "zero-dimension",
            Error::CoordinateOutOfRange(_) => "coordinate-out-of-range",
            Error::InvalidInterval => "invalid-interval",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Precondition(_) => "precondition",
            Error::ResourceLimit(_) => "resource-limit",
            Error::Divisibility(_) => "divisibility",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Internal(_) => "internal",
        }
    }
}
