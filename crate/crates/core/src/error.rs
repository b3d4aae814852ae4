use thiserror::Error;

/// Errors raised by the library. Validation problems and numeric failures
/// are kept apart so front ends can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: u128, cap: u128 },
    #[error("pole proximity: {0}")]
    Pole(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Validation(_) | Error::DimensionCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
