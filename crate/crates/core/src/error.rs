use thiserror::Error;

/// Failures raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ambiguous ground state: {0}")]
    AmbiguousGroundState(String),

    #[error("block structure not found: {0}")]
    StructureNotFound(String),

    #[error("truncation too large: {0}")]
    TruncationTooLarge(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors that come from the structure of the numbers rather than
    /// from malformed input.
    pub fn is_numerical_structure(&self) -> bool {
        matches!(
            self,
            Error::AmbiguousGroundState(_) | Error::StructureNotFound(_) | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
