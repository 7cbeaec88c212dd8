use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid sizes must be at least 4 and have no prime factor above 5.
    #[error("grid size {0} is not supported: need N >= 4 of the form 2^a 3^b 5^c")]
    GridSize(usize),

    #[error("{what} {value} is not a multiple of 1/{n}; choose N divisible by its denominator")]
    NotGridAligned {
        what: &'static str,
        value: f64,
        n: usize,
    },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fit refused: {0}")]
    RefusedFit(String),

    #[error("non-finite result in {0}")]
    NonFinite(String),

    #[error("computation cancelled")]
    Cancelled,
}

impl Error {
    /// Whether the error is a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RefusedFit(_) | Error::NonFinite(_) | Error::Cancelled
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
