use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition of an operation was violated.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// Enumeration stopped after generating more polymers than allowed.
    #[error("enumeration budget of {limit} polymers exceeded")]
    BudgetExceeded { limit: u64 },

    /// The Fourier denominator `1 - z D(k)` is not positive somewhere on the grid.
    #[error("walk is not subcritical on the grid: 1 - z*D(k) = {value:e} at k-index {index}")]
    NotSubcritical { index: usize, value: f64 },

    #[error("series truncation unreliable: {0}")]
    Truncation(String),

    #[error("invalid polymer: {0}")]
    InvalidPolymer(String),

    #[error("overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
