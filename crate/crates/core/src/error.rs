use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("symbol {0} is not in the alphabet")]
    SymbolOutOfAlphabet(i64),
    #[error("point is not periodic with period {0:?}")]
    NotPeriodic(Vec<i64>),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("empty set")]
    EmptySet,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("mixed hull types")]
    MixedHulls,
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("irrational frequency requires convergents mode")]
    IrrationalFrequency,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
