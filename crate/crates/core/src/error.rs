use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A hypothesis of a bound or estimate is not met (typically a threshold on `m`).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two operands live on different groups.
    #[error("level mismatch: {0}")]
    LevelMismatch(String),

    /// A quantity that is exact in theory came out of floating point outside tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
