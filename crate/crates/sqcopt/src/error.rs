use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid feasible set: {0}")]
    InvalidSet(String),
    #[error("unbounded set: {0}")]
    Unbounded(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("outside domain: {0}")]
    OutsideDomain(String),
    #[error("gradient not available for `{0}`")]
    MissingGradient(String),
    #[error("check inapplicable: {0}")]
    Inapplicable(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("guard abort: {0}")]
    GuardAbort(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
