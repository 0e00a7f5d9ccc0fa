use cvarloc_milp::MilpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("oracle refused input beyond its budget: {0}")]
    BudgetExceeded(String),
    #[error("indicator undefined: {0}")]
    UndefinedIndicator(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
