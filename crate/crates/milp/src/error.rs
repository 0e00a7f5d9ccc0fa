use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{owner} references unknown variable index {var}")]
    UnknownVariable { owner: String, var: usize },
    #[error("lazy separator returned a row that the candidate does not violate: {0}")]
    NonViolatedCut(String),
}

pub type Result<T> = std::result::Result<T, MilpError>;
