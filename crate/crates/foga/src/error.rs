//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog parse error: {0}")]
    CatalogParse(String),

    #[error("duplicate flag name: {0}")]
    DuplicateFlag(String),

    #[error("unknown flag name: {0}")]
    UnknownFlag(String),

    #[error("genome length {got} does not match catalog flag count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("invalid runtime model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("baseline evaluation failed: {0}")]
    BaselineFailure(String),

    #[error("document parse error: {0}")]
    DocumentParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
