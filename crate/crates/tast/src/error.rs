use thiserror::Error;

/// Errors produced by the code construction, QR and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid code parameters: {0}")]
    InvalidParams(String),

    #[error("expected {expected} information symbols, got {actual}")]
    Encode { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    Refused { size: u128, limit: u128 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
