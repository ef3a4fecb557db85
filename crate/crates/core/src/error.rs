use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("pole: {0}")]
    Pole(String),

    #[error("ill-conditioned evaluation: {0}")]
    IllConditioned(String),

    #[error("inadmissible model parameters: {0}")]
    Inadmissible(String),

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("blow-up: {0}")]
    BlowUp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
