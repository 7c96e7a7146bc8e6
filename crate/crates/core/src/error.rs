use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("noise variance must be positive, got {0}")]
    NonPositiveNoiseVariance(f64),

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid equalizer configuration: {0}")]
    InvalidEqualizer(String),

    #[error("brute-force posterior limited to L*K <= {limit} bits, got {requested}")]
    BruteForceTooLarge { limit: usize, requested: usize },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
