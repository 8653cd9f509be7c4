//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model families, samplers, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector had the wrong length for the operation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A class label was outside `0..num_classes`.
    #[error("class label {label} out of range for {num_classes} classes")]
    ClassOutOfRange { label: usize, num_classes: usize },

    /// A parameter point was used with a family it does not belong to.
    #[error("parameter point belongs to family `{point}`, expected `{family}`")]
    FamilyMismatch { point: String, family: String },

    /// A parameter point contained a non-finite coordinate.
    #[error("parameter point contains a non-finite coordinate at index {index}")]
    NonFiniteParameter { index: usize },

    /// A feature vector contained a missing marker where full observations are required.
    #[error("missing feature value where fully observed data is required ({context})")]
    UnexpectedMissing { context: String },

    /// The marginal probability of the covariates was zero, so the class
    /// conditional is undefined.
    #[error("zero covariate margin: class conditional is undefined{}", match .observation { Some(i) => format!(" at observation {i}"), None => String::new() })]
    ZeroMargin { observation: Option<usize> },

    /// The family does not implement the requested operation.
    #[error("family `{family}` does not support {operation}")]
    Unsupported {
        family: String,
        operation: &'static str,
    },

    /// An invalid configuration value or combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// No finite-density starting point was found when initializing a chain.
    #[error("chain initialization failed: no finite-density prior draw in {attempts} attempts")]
    InitializationFailed { attempts: usize },

    /// An error raised while running a specific chain.
    #[error("chain {index} failed: {source}")]
    Chain {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Malformed input data (CSV, bag-of-words file, config file).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
