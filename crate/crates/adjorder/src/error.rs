//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by parsing, lookup, and modeling operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in a text input (CoNLL-U, embedding table, pairs file).
    #[error("{kind} parse error at line {line}: {msg}")]
    Parse {
        kind: &'static str,
        line: usize,
        msg: String,
    },

    /// Vector or embedding dimensionality does not match expectations.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    /// A word has no entry in the relevant embedding table.
    #[error("out-of-vocabulary word: {0:?}")]
    OutOfVocabulary(String),

    /// No embedding table was loaded for a language.
    #[error("no embedding table for language {0:?}")]
    MissingTable(String),

    /// A latent class index outside `[0, num_classes)`.
    #[error("class index {index} out of range for {num_classes} classes")]
    ClassIndex { index: usize, num_classes: usize },

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    Config(String),

    /// A split request that cannot be satisfied by the corpus.
    #[error("invalid split: {0}")]
    Split(String),

    /// An operation that requires non-empty input received none.
    #[error("empty input: {0}")]
    Empty(String),

    /// Paired vectors of different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A side too short for permutation scoring.
    #[error("side of length {0} has no ordering to score (need >= 2)")]
    SideTooShort(usize),

    /// Malformed or incompatible model file.
    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
