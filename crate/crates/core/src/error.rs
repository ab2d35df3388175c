use std::fmt;

use thiserror::Error;

use crate::time::Timestamp;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("indicator {indicator}: timestamp {at} precedes previous entry {previous}")]
    Ordering {
        indicator: String,
        previous: Timestamp,
        at: Timestamp,
    },

    #[error("indicator {indicator}: duplicate timestamp {at}")]
    DuplicateTimestamp { indicator: String, at: Timestamp },

    #[error("grid start {grid_start} precedes first observation {first} of {indicator} (no back-fill)")]
    NoBackfill {
        indicator: String,
        grid_start: Timestamp,
        first: Timestamp,
    },

    #[error("unknown indicators: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("training diverged at epoch {epoch}; last finite epoch {last_finite_epoch} had mse {last_finite_mse}")]
    Diverged {
        epoch: usize,
        last_finite_epoch: usize,
        last_finite_mse: f64,
    },

    #[error("no rule fires")]
    NoRuleFires,

    #[error("non-finite premise gradient at rule {rule}, input {input}")]
    NonFiniteGradient { rule: usize, input: usize },

    #[error("insufficient rejects to fit: {0} (need at least 2)")]
    InsufficientRejects(u64),

    #[error("parameter layout mismatch: expected {expected} values, got {actual}")]
    LayoutMismatch { expected: usize, actual: usize },

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("missing artifact {path}; run `{subcommand}` first")]
    MissingArtifact { path: String, subcommand: &'static str },

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidArgument(msg.to_string())
    }
}
