use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one entry (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is rank deficient: rank {rank} < {dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("sequence is empty")]
    EmptySequence,

    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },

    #[error("neighbor notion {0} requires a non-empty candidate pool")]
    EmptyPool(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("csv {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
