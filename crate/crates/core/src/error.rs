use thiserror::Error;

/// Errors produced by graph construction, I/O, and the optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("negative or non-finite weight {weight} on edge ({u}, {v})")]
    BadWeight { u: usize, v: usize, weight: f64 },

    #[error("group index {group} out of range for node {node} (expected < {num_groups})")]
    GroupOutOfRange {
        node: usize,
        group: usize,
        num_groups: usize,
    },

    #[error("node {node} is referenced by an edge but has no group label")]
    MissingGroup { node: usize },

    #[error("graph has no edge weight; the objective is undefined")]
    EmptyGraph,

    #[error("need at least two demographic groups, found {0}")]
    TooFewGroups(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partition level mismatch: {0}")]
    LevelMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
