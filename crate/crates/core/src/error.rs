use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no edges after removing self-loops and duplicates")]
    EmptyGraph,

    #[error("node {node} out of range for a graph with {node_count} nodes")]
    InvalidNode { node: usize, node_count: usize },

    #[error("a node pair needs two distinct nodes, got ({0}, {0})")]
    SelfPair(usize),

    #[error("pair degree centrality needs at least two nodes")]
    SingletonGraph,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("candidate ({x}, {y}) is already an edge of the scoring graph")]
    ExistingEdge { x: usize, y: usize },

    #[error("AUC is undefined for an empty test set")]
    EmptyTestSet,

    #[error("no nonexistent node pairs left to compare against")]
    NoNonexistentPairs,

    #[error("precision cutoff L={requested} exceeds the {available} candidate pairs")]
    PrecisionCutoff { requested: usize, available: usize },

    #[error("unknown similarity index `{0}` (expected CN, AA, RA, LP, KATZ, TPSR3 or DCCLP)")]
    UnknownIndex(String),

    #[error("tuning failed: {0}")]
    Tuning(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: no edges found", path.display())]
    EmptyFile { path: PathBuf },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("checksum mismatch for dataset `{name}`: manifest has {expected}, file hashes to {actual}")]
    ChecksumMismatch {
        name: String,
        expected: String,
        actual: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
