use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the sampling, training and metric routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("node id {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("candidate set for node {0} is empty")]
    EmptyCandidateSet(usize),

    #[error("graph is not connected")]
    Disconnected,

    #[error("bottleneck construction degenerated: {0}")]
    DegenerateBottleneck(String),

    #[error("eigendecomposition did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("rank deficient: k = {k} exceeds {positive} positive eigenvalues")]
    RankDeficient { k: usize, positive: usize },

    #[error("all selection probabilities are zero")]
    ZeroProbability,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no valid (node, layer) pairs to average")]
    NoOverlapPairs,
}

pub type Result<T> = std::result::Result<T, Error>;
