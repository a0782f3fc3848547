use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },

    #[error("block index {index} out of range for a partition with {blocks} blocks")]
    BlockOutOfRange { index: usize, blocks: usize },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("problem does not support {0}")]
    Unsupported(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("no convergence after {iterations} iterations (best estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("divergence at k={k}: f = {value:e} exceeds guard {threshold:e}")]
    Divergence { k: usize, value: f64, threshold: f64 },

    #[error(
        "Lyapunov value {xi:e} at k={k} is negative beyond tolerance; reference minimum is inconsistent"
    )]
    InconsistentMinimum { k: usize, xi: f64 },

    #[error("trace has {len} usable records, at least {required} required")]
    InsufficientTrace { len: usize, required: usize },

    #[error("trace records are not consecutive at k={k}")]
    NonConsecutive { k: usize },

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("replicates disagree: {0}")]
    MismatchedReplicates(String),

    #[error("parameters outside the convergence region: {0}")]
    OutOfBounds(String),

    #[error("node {node}: {reason}")]
    Message { node: usize, reason: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
