use thiserror::Error;

use crate::topology::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trace parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid trace for node {node}: {message}")]
    Validation { node: NodeId, message: String },

    #[error("{what} out of range: {message}")]
    Range { what: &'static str, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("no usable link ({from}, {to}) in snapshot")]
    MissingLink { from: NodeId, to: NodeId },

    #[error("path inconsistent with snapshot: {0}")]
    Consistency(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
