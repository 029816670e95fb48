use std::io;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has no arcs")]
    EmptyGraph,

    #[error("node {0} has no admissible outgoing arc")]
    NoAdmissibleArc(NodeId),

    #[error("value outside its domain: {0}")]
    Domain(String),

    #[error("update requested but no best walk exists yet")]
    NoBestWalk,

    #[error("no cycle count up to 2^62 satisfies the bound")]
    Unsatisfiable,

    #[error("result overflows the cycle counter: {0}")]
    Overflow(String),

    #[error("node {0} cannot reach the target")]
    UnreachableTarget(NodeId),

    #[error("bad weight: {0}")]
    BadWeight(String),

    #[error("graph contains a cycle through node {0}")]
    CycleDetected(NodeId),

    #[error("series truncation at {0} terms did not converge")]
    TailNotConverged(usize),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
