use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("node {node} has no neighbours; isolated nodes must be handled by the caller")]
    IsolatedNode { node: usize },

    #[error("row {row} has zero total weight; use epsilon > 0")]
    ZeroWeightRow { row: usize },

    #[error("chain is reducible: state {to} is unreachable from state {from}")]
    Reducible { from: usize, to: usize },

    #[error("chain is periodic (period {period})")]
    Periodic { period: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no coalescence within {n_max} steps")]
    NotCoalesced { n_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
