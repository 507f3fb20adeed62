use thiserror::Error;

/// Errors raised by graph construction, simulation and the exact solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown edge {{{0}, {1}}}")]
    UnknownEdge(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A transition was driven with a depinking coin when none was due, or
    /// without one when it was. Always a harness bug.
    #[error("depinking coin mismatch: {0}")]
    CoinMismatch(String),

    #[error("state space exceeds cap: more than {cap} states")]
    CapExceeded { cap: usize },

    #[error("target set unreachable from state {0}")]
    Unreachable(usize),

    #[error("chain is reducible")]
    Reducible,

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
