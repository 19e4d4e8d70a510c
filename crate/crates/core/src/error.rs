use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("empty trace")]
    EmptyTrace,

    #[error("no traces")]
    NoTraces,

    #[error("invalid message: {0}")]
    InvalidMessage(String),

    #[error("role configuration: {0}")]
    Roles(String),

    #[error("initial message {0} does not occur in any trace")]
    MissingInitial(String),

    #[error("terminal message {0} does not occur in any trace")]
    MissingTerminal(String),

    #[error("path enumeration exceeded the cap of {cap} paths")]
    PathCapExceeded { cap: usize },

    #[error("invalid flow spec `{id}`: {reason}")]
    FlowSpec { id: String, reason: String },

    #[error("instances per flow must be positive")]
    NoInstances,

    #[error("no flows given")]
    NoFlows,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
