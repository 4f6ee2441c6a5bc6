use std::time::Duration;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller supplied something that violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model backend failed (transport, HTTP status, missing credentials).
    #[error("backend error: {0}")]
    Backend(String),

    /// A model backend answered, but the answer broke the reply contract.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("backend call timed out after {0:?}")]
    Timeout(Duration),

    /// Backend failure while describing a specific waypoint.
    #[error("waypoint {id}: {source}")]
    Waypoint {
        id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Errors the regulator is allowed to retry once.
    pub fn is_retryable(&self) -> bool {
        match self {
            Error::Protocol(_) | Error::Timeout(_) => true,
            Error::Waypoint { source, .. } => source.is_retryable(),
            _ => false,
        }
    }
}
