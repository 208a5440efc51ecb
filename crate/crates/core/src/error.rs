use std::path::PathBuf;

use thiserror::Error;

use crate::allocation::SessionId;

/// Everything that can go wrong inside the allocator, the simulator or the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("invalid census: {0}")]
    InvalidCensus(String),

    #[error(
        "infeasible capacity: {sessions} sessions need at least {required_bps} bit/s but only {capacity_bps} bit/s is available"
    )]
    InfeasibleCapacity {
        sessions: usize,
        required_bps: f64,
        capacity_bps: f64,
    },

    #[error("census has no users")]
    ZeroAudience,

    #[error("invalid layer profile: {0}")]
    InvalidProfile(String),

    #[error(
        "base layer ({base_bps} bit/s) does not fit session {session} allocated {rate_bps} bit/s"
    )]
    ProfileInfeasible {
        session: SessionId,
        base_bps: f64,
        rate_bps: f64,
    },

    #[error("session {0} has no users to remove")]
    EmptySession(SessionId),

    #[error("session {0} already exists")]
    DuplicateSession(SessionId),

    #[error("unknown session {0}")]
    UnknownSession(SessionId),

    #[error("event {index} at t={time} precedes previous event at t={previous}")]
    TraceOrder {
        index: usize,
        time: f64,
        previous: f64,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InfeasibleCapacity { .. } | Error::ProfileInfeasible { .. } => 2,
            Error::Io { .. } => 4,
            Error::Internal(_) => 1,
            _ => 3,
        }
    }
}
