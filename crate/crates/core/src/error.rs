use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },

    #[error("unsnappable location ({x}, {y}): no street within {max_snap} m")]
    Unsnappable { x: f64, y: f64, max_snap: f64 },

    #[error("empty index")]
    EmptyIndex,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("clique enumeration aborted after {limit} cliques")]
    CliqueLimit { limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("clock went backwards: step({now}) after step({last})")]
    NonMonotonicClock { last: i64, now: i64 },

    #[error("user {user} stranded on terminal {terminal}: no outgoing streets")]
    Stranded { user: u64, terminal: u64 },
}

impl Error {
    /// True for errors caused by bad input or settings rather than by a failure
    /// while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidMap(_)
                | Error::DuplicateId { .. }
                | Error::Config(_)
                | Error::Unsnappable { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
