use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("source and destination are both node {0}")]
    SameEndpoints(usize),
    #[error("unknown band {0}")]
    UnknownBand(String),
    #[error("no route {route} between {src} and {dst}")]
    UnknownRoute { src: usize, dst: usize, route: usize },
    #[error("channel {channel} already occupied on link {link}")]
    DoubleAllocation { link: usize, channel: usize },
    #[error("unknown lightpath {0}")]
    UnknownLightpath(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bisection did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("action {action} out of range (action space has {size} entries)")]
    ActionOutOfRange { action: usize, size: usize },
    #[error("episode already finished")]
    EpisodeDone,
    #[error("episode log is empty")]
    EmptyLog,
    #[error("experience buffer holds {len} of {capacity} samples")]
    BufferNotFull { len: usize, capacity: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Topology(_)
                | Error::Config(_)
                | Error::UnknownBand(_)
                | Error::InvalidArgument(_)
        ) || matches!(self, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}
