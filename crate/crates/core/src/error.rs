use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("concentration {value} outside [0, 1]{}", location(*line))]
    Range { value: f64, line: Option<usize> },

    #[error("timestamp {timestamp} is not midnight UTC{}", location(*line))]
    Timestamp { timestamp: String, line: Option<usize> },

    #[error("integrity conflict for point {point_id} at {date}: {existing} vs {incoming}")]
    IntegrityConflict {
        point_id: u32,
        date: String,
        existing: f64,
        incoming: f64,
    },

    #[error("corrupt store file {}, line {line}: {reason}", file.display())]
    Corruption {
        file: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("store at {} is locked by another writer", .0.display())]
    Locked(PathBuf),

    #[error("fetch failed: {0}")]
    Fetch(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("no fitted model for point {0}")]
    MissingModel(u32),

    #[error("invalid path: {0}")]
    Path(String),

    #[error("no route from {start} to {goal}")]
    Unreachable { start: u32, goal: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Broad failure families, used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Model,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::DegenerateModel(_)
            | Error::InsufficientData(_)
            | Error::Model(_)
            | Error::MissingModel(_) => ErrorKind::Model,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

fn location(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}
