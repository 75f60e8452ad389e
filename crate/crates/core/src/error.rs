use std::path::PathBuf;

use crate::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error("not enough {label} examples: need {needed}, have {available} (short by {})", needed - available)]
    InsufficientClass {
        label: Label,
        needed: usize,
        available: usize,
    },

    #[error("span {start}..={end} out of bounds for {len} tokens")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },

    #[error("empty text after vocabulary filtering")]
    EmptyVector,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Tags with `stage` unless an inner stage already did.
    pub fn or_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            e => e.in_stage(stage),
        }
    }

    /// True for errors caused by the run configuration rather than the data.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
