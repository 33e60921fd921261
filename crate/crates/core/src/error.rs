use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dangling reference to unknown {kind} id {id:?}")]
    DanglingReference { kind: &'static str, id: String },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown lexicon {0:?}")]
    UnknownLexicon(String),

    #[error("empty vocabulary: {0}")]
    EmptyVocabulary(String),

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::UnknownLexicon(_) => ErrorClass::Usage,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DanglingReference { .. }
            | Error::InvalidRecord(_)
            | Error::InvalidInput(_)
            | Error::EmptyVocabulary(_)
            | Error::SingleClass
            | Error::Csv(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::DimensionMismatch { .. } => ErrorClass::Internal,
            Error::Stage { source, .. } => source.class(),
        }
    }
}
