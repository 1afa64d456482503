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

    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: schema violation in field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },

    #[error("line {line}: duplicate video_id `{video_id}`")]
    DuplicateId { line: usize, video_id: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no modality probability present")]
    NoModality,

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
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

    /// True for errors caused by bad input data or configuration rather than
    /// by model fitting or evaluation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Schema { .. }
                | Error::DuplicateId { .. }
                | Error::Config(_)
        )
    }
}
