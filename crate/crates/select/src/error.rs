use std::path::PathBuf;

use thiserror::Error;

use crate::usc::UscError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid field `{field}`: {message}")]
    Schema { line: usize, field: String, message: String },
    #[error("line {line}: responses[{response}].embedding has norm {norm}, expected 1 within 1e-6")]
    EmbeddingNorm { line: usize, response: usize, norm: f64 },
    #[error("suffix file line {line}: {message}")]
    SuffixFormat { line: usize, message: String },
    #[error("report: {0}")]
    Report(String),
    #[error("question `{question_id}`: missing embeddings (responses {missing:?})")]
    MissingEmbeddings { question_id: String, missing: Vec<usize> },
    #[error("question `{question_id}`: {source}")]
    Method {
        question_id: String,
        #[source]
        source: consensus_core::Error,
    },
    #[error("question `{question_id}`: {source}")]
    Judge {
        question_id: String,
        #[source]
        source: UscError,
    },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 2 usage, 3 data, 4 method.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Schema { .. }
            | Error::EmbeddingNorm { .. }
            | Error::SuffixFormat { .. }
            | Error::Report(_) => 3,
            Error::MissingEmbeddings { .. } | Error::Method { .. } | Error::Judge { .. } => 4,
        }
    }
}
