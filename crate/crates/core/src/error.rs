use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("document id must be non-empty")]
    EmptyDocId,

    #[error("document `{0}` has neither title nor abstract text")]
    EmptyDocument(String),

    #[error("collection is empty; no document statistics available")]
    EmptyCollection,

    #[error("empty text after preprocessing")]
    EmptyText,

    #[error("unknown document `{0}`")]
    UnknownDoc(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("out-of-vocabulary term `{0}`")]
    OutOfVocabulary(String),

    #[error("no embeddable tokens")]
    NoEmbeddableTokens,

    #[error(
        "unbalanced transport problem: source mass {source_mass} vs target mass {target_mass}"
    )]
    Unbalanced { source_mass: f64, target_mass: f64 },

    #[error("expected uniform term weights")]
    NonUniformWeights,

    #[error("no preference pairs in training data")]
    NoPreferencePairs,

    #[error("non-finite feature value in instance (query `{query_id}`, document `{doc_id}`)")]
    NonFiniteFeature { query_id: String, doc_id: String },

    #[error("feature schema mismatch: model expects [{expected}], got [{found}]")]
    SchemaMismatch { expected: String, found: String },

    #[error("full-text clicks recorded for document `{0}` without a full-text link")]
    FullTextWithoutLink(String),

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("index encoding: {0}")]
    Encoding(#[from] bincode::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
