//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by corpus construction, ingestion, generation and scoring.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box {coords:?}: {reason}{}", fmt_ctx(.doc_id))]
    InvalidBox {
        coords: [i64; 4],
        reason: String,
        doc_id: Option<String>,
    },

    #[error("union of an empty box list: no relevant sentence matched")]
    EmptyUnion,

    #[error("document {doc_id}: {reason}")]
    Document { doc_id: String, reason: String },

    #[error("table error in {doc_id}: {reason}")]
    Table { doc_id: String, reason: String },

    #[error("insufficient stream {stream_index} ({name}): need {need}, have {have}")]
    InsufficientStream {
        stream_index: usize,
        name: String,
        need: usize,
        have: usize,
    },

    #[error("ratio/stream mismatch: {0}")]
    RatioMismatch(String),

    #[error("template {template}: unresolved placeholder {{{placeholder}}}")]
    UnresolvedPlaceholder { template: String, placeholder: String },

    #[error("template {0} not found")]
    TemplateNotFound(String),

    #[error("generation client: {0}")]
    Client(String),

    #[error("generation client: authentication rejected: {0}")]
    ClientAuth(String),

    #[error("generation client: response of {got} bytes exceeds cap of {cap}")]
    ResponseTooLarge { got: usize, cap: usize },

    #[error("mock client has no canned response for prompt hash {0}")]
    MockMiss(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("ingest {path}: {reason}")]
    Ingest { path: String, reason: String },

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error at {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn fmt_ctx(doc_id: &Option<String>) -> String {
    match doc_id {
        Some(id) => format!(" (doc {id})"),
        None => String::new(),
    }
}

impl Error {
    /// Attach a document id to box errors raised below the record level.
    pub fn with_doc_id(self, doc_id: &str) -> Self {
        match self {
            Error::InvalidBox { coords, reason, .. } => Error::InvalidBox {
                coords,
                reason,
                doc_id: Some(doc_id.to_string()),
            },
            other => other,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
