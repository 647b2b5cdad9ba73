use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("line {line}: invalid document: {reason}")]
    InvalidDocument { line: usize, reason: String },

    #[error("line {line}: malformed {kind} line: {reason}")]
    Malformed {
        kind: &'static str,
        line: usize,
        reason: String,
    },

    #[error("duplicate entry for query {query_id}, document {doc_id}")]
    Duplicate { query_id: String, doc_id: String },

    #[error("query {query_id}: {reason}")]
    InvalidRanking { query_id: String, reason: String },

    #[error("cannot permute document {0}: it has fewer than two sentences")]
    NotPermutable(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("run and qrels share no query ids")]
    NoOverlappingQueries,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
