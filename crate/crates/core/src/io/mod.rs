//! Corpus and artifact files: sentiment JSON, tabular dependency corpora,
//! and text embedding tables. All formats are UTF-8; character offsets
//! count Unicode scalar values.

mod dep;
mod embeddings;
mod json;

use thiserror::Error;

pub use dep::{read_dependency_corpus, write_dependency_corpus};
pub use embeddings::{read_embeddings, EmbeddingRead, EmbeddingTable};
pub use json::{
    read_sentiment_corpus, write_sentiment_corpus, CorpusRead, OpinionRecord, SentimentJsonRecord,
    TokenRecord,
};

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record {sent_id:?}: {message}")]
    Record { sent_id: String, message: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
