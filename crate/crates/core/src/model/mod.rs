//! Pointer-style neural parser: token representation, bidirectional
//! recurrent encoder, decoder with biaffine pointer attention, arc
//! labeler, joint training, beam decoding, and checkpointing.

pub mod checkpoint;
pub mod config;
pub mod decode;
pub mod network;
pub mod train;
pub mod vocab;

use thiserror::Error;

pub use checkpoint::{load_model, save_model};
pub use config::{NetworkConfig, TokenRepresentationConfig, TrainConfig};
pub use decode::{parse, worst_case_transitions, ParseOutcome};
pub use network::{
    select_action, select_action_with, EncoderState, LossBreakdown, ParserNetwork, PointerChoice,
};
pub use train::{corpus_f1s, corpus_lf1, train, EpochStats, TrainOutcome};
pub use vocab::Vocab;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("label {label:?} is not in the label vocabulary")]
    UnknownLabel { label: String },
    #[error("external vectors: expected {expected} rows, got {got}")]
    ExternalRows { expected: usize, got: usize },
    #[error("external vector {index} has dimension {got}, expected {expected}")]
    ExternalDim {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("non-finite loss at epoch {epoch}, sentence {sent_id:?}: {value}")]
    NonFiniteLoss {
        epoch: usize,
        sent_id: String,
        value: f64,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Transition(#[from] crate::transitions::TransitionError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}
