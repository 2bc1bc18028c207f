//! Structured sentiment analysis as transition-based dependency parsing.
//!
//! The pipeline: sentiment graphs (opinion tuples over token spans) are
//! encoded as bi-lexical dependency graphs, those graphs are linearized into
//! transition sequences by a static oracle, and a pointer-network parser is
//! trained to reproduce the sequences. Decoding runs the parser, replays the
//! predicted actions into a dependency graph and decodes that back into
//! opinion tuples.

pub mod codec;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod transitions;

pub use codec::{decode, encode, node_head, CodecError, EncodingStrategy, Recovery};
pub use graph::{
    atomic_labels, label_vocabulary, Arc, DependencyGraph, GraphError, Opinion, Polarity,
    Sentence, SentimentGraph, Span, Token, ATOMIC_LABELS,
};
pub use io::{
    read_dependency_corpus, read_embeddings, read_sentiment_corpus, write_dependency_corpus,
    write_sentiment_corpus, CorpusRead, EmbeddingRead, EmbeddingTable, IoError,
};
pub use metrics::{
    dependency_f1, sentiment_graph_f1, span_f1, targeted_f1, MetricsError, PrF1, Role,
    ScoreReport,
};
pub use model::{
    corpus_f1s, corpus_lf1, load_model, parse, save_model, train, EpochStats, ModelError,
    NetworkConfig, ParseOutcome, ParserNetwork, TokenRepresentationConfig, TrainConfig,
    TrainOutcome, Vocab,
};
pub use transitions::{
    apply, legal, oracle, replay, replay_graph, transition_stats, Action, ReplayOutcome,
    StateConfig, TransitionError, TransitionSequence, TransitionStats,
};
