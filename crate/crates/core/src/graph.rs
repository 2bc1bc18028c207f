//! Domain types shared by the whole pipeline: tokenized sentences, sentiment
//! graphs (opinion tuples over token spans) and the bi-lexical dependency
//! graphs they are encoded into.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by constructors and label handling in this module.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("token {index}: {message}")]
    InvalidToken { index: usize, message: String },
    #[error("sentence {sent_id}: {message}")]
    InvalidSentence { sent_id: String, message: String },
    #[error("span is empty")]
    EmptySpan,
    #[error("span index {index} out of range 1..={len}")]
    SpanOutOfRange { index: usize, len: usize },
    #[error("malformed arc label {label:?}: empty segment")]
    MalformedLabel { label: String },
    #[error("arc {head}->{dependent}: {message}")]
    InvalidArc {
        head: usize,
        dependent: usize,
        message: String,
    },
    #[error("duplicate arc for pair ({head}, {dependent})")]
    DuplicateArc { head: usize, dependent: usize },
    #[error("root arc 0->{dependent} carries non-expression label {label:?}")]
    NonExpressionRootLabel { dependent: usize, label: String },
}

/// Sentiment polarity of an opinion expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    /// The dependency label used for expression arcs of this polarity.
    pub fn exp_label(self) -> &'static str {
        match self {
            Polarity::Positive => "exp:pos",
            Polarity::Negative => "exp:neg",
            Polarity::Neutral => "exp:neu",
        }
    }

    /// Inverse of [`Polarity::exp_label`].
    pub fn from_exp_label(label: &str) -> Option<Polarity> {
        match label {
            "exp:pos" => Some(Polarity::Positive),
            "exp:neg" => Some(Polarity::Negative),
            "exp:neu" => Some(Polarity::Neutral),
            _ => None,
        }
    }

    /// Parses corpus polarity strings, case-insensitively.
    pub fn parse(s: &str) -> Option<Polarity> {
        match s.to_ascii_lowercase().as_str() {
            "positive" | "pos" => Some(Polarity::Positive),
            "negative" | "neg" => Some(Polarity::Negative),
            "neutral" | "neu" => Some(Polarity::Neutral),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "Positive",
            Polarity::Negative => "Negative",
            Polarity::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One input token. `index` is 1-based; index 0 is the implicit artificial
/// root and is never stored as a `Token`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub char_begin: usize,
    pub char_end: usize,
    /// Syntactic head from an external parser; 0 means syntactic root.
    pub syn_head: Option<usize>,
}

impl Token {
    fn validate(&self, n: usize) -> Result<(), GraphError> {
        if self.index < 1 {
            return Err(GraphError::InvalidToken {
                index: self.index,
                message: "index must be >= 1".into(),
            });
        }
        if self.char_begin >= self.char_end {
            return Err(GraphError::InvalidToken {
                index: self.index,
                message: format!(
                    "char span {}..{} is empty or reversed",
                    self.char_begin, self.char_end
                ),
            });
        }
        if let Some(h) = self.syn_head {
            if h > n || h == self.index {
                return Err(GraphError::InvalidToken {
                    index: self.index,
                    message: format!("syn_head {h} out of range or self-referential"),
                });
            }
        }
        Ok(())
    }
}

/// A tokenized sentence. Token indices are contiguous 1..n and character
/// spans are strictly increasing and non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: String,
    pub text: String,
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(
        sent_id: impl Into<String>,
        text: impl Into<String>,
        tokens: Vec<Token>,
    ) -> Result<Sentence, GraphError> {
        let sent_id = sent_id.into();
        let text = text.into();
        let n = tokens.len();
        for (pos, tok) in tokens.iter().enumerate() {
            tok.validate(n)?;
            if tok.index != pos + 1 {
                return Err(GraphError::InvalidSentence {
                    sent_id,
                    message: format!(
                        "token indices must be contiguous: expected {} found {}",
                        pos + 1,
                        tok.index
                    ),
                });
            }
            if pos > 0 && tokens[pos - 1].char_end > tok.char_begin {
                return Err(GraphError::InvalidSentence {
                    sent_id,
                    message: format!(
                        "overlapping or unsorted char spans at tokens {} and {}",
                        pos,
                        pos + 1
                    ),
                });
            }
        }
        Ok(Sentence {
            sent_id,
            text,
            tokens,
        })
    }

    /// Number of tokens, excluding the implicit artificial root.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Token at a 1-based index.
    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }
}

/// A set of token indices, possibly discontiguous.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    indices: BTreeSet<usize>,
}

impl Span {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Span, GraphError> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if indices.is_empty() {
            return Err(GraphError::EmptySpan);
        }
        if indices.contains(&0) {
            return Err(GraphError::SpanOutOfRange { index: 0, len: 0 });
        }
        Ok(Span { indices })
    }

    pub fn singleton(index: usize) -> Span {
        Span {
            indices: BTreeSet::from([index]),
        }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    pub fn first(&self) -> usize {
        *self.indices.iter().next().expect("span is non-empty")
    }

    pub fn last(&self) -> usize {
        *self.indices.iter().next_back().expect("span is non-empty")
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.indices
    }

    fn check_bounds(&self, sentence: &Sentence) -> Result<(), GraphError> {
        let n = sentence.len();
        for idx in self.iter() {
            if idx < 1 || idx > n {
                return Err(GraphError::SpanOutOfRange { index: idx, len: n });
            }
        }
        Ok(())
    }

    /// Character ranges covered by this span: one `(begin, end)` pair per
    /// maximal run of consecutive token indices, spanning from the first
    /// token's begin to the last token's end of the run.
    pub fn char_ranges(&self, sentence: &Sentence) -> Vec<(usize, usize)> {
        let mut ranges = Vec::new();
        let mut run_start: Option<usize> = None;
        let mut prev: Option<usize> = None;
        for idx in self.iter() {
            match prev {
                Some(p) if idx == p + 1 => {}
                _ => {
                    if let (Some(start), Some(p)) = (run_start, prev) {
                        ranges.push((
                            sentence.token(start).char_begin,
                            sentence.token(p).char_end,
                        ));
                    }
                    run_start = Some(idx);
                }
            }
            prev = Some(idx);
        }
        if let (Some(start), Some(p)) = (run_start, prev) {
            ranges.push((
                sentence.token(start).char_begin,
                sentence.token(p).char_end,
            ));
        }
        ranges
    }
}

/// One opinion tuple: expression span with polarity plus optional holder and
/// target argument spans.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Opinion {
    pub holder: Option<Span>,
    pub target: Option<Span>,
    pub expression: Span,
    pub polarity: Polarity,
}

/// A sentence together with all opinions annotated on it. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentGraph {
    pub sentence: Sentence,
    pub opinions: Vec<Opinion>,
}

impl SentimentGraph {
    pub fn new(sentence: Sentence, opinions: Vec<Opinion>) -> Result<SentimentGraph, GraphError> {
        for op in &opinions {
            op.expression.check_bounds(&sentence)?;
            if let Some(h) = &op.holder {
                h.check_bounds(&sentence)?;
            }
            if let Some(t) = &op.target {
                t.check_bounds(&sentence)?;
            }
        }
        Ok(SentimentGraph { sentence, opinions })
    }

    /// Opinions in a canonical order, for structural comparison.
    pub fn canonicalized(&self) -> SentimentGraph {
        let mut g = self.clone();
        g.opinions.sort();
        g
    }
}

/// Atomic labels an arc may carry, before collapsing.
pub const ATOMIC_LABELS: [&str; 5] = ["holder", "target", "exp:pos", "exp:neg", "exp:neu"];

/// Splits a possibly collapsed label into its atomic segments.
///
/// The label of a multiplicity-k arc is the `#`-join of k atomic labels, so
/// the returned vector has one entry per collapsed arc, in order.
pub fn atomic_labels(label: &str) -> Result<Vec<&str>, GraphError> {
    if label.is_empty() {
        return Err(GraphError::MalformedLabel {
            label: label.to_string(),
        });
    }
    let parts: Vec<&str> = label.split('#').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(GraphError::MalformedLabel {
            label: label.to_string(),
        });
    }
    Ok(parts)
}

fn is_expression_label(atomic: &str) -> bool {
    Polarity::from_exp_label(atomic).is_some()
}

/// A labeled dependency arc. Arcs that coincide on `(head, dependent)` are
/// collapsed into one `Arc` whose label joins the atomic labels with `#`;
/// the multiplicity is the number of joined segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub head: usize,
    pub dependent: usize,
    pub label: String,
}

impl Arc {
    pub fn new(
        head: usize,
        dependent: usize,
        label: impl Into<String>,
    ) -> Result<Arc, GraphError> {
        let label = label.into();
        if head == dependent {
            return Err(GraphError::InvalidArc {
                head,
                dependent,
                message: "head and dependent coincide".into(),
            });
        }
        if dependent == 0 {
            return Err(GraphError::InvalidArc {
                head,
                dependent,
                message: "the artificial root cannot be a dependent".into(),
            });
        }
        atomic_labels(&label)?;
        Ok(Arc {
            head,
            dependent,
            label,
        })
    }

    /// Number of collapsed arcs this object stands for.
    pub fn multiplicity(&self) -> usize {
        self.label.split('#').count()
    }

    pub fn atomic_labels(&self) -> Result<Vec<&str>, GraphError> {
        atomic_labels(&self.label)
    }
}

/// Set of labeled arcs over token indices `0..=n` (0 is the artificial
/// root), keyed by `(head, dependent)` so the collapsing invariant holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub sentence: Sentence,
    arcs: BTreeMap<(usize, usize), Arc>,
}

impl DependencyGraph {
    pub fn new(sentence: Sentence) -> DependencyGraph {
        DependencyGraph {
            sentence,
            arcs: BTreeMap::new(),
        }
    }

    /// Inserts a whole (possibly collapsed) arc. Fails if the pair is
    /// already present or the indices are out of range.
    pub fn add_arc(&mut self, arc: Arc) -> Result<(), GraphError> {
        let n = self.sentence.len();
        if arc.head > n {
            return Err(GraphError::InvalidArc {
                head: arc.head,
                dependent: arc.dependent,
                message: format!("head out of range 0..={n}"),
            });
        }
        if arc.dependent < 1 || arc.dependent > n {
            return Err(GraphError::InvalidArc {
                head: arc.head,
                dependent: arc.dependent,
                message: format!("dependent out of range 1..={n}"),
            });
        }
        match self.arcs.entry((arc.head, arc.dependent)) {
            std::collections::btree_map::Entry::Occupied(_) => Err(GraphError::DuplicateArc {
                head: arc.head,
                dependent: arc.dependent,
            }),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(arc);
                Ok(())
            }
        }
    }

    /// Adds one atomic arc, collapsing onto an existing `(head, dependent)`
    /// arc by `#`-joining labels.
    pub fn add_atomic(&mut self, head: usize, dependent: usize, atomic: &str) -> Result<(), GraphError> {
        if atomic.is_empty() || atomic.contains('#') {
            return Err(GraphError::MalformedLabel {
                label: atomic.to_string(),
            });
        }
        if let Some(existing) = self.arcs.get_mut(&(head, dependent)) {
            existing.label.push('#');
            existing.label.push_str(atomic);
            Ok(())
        } else {
            let arc = Arc::new(head, dependent, atomic)?;
            self.add_arc(arc)
        }
    }

    pub fn arc(&self, head: usize, dependent: usize) -> Option<&Arc> {
        self.arcs.get(&(head, dependent))
    }

    /// All arcs, ordered by `(head, dependent)`.
    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.values()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Heads assigned to `dependent`, in increasing head order.
    pub fn heads_of(&self, dependent: usize) -> Vec<&Arc> {
        self.arcs
            .range((0, dependent)..=(self.sentence.len(), dependent))
            .filter(|((_, d), _)| *d == dependent)
            .map(|(_, a)| a)
            .collect()
    }

    /// Checks that every dependent of the artificial root carries only
    /// expression labels.
    pub fn validate_root_labels(&self) -> Result<(), GraphError> {
        for arc in self.arcs.values() {
            if arc.head == 0 {
                for atomic in arc.atomic_labels()? {
                    if !is_expression_label(atomic) {
                        return Err(GraphError::NonExpressionRootLabel {
                            dependent: arc.dependent,
                            label: atomic.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Collects the set of (collapsed) arc labels over a corpus, in lexicographic
/// order. Collapsed labels are distinct entries because the labeler predicts
/// whole arc labels.
pub fn label_vocabulary<'a>(corpus: impl IntoIterator<Item = &'a DependencyGraph>) -> Vec<String> {
    let mut labels = BTreeSet::new();
    for graph in corpus {
        for arc in graph.arcs() {
            labels.insert(arc.label.clone());
        }
    }
    labels.into_iter().collect()
}
