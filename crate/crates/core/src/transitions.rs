//! Transition system for building dependency graphs left to right.
//!
//! A state is ⟨i, j, Σ⟩: focus word i, head j assigned by the most recent
//! attachment (−1 right after a Move), and the arc set Σ built so far.
//! Attach-to-k adds arc k→i and requires j < k, so a word's heads are
//! assigned in strictly left-to-right order; Move advances the focus.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graph::{Arc, DependencyGraph, GraphError, Sentence};

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("illegal action {action} in state {state}: {reason}")]
    Illegal {
        action: String,
        state: String,
        reason: String,
    },
    #[error("replay failed at step {step}: {source}")]
    Replay {
        step: usize,
        #[source]
        source: Box<TransitionError>,
    },
    #[error("line {line}: cannot parse action {text:?}: {message}")]
    Parse {
        line: usize,
        text: String,
        message: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parser state ⟨i, j, Σ⟩ over a sentence of n words. `j` is `None` while
/// the focus word has received no head since the last Move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateConfig {
    pub n: usize,
    pub i: usize,
    pub j: Option<usize>,
    pub sigma: BTreeSet<(usize, usize)>,
}

impl StateConfig {
    pub fn initial(n: usize) -> StateConfig {
        StateConfig {
            n,
            i: 1,
            j: None,
            sigma: BTreeSet::new(),
        }
    }

    /// Final means the focus pointer has moved past the last word.
    pub fn is_final(&self) -> bool {
        self.i == self.n + 1 && self.j.is_none()
    }
}

impl fmt::Display for StateConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = self.j.map(|j| j as i64).unwrap_or(-1);
        write!(f, "<i={}, j={}, |sigma|={}>", self.i, j, self.sigma.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Move,
    AttachTo { k: usize, label: String },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move => f.write_str("MOVE"),
            Action::AttachTo { k, label } => write!(f, "ATTACH {k} {label}"),
        }
    }
}

/// Why an action is not legal in a state, or `None` when it is.
fn violation(state: &StateConfig, action: &Action) -> Option<String> {
    match action {
        Action::Move => {
            if state.i <= state.n {
                None
            } else {
                Some(format!("focus {} is already past the last word", state.i))
            }
        }
        Action::AttachTo { k, .. } => {
            if state.i > state.n {
                return Some("no focus word left to attach".into());
            }
            if *k > state.n {
                return Some(format!("head {k} out of range 0..={}", state.n));
            }
            if *k == state.i {
                return Some(format!("head {k} equals the focus word"));
            }
            if state.sigma.contains(&(*k, state.i)) {
                return Some(format!("arc {k}->{} already exists", state.i));
            }
            if let Some(j) = state.j {
                if *k <= j {
                    return Some(format!("head {k} not right of last assigned head {j}"));
                }
            }
            None
        }
    }
}

pub fn legal(state: &StateConfig, action: &Action) -> bool {
    violation(state, action).is_none()
}

pub fn apply(state: &StateConfig, action: &Action) -> Result<StateConfig, TransitionError> {
    if let Some(reason) = violation(state, action) {
        return Err(TransitionError::Illegal {
            action: action.to_string(),
            state: state.to_string(),
            reason,
        });
    }
    let mut next = state.clone();
    match action {
        Action::Move => {
            next.i += 1;
            next.j = None;
        }
        Action::AttachTo { k, .. } => {
            next.j = Some(*k);
            next.sigma.insert((*k, state.i));
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransitionSequence {
    pub actions: Vec<Action>,
    pub trace: Option<Vec<StateConfig>>,
}

impl TransitionSequence {
    pub fn new(actions: Vec<Action>) -> TransitionSequence {
        TransitionSequence {
            actions,
            trace: None,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Replays the actions, storing every intermediate state (one more than
    /// there are actions).
    pub fn compute_trace(&mut self, n: usize) -> Result<(), TransitionError> {
        let mut states = vec![StateConfig::initial(n)];
        for (t, action) in self.actions.iter().enumerate() {
            let next =
                apply(states.last().expect("non-empty"), action).map_err(|e| {
                    TransitionError::Replay {
                        step: t + 1,
                        source: Box::new(e),
                    }
                })?;
            states.push(next);
        }
        self.trace = Some(states);
        Ok(())
    }

    /// One action per line: `MOVE` or `ATTACH <k> <label>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for action in &self.actions {
            out.push_str(&action.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<TransitionSequence, TransitionError> {
        let mut actions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: &str| TransitionError::Parse {
                line: lineno + 1,
                text: line.to_string(),
                message: message.to_string(),
            };
            if line == "MOVE" {
                actions.push(Action::Move);
            } else if let Some(rest) = line.strip_prefix("ATTACH ") {
                let mut parts = rest.splitn(2, ' ');
                let k = parts
                    .next()
                    .ok_or_else(|| parse_err("missing head index"))?
                    .parse::<usize>()
                    .map_err(|_| parse_err("head index is not a number"))?;
                let label = parts
                    .next()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| parse_err("missing label"))?;
                actions.push(Action::AttachTo {
                    k,
                    label: label.to_string(),
                });
            } else {
                return Err(parse_err("expected MOVE or ATTACH <k> <label>"));
            }
        }
        Ok(TransitionSequence::new(actions))
    }
}

/// Static oracle: for each focus word in order, attach to each of its heads
/// from left to right, then move. Sequence length is n plus the number of
/// arc objects.
pub fn oracle(graph: &DependencyGraph) -> TransitionSequence {
    let n = graph.sentence.len();
    let mut actions = Vec::with_capacity(n + graph.arc_count());
    for i in 1..=n {
        for arc in graph.heads_of(i) {
            actions.push(Action::AttachTo {
                k: arc.head,
                label: arc.label.clone(),
            });
        }
        actions.push(Action::Move);
    }
    TransitionSequence::new(actions)
}

/// Result of replaying a sequence: the labeled arcs of Σ and the state the
/// replay ended in.
#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub arcs: Vec<Arc>,
    pub final_state: StateConfig,
}

impl ReplayOutcome {
    pub fn reached_final(&self) -> bool {
        self.final_state.is_final()
    }
}

/// Folds `apply` over the actions from the initial state, failing on the
/// first illegal action. Labels are taken from the attach actions.
pub fn replay(n: usize, seq: &TransitionSequence) -> Result<ReplayOutcome, TransitionError> {
    let mut state = StateConfig::initial(n);
    let mut arcs = Vec::new();
    for (t, action) in seq.actions.iter().enumerate() {
        let focus = state.i;
        state = apply(&state, action).map_err(|e| TransitionError::Replay {
            step: t + 1,
            source: Box::new(e),
        })?;
        if let Action::AttachTo { k, label } = action {
            arcs.push(Arc::new(*k, focus, label.clone())?);
        }
    }
    arcs.sort_by_key(|a| (a.head, a.dependent));
    Ok(ReplayOutcome {
        arcs,
        final_state: state,
    })
}

/// Replay into a full dependency graph over `sentence`.
pub fn replay_graph(
    sentence: &Sentence,
    seq: &TransitionSequence,
) -> Result<DependencyGraph, TransitionError> {
    let outcome = replay(sentence.len(), seq)?;
    let mut graph = DependencyGraph::new(sentence.clone());
    for arc in outcome.arcs {
        graph.add_arc(arc)?;
    }
    Ok(graph)
}

/// Per-sentence (n, sequence length) pairs plus the corpus-level ratio of
/// arc objects to tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStats {
    pub per_sentence: Vec<(usize, usize)>,
    pub arcs_per_token: f64,
}

pub fn transition_stats<'a>(
    corpus: impl IntoIterator<Item = &'a DependencyGraph>,
) -> TransitionStats {
    let mut per_sentence = Vec::new();
    let mut total_tokens = 0usize;
    let mut total_arcs = 0usize;
    for graph in corpus {
        let n = graph.sentence.len();
        let arcs = graph.arc_count();
        per_sentence.push((n, n + arcs));
        total_tokens += n;
        total_arcs += arcs;
    }
    let arcs_per_token = if total_tokens == 0 {
        0.0
    } else {
        total_arcs as f64 / total_tokens as f64
    };
    TransitionStats {
        per_sentence,
        arcs_per_token,
    }
}
