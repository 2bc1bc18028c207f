//! Greedy and beam-search decoding. Hypotheses are scored by summed
//! pointer log-probabilities; labels are chosen greedily per attachment
//! and do not enter the search score.

use ndarray::Array1;

use crate::graph::{DependencyGraph, Sentence};
use crate::nn::biaffine::CandidateCache;
use crate::transitions::{apply, legal, replay_graph, Action, StateConfig, TransitionSequence};

use super::network::{select_action_with, EncoderState, ParserNetwork, PointerChoice};
use super::ModelError;

pub struct ParseOutcome {
    pub graph: DependencyGraph,
    pub sequence: TransitionSequence,
}

impl ParseOutcome {
    /// Empirical transition count, for workload reporting.
    pub fn transition_count(&self) -> usize {
        self.sequence.len()
    }
}

/// Loose upper bound on decoded sequence length for a sentence of n tokens.
pub fn worst_case_transitions(n: usize) -> usize {
    n + n * (n + 1)
}

fn argmax_over(probs: &Array1<f64>, ids: impl Iterator<Item = usize>) -> usize {
    let mut best = usize::MAX;
    let mut best_p = f64::NEG_INFINITY;
    for id in ids {
        if probs[id] > best_p {
            best_p = probs[id];
            best = id;
        }
    }
    best
}

fn choose_label(
    net: &ParserNetwork,
    d: &Array1<f64>,
    enc: &EncoderState,
    k: usize,
    root_ids: &[usize],
) -> String {
    let probs = net.label_probs(d, enc, k);
    let id = if k == 0 {
        argmax_over(&probs, root_ids.iter().copied())
    } else {
        argmax_over(&probs, 0..probs.len())
    };
    net.vocab.label(id).to_string()
}

pub fn parse(
    net: &ParserNetwork,
    sentence: &Sentence,
    external: Option<&[Vec<f64>]>,
    beam: usize,
) -> Result<ParseOutcome, ModelError> {
    let n = sentence.len();
    if n == 0 {
        return Ok(ParseOutcome {
            graph: DependencyGraph::new(sentence.clone()),
            sequence: TransitionSequence::new(Vec::new()),
        });
    }
    let enc = net.encode_sentence(sentence, external)?;
    let cands = net.candidates(&enc);
    let root_ids = net.root_label_ids();
    let actions = if beam <= 1 {
        greedy(net, &enc, &cands, &root_ids, n)?
    } else {
        beam_search(net, &enc, &cands, &root_ids, n, beam)?
    };
    let sequence = TransitionSequence::new(actions);
    let graph = replay_graph(sentence, &sequence)?;
    Ok(ParseOutcome { graph, sequence })
}

fn greedy(
    net: &ParserNetwork,
    enc: &EncoderState,
    cands: &CandidateCache,
    root_ids: &[usize],
    n: usize,
) -> Result<Vec<Action>, ModelError> {
    let mut state = StateConfig::initial(n);
    let mut carry = net.initial_carry();
    let mut actions = Vec::new();
    while !state.is_final() {
        let (d, next_carry) = net.decoder_step(enc, &state, &carry);
        carry = next_carry;
        let probs = net.pointer_probs(&d, cands);
        let choice = select_action_with(&probs, &state, |k| k != 0 || !root_ids.is_empty());
        let action = match choice {
            PointerChoice::Move => Action::Move,
            PointerChoice::Attach(k) => Action::AttachTo {
                k,
                label: choose_label(net, &d, enc, k, root_ids),
            },
        };
        state = apply(&state, &action)?;
        actions.push(action);
    }
    Ok(actions)
}

struct Hypothesis {
    state: StateConfig,
    carry: (Array1<f64>, Array1<f64>),
    score: f64,
    actions: Vec<Action>,
}

/// Candidate extension: (parent index, pointer position, action, score).
/// Move is encoded with the focus position, so ordering by position is
/// total and deterministic.
struct Extension {
    parent: usize,
    position: usize,
    action: Option<Action>,
    score: f64,
}

fn beam_search(
    net: &ParserNetwork,
    enc: &EncoderState,
    cands: &CandidateCache,
    root_ids: &[usize],
    n: usize,
    beam: usize,
) -> Result<Vec<Action>, ModelError> {
    let mut hyps = vec![Hypothesis {
        state: StateConfig::initial(n),
        carry: net.initial_carry(),
        score: 0.0,
        actions: Vec::new(),
    }];
    while hyps.iter().any(|h| !h.state.is_final()) {
        let mut extensions: Vec<Extension> = Vec::new();
        let mut carries: Vec<Option<(Array1<f64>, Array1<f64>)>> = Vec::new();
        for (parent, hyp) in hyps.iter().enumerate() {
            if hyp.state.is_final() {
                carries.push(None);
                extensions.push(Extension {
                    parent,
                    position: 0,
                    action: None,
                    score: hyp.score,
                });
                continue;
            }
            let (d, next_carry) = net.decoder_step(enc, &hyp.state, &hyp.carry);
            let probs = net.pointer_probs(&d, cands);
            let logp = probs.mapv(|p| p.max(f64::MIN_POSITIVE).ln());
            extensions.push(Extension {
                parent,
                position: hyp.state.i,
                action: Some(Action::Move),
                score: hyp.score + logp[hyp.state.i],
            });
            for k in 0..=n {
                if k == hyp.state.i || (k == 0 && root_ids.is_empty()) {
                    continue;
                }
                let probe = Action::AttachTo {
                    k,
                    label: String::new(),
                };
                if !legal(&hyp.state, &probe) {
                    continue;
                }
                extensions.push(Extension {
                    parent,
                    position: k,
                    action: Some(Action::AttachTo {
                        k,
                        label: choose_label(net, &d, enc, k, root_ids),
                    }),
                    score: hyp.score + logp[k],
                });
            }
            carries.push(Some(next_carry));
        }
        extensions.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.parent.cmp(&b.parent))
                .then_with(|| a.position.cmp(&b.position))
        });
        extensions.truncate(beam);
        let mut next: Vec<Hypothesis> = Vec::with_capacity(extensions.len());
        for ext in extensions {
            let parent = &hyps[ext.parent];
            match ext.action {
                None => next.push(Hypothesis {
                    state: parent.state.clone(),
                    carry: parent.carry.clone(),
                    score: parent.score,
                    actions: parent.actions.clone(),
                }),
                Some(action) => {
                    let state = apply(&parent.state, &action)?;
                    let carry = carries[ext.parent]
                        .clone()
                        .expect("expanded parent has a carry");
                    let mut actions = parent.actions.clone();
                    actions.push(action);
                    next.push(Hypothesis {
                        state,
                        carry,
                        score: ext.score,
                        actions,
                    });
                }
            }
        }
        hyps = next;
    }
    let best = hyps
        .into_iter()
        .max_by(|a, b| a.score.total_cmp(&b.score))
        .expect("beam never empties");
    Ok(best.actions)
}
