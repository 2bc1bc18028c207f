//! The parser network: per-token representations feed a stacked
//! bidirectional encoder; a unidirectional decoder consumes focus and
//! last-attachment vectors; a biaffine pointer scores candidate positions
//! and a biaffine labeler scores arc labels.

use ndarray::{concatenate, s, Array1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{atomic_labels, DependencyGraph, Polarity, Sentence};
use crate::nn::biaffine::{BiaffineLabeler, BiaffinePointer, CandidateCache};
use crate::nn::conv::{CharCnn, CharCnnCache};
use crate::nn::embedding::Embedding;
use crate::nn::lstm::{BiLstmEncoder, LstmCell, LstmStepCache};
use crate::nn::{dropout_mask, log_softmax_at, softmax, uniform, Param};
use crate::transitions::{apply, legal, Action, StateConfig, TransitionSequence};

use super::config::NetworkConfig;
use super::vocab::Vocab;
use super::ModelError;

/// c[0] is the learned root vector; c[1..=n] are token vectors.
pub struct EncoderState {
    pub c: Vec<Array1<f64>>,
}

impl EncoderState {
    pub fn n(&self) -> usize {
        self.c.len() - 1
    }
}

/// Pointer decision before labeling: advance the focus or attach it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointerChoice {
    Move,
    Attach(usize),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossBreakdown {
    pub pointer: f64,
    pub label: f64,
    pub steps: usize,
    pub attach_steps: usize,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.pointer + self.label
    }

    pub fn add(&mut self, other: &LossBreakdown) {
        self.pointer += other.pointer;
        self.label += other.label;
        self.steps += other.steps;
        self.attach_steps += other.attach_steps;
    }
}

#[derive(Debug)]
pub(crate) struct TokenCache {
    word: usize,
    lemma: usize,
    pos: usize,
    conv: CharCnnCache,
    mask: Option<Array1<f64>>,
}

#[derive(Debug)]
pub struct ParserNetwork {
    pub config: NetworkConfig,
    pub vocab: Vocab,
    pub word_emb: Embedding,
    pub lemma_emb: Embedding,
    pub pos_emb: Embedding,
    pub char_cnn: CharCnn,
    pub root: Param,
    pub encoder: BiLstmEncoder,
    pub decoder: LstmCell,
    pub pointer: BiaffinePointer,
    pub labeler: BiaffineLabeler,
}

impl ParserNetwork {
    pub fn new(config: NetworkConfig, vocab: Vocab, seed: u64) -> Result<ParserNetwork, ModelError> {
        config.validate()?;
        if vocab.label_count() == 0 {
            return Err(ModelError::Config("label vocabulary is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = &config.repr;
        let enc_out = 2 * config.encoder_hidden;
        Ok(ParserNetwork {
            word_emb: Embedding::new("word_emb", vocab.word_count(), r.word_dim, &mut rng),
            lemma_emb: Embedding::new("lemma_emb", vocab.lemma_count(), r.lemma_dim, &mut rng),
            pos_emb: Embedding::new("pos_emb", vocab.pos_count(), r.pos_dim, &mut rng),
            char_cnn: CharCnn::new(
                "char_cnn",
                vocab.char_count(),
                r.char_dim,
                r.char_filters,
                r.char_window,
                &mut rng,
            ),
            root: uniform("root", 1, enc_out, 0.1, &mut rng),
            encoder: BiLstmEncoder::new(
                "encoder",
                r.total_dim(),
                config.encoder_hidden,
                config.encoder_layers,
                &mut rng,
            ),
            decoder: LstmCell::new("decoder", enc_out, config.decoder_hidden, &mut rng),
            pointer: BiaffinePointer::new(
                "pointer",
                config.decoder_hidden,
                enc_out,
                config.arc_dim,
                &mut rng,
            ),
            labeler: BiaffineLabeler::new(
                "labeler",
                config.decoder_hidden,
                enc_out,
                config.label_dim,
                vocab.label_count(),
                &mut rng,
            ),
            config,
            vocab,
        })
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut ps = self.word_emb.params();
        ps.extend(self.lemma_emb.params());
        ps.extend(self.pos_emb.params());
        ps.extend(self.char_cnn.params());
        ps.push(&self.root);
        ps.extend(self.encoder.params());
        ps.extend(self.decoder.params());
        ps.extend(self.pointer.params());
        ps.extend(self.labeler.params());
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = self.word_emb.params_mut();
        ps.extend(self.lemma_emb.params_mut());
        ps.extend(self.pos_emb.params_mut());
        ps.extend(self.char_cnn.params_mut());
        ps.push(&mut self.root);
        ps.extend(self.encoder.params_mut());
        ps.extend(self.decoder.params_mut());
        ps.extend(self.pointer.params_mut());
        ps.extend(self.labeler.params_mut());
        ps
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn check_external(
        &self,
        n: usize,
        external: Option<&[Vec<f64>]>,
    ) -> Result<(), ModelError> {
        match (self.config.repr.external_dim, external) {
            (None, None) => Ok(()),
            (None, Some(rows)) if rows.is_empty() && n == 0 => Ok(()),
            (None, Some(_)) => Err(ModelError::ExternalDim {
                index: 0,
                expected: 0,
                got: external.map(|r| r.first().map_or(0, Vec::len)).unwrap_or(0),
            }),
            (Some(_), None) => Err(ModelError::ExternalRows {
                expected: n,
                got: 0,
            }),
            (Some(dim), Some(rows)) => {
                if rows.len() != n {
                    return Err(ModelError::ExternalRows {
                        expected: n,
                        got: rows.len(),
                    });
                }
                for (idx, row) in rows.iter().enumerate() {
                    if row.len() != dim {
                        return Err(ModelError::ExternalDim {
                            index: idx,
                            expected: dim,
                            got: row.len(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// e_i = word + pos + lemma + char-conv (+ external), concatenated.
    /// With a dropout rng, one inverted mask per token is applied and
    /// cached for the backward pass.
    pub(crate) fn represent(
        &self,
        sentence: &Sentence,
        external: Option<&[Vec<f64>]>,
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<(Vec<Array1<f64>>, Vec<TokenCache>), ModelError> {
        self.check_external(sentence.len(), external)?;
        let mut reprs = Vec::with_capacity(sentence.len());
        let mut caches = Vec::with_capacity(sentence.len());
        let p = self.config.repr.dropout;
        for tok in sentence.tokens() {
            let word = self.vocab.word_id(&tok.form);
            let lemma = self.vocab.lemma_id(&tok.lemma);
            let pos = self.vocab.pos_id(&tok.upos);
            let (pooled, conv) = self.char_cnn.forward(&self.vocab.char_id_seq(&tok.form));
            let mut parts = vec![
                self.word_emb.forward(word),
                self.pos_emb.forward(pos),
                self.lemma_emb.forward(lemma),
                pooled,
            ];
            if let Some(rows) = external {
                parts.push(Array1::from(rows[tok.index - 1].clone()));
            }
            let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
            let mut e = concatenate(Axis(0), &views).expect("token parts are 1-d");
            let mask = match dropout.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let m = dropout_mask(e.len(), p, rng);
                    e = &e * &m;
                    Some(m)
                }
                _ => None,
            };
            reprs.push(e);
            caches.push(TokenCache {
                word,
                lemma,
                pos,
                conv,
                mask,
            });
        }
        Ok((reprs, caches))
    }

    pub(crate) fn represent_backward(&mut self, caches: &[TokenCache], dreprs: &[Array1<f64>]) {
        let r = &self.config.repr;
        let (w, p, l, f) = (r.word_dim, r.pos_dim, r.lemma_dim, r.char_filters);
        for (cache, dr) in caches.iter().zip(dreprs) {
            let g = match &cache.mask {
                Some(m) => dr * m,
                None => dr.clone(),
            };
            self.word_emb
                .backward(cache.word, &g.slice(s![0..w]).to_owned());
            self.pos_emb
                .backward(cache.pos, &g.slice(s![w..w + p]).to_owned());
            self.lemma_emb
                .backward(cache.lemma, &g.slice(s![w + p..w + p + l]).to_owned());
            self.char_cnn
                .backward(&cache.conv, &g.slice(s![w + p + l..w + p + l + f]).to_owned());
        }
    }

    fn root_vector(&self) -> Array1<f64> {
        self.root.value.row(0).to_owned()
    }

    fn assemble_state(&self, token_vectors: Vec<Array1<f64>>) -> EncoderState {
        let mut c = Vec::with_capacity(token_vectors.len() + 1);
        c.push(self.root_vector());
        c.extend(token_vectors);
        EncoderState { c }
    }

    /// Deterministic evaluation-mode encoding.
    pub fn encode_sentence(
        &self,
        sentence: &Sentence,
        external: Option<&[Vec<f64>]>,
    ) -> Result<EncoderState, ModelError> {
        let (reprs, _) = self.represent(sentence, external, None)?;
        let (outs, _) = self.encoder.forward(&reprs, None);
        Ok(self.assemble_state(outs))
    }

    pub fn candidates(&self, enc: &EncoderState) -> CandidateCache {
        self.pointer.project_candidates(&enc.c)
    }

    pub fn initial_carry(&self) -> (Array1<f64>, Array1<f64>) {
        (
            Array1::zeros(self.config.decoder_hidden),
            Array1::zeros(self.config.decoder_hidden),
        )
    }

    /// r_t = c_i + c_j; with no prior attachment (j = -1) r_t = c_i alone.
    pub fn decoder_input(enc: &EncoderState, state: &StateConfig) -> Array1<f64> {
        match state.j {
            Some(j) => &enc.c[state.i] + &enc.c[j],
            None => enc.c[state.i].clone(),
        }
    }

    pub fn decoder_step(
        &self,
        enc: &EncoderState,
        state: &StateConfig,
        carry: &(Array1<f64>, Array1<f64>),
    ) -> (Array1<f64>, (Array1<f64>, Array1<f64>)) {
        let r = Self::decoder_input(enc, state);
        let (h, c, _) = self.decoder.forward_step(&r, &carry.0, &carry.1, None);
        (h.clone(), (h, c))
    }

    /// Softmax over candidate positions 0..=n.
    pub fn pointer_probs(&self, d: &Array1<f64>, cands: &CandidateCache) -> Array1<f64> {
        let (scores, _) = self.pointer.scores(d, cands);
        softmax(&scores)
    }

    /// Softmax over arc labels for attaching the focus to position k.
    pub fn label_probs(&self, d: &Array1<f64>, enc: &EncoderState, k: usize) -> Array1<f64> {
        let (scores, _) = self.labeler.scores(d, &enc.c[k]);
        softmax(&scores)
    }

    /// Ids of labels acceptable on an arc from the root position.
    pub fn root_label_ids(&self) -> Vec<usize> {
        self.vocab
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, label)| {
                atomic_labels(label).is_ok_and(|parts| {
                    parts
                        .iter()
                        .all(|part| Polarity::from_exp_label(part).is_some())
                })
            })
            .map(|(id, _)| id)
            .collect()
    }

    /// Joint loss of the gold sequence under teacher forcing, with
    /// gradient accumulation. `rng` enables dropout; None is eval mode.
    pub fn sentence_loss(
        &mut self,
        graph: &DependencyGraph,
        seq: &TransitionSequence,
        external: Option<&[Vec<f64>]>,
        recurrent_dropout: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<LossBreakdown, ModelError> {
        let n = graph.sentence.len();
        if n == 0 || seq.is_empty() {
            return Ok(LossBreakdown::default());
        }
        let (reprs, token_caches) =
            self.represent(&graph.sentence, external, rng.as_deref_mut())?;
        let enc_dropout = rng
            .as_deref_mut()
            .map(|r| (recurrent_dropout, r))
            .filter(|(p, _)| *p > 0.0);
        let (outs, enc_cache) = match enc_dropout {
            Some((p, r)) => self.encoder.forward(&reprs, Some((p, r))),
            None => self.encoder.forward(&reprs, None),
        };
        let enc = self.assemble_state(outs);
        let cands = self.candidates(&enc);
        let dec_mask = match rng.as_deref_mut() {
            Some(r) if recurrent_dropout > 0.0 => Some(dropout_mask(
                self.config.decoder_hidden,
                recurrent_dropout,
                r,
            )),
            _ => None,
        };

        struct Step {
            state: StateConfig,
            gold_k: usize,
            probs: Array1<f64>,
            ptr_cache: crate::nn::biaffine::PointerStepCache,
            dec_cache: LstmStepCache,
            attach: Option<AttachStep>,
        }
        struct AttachStep {
            head: usize,
            gold_label: usize,
            probs: Array1<f64>,
            cache: crate::nn::biaffine::LabelerCache,
        }

        let mut carry = self.initial_carry();
        let mut state = StateConfig::initial(n);
        let mut steps: Vec<Step> = Vec::with_capacity(seq.len());
        let mut loss = LossBreakdown::default();
        for action in &seq.actions {
            let r = Self::decoder_input(&enc, &state);
            let (h, c, dec_cache) =
                self.decoder
                    .forward_step(&r, &carry.0, &carry.1, dec_mask.as_ref());
            let d = h.clone();
            carry = (h, c);
            let (scores, ptr_cache) = self.pointer.scores(&d, &cands);
            let gold_k = match action {
                Action::Move => state.i,
                Action::AttachTo { k, .. } => *k,
            };
            loss.pointer -= log_softmax_at(&scores, gold_k);
            loss.steps += 1;
            let attach = match action {
                Action::Move => None,
                Action::AttachTo { k, label } => {
                    let gold_label =
                        self.vocab
                            .label_id(label)
                            .ok_or_else(|| ModelError::UnknownLabel {
                                label: label.clone(),
                            })?;
                    let (lscores, cache) = self.labeler.scores(&d, &enc.c[*k]);
                    loss.label -= log_softmax_at(&lscores, gold_label);
                    loss.attach_steps += 1;
                    Some(AttachStep {
                        head: *k,
                        gold_label,
                        probs: softmax(&lscores),
                        cache,
                    })
                }
            };
            steps.push(Step {
                state: state.clone(),
                gold_k,
                probs: softmax(&scores),
                ptr_cache,
                dec_cache,
                attach,
            });
            state = apply(&state, action)?;
        }

        let enc_dim = 2 * self.config.encoder_hidden;
        let mut denc = vec![Array1::<f64>::zeros(enc_dim); n + 1];
        let mut dcand_act = vec![Array1::<f64>::zeros(self.config.arc_dim); n + 1];
        let mut dh_carry = Array1::zeros(self.config.decoder_hidden);
        let mut dc_carry = Array1::zeros(self.config.decoder_hidden);
        for step in steps.iter().rev() {
            let mut dv = step.probs.clone();
            dv[step.gold_k] -= 1.0;
            let mut dd = self
                .pointer
                .backward_step(&step.ptr_cache, &cands, &dv, &mut dcand_act);
            if let Some(att) = &step.attach {
                let mut du = att.probs.clone();
                du[att.gold_label] -= 1.0;
                let (dd2, dhead) = self.labeler.backward(&att.cache, &du);
                dd += &dd2;
                denc[att.head] += &dhead;
            }
            let dh_total = &dd + &dh_carry;
            let (dr, dh_prev, dc_prev) =
                self.decoder.backward_step(&step.dec_cache, &dh_total, &dc_carry);
            dh_carry = dh_prev;
            dc_carry = dc_prev;
            denc[step.state.i] += &dr;
            if let Some(j) = step.state.j {
                denc[j] += &dr;
            }
        }
        for (k, dcand) in self.pointer.backward_candidates(&cands, &dcand_act).iter().enumerate() {
            denc[k] += dcand;
        }
        self.root.grad.row_mut(0).scaled_add(1.0, &denc[0]);
        let dreprs = self.encoder.backward(&enc_cache, &denc[1..]);
        self.represent_backward(&token_caches, &dreprs);
        Ok(loss)
    }
}

/// Walks positions in descending probability. The focus position selects
/// Move; any other position selects AttachTo when legal and permitted by
/// `allowed`. Move is always reachable, so the walk terminates.
pub fn select_action_with(
    probs: &Array1<f64>,
    state: &StateConfig,
    allowed: impl Fn(usize) -> bool,
) -> PointerChoice {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .total_cmp(&probs[a])
            .then_with(|| a.cmp(&b))
    });
    for k in order {
        if k == state.i {
            return PointerChoice::Move;
        }
        let probe = Action::AttachTo {
            k,
            label: String::new(),
        };
        if allowed(k) && legal(state, &probe) {
            return PointerChoice::Attach(k);
        }
    }
    PointerChoice::Move
}

pub fn select_action(probs: &Array1<f64>, state: &StateConfig) -> PointerChoice {
    select_action_with(probs, state, |_| true)
}
