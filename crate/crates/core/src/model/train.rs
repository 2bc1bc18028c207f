//! Teacher-forced training: per-batch gradient accumulation, global norm
//! clipping, one optimizer update per batch. Checkpointing and plateau
//! learning-rate decay are driven by dev LF1; without a dev corpus the
//! rate stays constant and the final-epoch parameters are kept.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::DependencyGraph;
use crate::metrics::dependency_f1;
use crate::nn::adam::{clip_global_norm, Adam};
use crate::transitions::{oracle, TransitionSequence};

use super::config::TrainConfig;
use super::decode::parse;
use super::network::{LossBreakdown, ParserNetwork};
use super::ModelError;

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub pointer_loss: f64,
    pub label_loss: f64,
    /// Greedy attachment F1 on the dev corpus; None when training without
    /// one.
    pub dev_uf1: Option<f64>,
    pub dev_lf1: Option<f64>,
    pub lr: f64,
}

impl EpochStats {
    pub fn loss(&self) -> f64 {
        self.pointer_loss + self.label_loss
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub epochs_run: usize,
    /// Best dev LF1 and the epoch that reached it; None without a dev
    /// corpus.
    pub best_metric: Option<f64>,
    pub best_epoch: Option<usize>,
    pub history: Vec<EpochStats>,
}

fn snapshot(net: &ParserNetwork) -> Vec<(String, Array2<f64>)> {
    net.params()
        .into_iter()
        .map(|p| (p.name.clone(), p.value.clone()))
        .collect()
}

fn restore(net: &mut ParserNetwork, snap: &[(String, Array2<f64>)]) {
    let mut params = net.params_mut();
    for (name, value) in snap {
        let p = params
            .iter_mut()
            .find(|p| &p.name == name)
            .expect("snapshot matches network parameters");
        p.value.assign(value);
    }
}

/// Greedy (unlabeled, labeled) attachment F1 of the network over a corpus.
pub fn corpus_f1s(net: &ParserNetwork, corpus: &[DependencyGraph]) -> Result<(f64, f64), ModelError> {
    let mut pred = Vec::with_capacity(corpus.len());
    for gold in corpus {
        pred.push(parse(net, &gold.sentence, None, 1)?.graph);
    }
    let uf1 = dependency_f1(corpus, &pred, false)?.f1;
    let lf1 = dependency_f1(corpus, &pred, true)?.f1;
    Ok((uf1, lf1))
}

/// Greedy labeled attachment F1 of the network over a corpus.
pub fn corpus_lf1(net: &ParserNetwork, corpus: &[DependencyGraph]) -> Result<f64, ModelError> {
    Ok(corpus_f1s(net, corpus)?.1)
}

/// Trains in place. On return the network holds the parameters of the
/// best dev-LF1 epoch when a dev corpus was given, otherwise those of the
/// final epoch.
pub fn train(
    net: &mut ParserNetwork,
    corpus: &[DependencyGraph],
    dev: Option<&[DependencyGraph]>,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    if net.config.repr.external_dim.is_some() {
        return Err(ModelError::Config(
            "batch training covers self-contained representations; \
             external_dim must be None"
                .into(),
        ));
    }
    let seqs: Vec<TransitionSequence> = corpus.iter().map(oracle).collect();
    let dev = dev.filter(|d| !d.is_empty());
    let mut adam = Adam::new(cfg.lr, cfg.beta1, cfg.beta2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_metric = f64::NEG_INFINITY;
    let mut best_epoch = None;
    let mut best_params: Option<Vec<(String, Array2<f64>)>> = None;
    let mut stale = 0usize;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = LossBreakdown::default();
        for chunk in order.chunks(cfg.batch_size) {
            net.zero_grads();
            for &idx in chunk {
                let loss = net.sentence_loss(
                    &corpus[idx],
                    &seqs[idx],
                    None,
                    cfg.dropout,
                    Some(&mut rng),
                )?;
                if !loss.total().is_finite() {
                    return Err(ModelError::NonFiniteLoss {
                        epoch,
                        sent_id: corpus[idx].sentence.sent_id.clone(),
                        value: loss.total(),
                    });
                }
                epoch_loss.add(&loss);
            }
            let mut params = net.params_mut();
            clip_global_norm(&mut params, cfg.clip_norm);
            adam.step(&mut params);
        }
        let mut dev_f1s = None;
        if let Some(d) = dev {
            let (uf1, lf1) = corpus_f1s(net, d)?;
            dev_f1s = Some((uf1, lf1));
            if lf1 > best_metric {
                best_metric = lf1;
                best_epoch = Some(epoch);
                best_params = Some(snapshot(net));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    adam.lr *= cfg.lr_decay;
                    stale = 0;
                }
            }
        }
        let stats = EpochStats {
            epoch,
            pointer_loss: epoch_loss.pointer,
            label_loss: epoch_loss.label,
            dev_uf1: dev_f1s.map(|f| f.0),
            dev_lf1: dev_f1s.map(|f| f.1),
            lr: adam.lr,
        };
        progress(&stats);
        history.push(stats);
    }
    if let Some(snap) = &best_params {
        restore(net, snap);
    }
    Ok(TrainOutcome {
        epochs_run: cfg.epochs,
        best_metric: best_epoch.map(|_| best_metric),
        best_epoch,
        history,
    })
}
