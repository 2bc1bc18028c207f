//! Evaluation metrics over aligned gold/predicted corpora.
//!
//! All corpus-level scores are micro-averaged: per-sentence counts are
//! computed independently (in parallel, order preserved) and folded
//! sequentially, so results do not depend on thread count.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DependencyGraph, Opinion, Polarity, SentimentGraph, Span};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("corpora differ in length: gold {gold}, predicted {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("sentence {index}: gold sent_id {gold_id:?} != predicted sent_id {pred_id:?}")]
    Misaligned {
        index: usize,
        gold_id: String,
        pred_id: String,
    },
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrF1 {
    /// Builds the triple from weighted counts. Precision is 0 when nothing
    /// was predicted, recall is 0 when there is no gold, and F1 is 0 when
    /// P + R = 0.
    pub fn from_counts(tp: f64, pred_total: f64, gold_total: f64) -> PrF1 {
        let precision = if pred_total > 0.0 { tp / pred_total } else { 0.0 };
        let recall = if gold_total > 0.0 { tp / gold_total } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PrF1 {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Holder,
    Target,
    Expression,
}

impl Role {
    fn span_of<'a>(self, op: &'a Opinion) -> Option<&'a Span> {
        match self {
            Role::Holder => op.holder.as_ref(),
            Role::Target => op.target.as_ref(),
            Role::Expression => Some(&op.expression),
        }
    }
}

fn check_sentiment_alignment(
    gold: &[SentimentGraph],
    pred: &[SentimentGraph],
) -> Result<(), MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.sentence.sent_id != p.sentence.sent_id {
            return Err(MetricsError::Misaligned {
                index,
                gold_id: g.sentence.sent_id.clone(),
                pred_id: p.sentence.sent_id.clone(),
            });
        }
    }
    Ok(())
}

fn check_dependency_alignment(
    gold: &[DependencyGraph],
    pred: &[DependencyGraph],
) -> Result<(), MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.sentence.sent_id != p.sentence.sent_id {
            return Err(MetricsError::Misaligned {
                index,
                gold_id: g.sentence.sent_id.clone(),
                pred_id: p.sentence.sent_id.clone(),
            });
        }
    }
    Ok(())
}

fn role_tokens(graph: &SentimentGraph, role: Role) -> BTreeSet<usize> {
    let mut tokens = BTreeSet::new();
    for op in &graph.opinions {
        if let Some(span) = role.span_of(op) {
            tokens.extend(span.iter());
        }
    }
    tokens
}

/// Token-level F1 for one role: a true positive is a token inside both the
/// gold and predicted token-set union for that role in the same sentence.
pub fn span_f1(
    gold: &[SentimentGraph],
    pred: &[SentimentGraph],
    role: Role,
) -> Result<PrF1, MetricsError> {
    check_sentiment_alignment(gold, pred)?;
    let counts: Vec<(usize, usize, usize)> = gold
        .par_iter()
        .zip(pred.par_iter())
        .map(|(g, p)| {
            let gt = role_tokens(g, role);
            let pt = role_tokens(p, role);
            (gt.intersection(&pt).count(), pt.len(), gt.len())
        })
        .collect();
    let (mut tp, mut pred_total, mut gold_total) = (0usize, 0usize, 0usize);
    for (t, p, g) in counts {
        tp += t;
        pred_total += p;
        gold_total += g;
    }
    Ok(PrF1::from_counts(
        tp as f64,
        pred_total as f64,
        gold_total as f64,
    ))
}

fn target_pairs(graph: &SentimentGraph) -> BTreeMap<(Span, Polarity), usize> {
    let mut pairs = BTreeMap::new();
    for op in &graph.opinions {
        if let Some(target) = &op.target {
            *pairs.entry((target.clone(), op.polarity)).or_insert(0) += 1;
        }
    }
    pairs
}

/// Exact-match F1 over (target token set, polarity) pairs; each gold pair is
/// matchable at most once.
pub fn targeted_f1(
    gold: &[SentimentGraph],
    pred: &[SentimentGraph],
) -> Result<PrF1, MetricsError> {
    check_sentiment_alignment(gold, pred)?;
    let counts: Vec<(usize, usize, usize)> = gold
        .par_iter()
        .zip(pred.par_iter())
        .map(|(g, p)| {
            let gp = target_pairs(g);
            let pp = target_pairs(p);
            let tp: usize = pp
                .iter()
                .map(|(pair, &count)| count.min(gp.get(pair).copied().unwrap_or(0)))
                .sum();
            (
                tp,
                pp.values().sum::<usize>(),
                gp.values().sum::<usize>(),
            )
        })
        .collect();
    let (mut tp, mut pred_total, mut gold_total) = (0usize, 0usize, 0usize);
    for (t, p, g) in counts {
        tp += t;
        pred_total += p;
        gold_total += g;
    }
    Ok(PrF1::from_counts(
        tp as f64,
        pred_total as f64,
        gold_total as f64,
    ))
}

fn atomic_arc_multiset(graph: &DependencyGraph) -> BTreeMap<(usize, usize, String), usize> {
    let mut arcs = BTreeMap::new();
    for arc in graph.arcs() {
        for atomic in arc.label.split('#') {
            *arcs
                .entry((arc.head, arc.dependent, atomic.to_string()))
                .or_insert(0) += 1;
        }
    }
    arcs
}

/// Arc-level F1. Unlabeled compares (head, dependent) pairs; labeled
/// compares (head, dependent, atomic label) triples with multiset
/// semantics, so a collapsed gold label is only fully matched by the same
/// multiplicity.
pub fn dependency_f1(
    gold: &[DependencyGraph],
    pred: &[DependencyGraph],
    labeled: bool,
) -> Result<PrF1, MetricsError> {
    check_dependency_alignment(gold, pred)?;
    let counts: Vec<(usize, usize, usize)> = gold
        .par_iter()
        .zip(pred.par_iter())
        .map(|(g, p)| {
            if labeled {
                let gm = atomic_arc_multiset(g);
                let pm = atomic_arc_multiset(p);
                let tp: usize = pm
                    .iter()
                    .map(|(key, &count)| count.min(gm.get(key).copied().unwrap_or(0)))
                    .sum();
                (
                    tp,
                    pm.values().sum::<usize>(),
                    gm.values().sum::<usize>(),
                )
            } else {
                let gs: BTreeSet<(usize, usize)> =
                    g.arcs().map(|a| (a.head, a.dependent)).collect();
                let ps: BTreeSet<(usize, usize)> =
                    p.arcs().map(|a| (a.head, a.dependent)).collect();
                (gs.intersection(&ps).count(), ps.len(), gs.len())
            }
        })
        .collect();
    let (mut tp, mut pred_total, mut gold_total) = (0usize, 0usize, 0usize);
    for (t, p, g) in counts {
        tp += t;
        pred_total += p;
        gold_total += g;
    }
    Ok(PrF1::from_counts(
        tp as f64,
        pred_total as f64,
        gold_total as f64,
    ))
}

/// Jaccard overlap of one opinion component. Empty on both sides counts as
/// full overlap; empty on exactly one side as none.
fn component_overlap(gold: Option<&Span>, pred: Option<&Span>) -> f64 {
    match (gold, pred) {
        (None, None) => 1.0,
        (None, Some(_)) | (Some(_), None) => 0.0,
        (Some(g), Some(p)) => {
            let inter = g.indices().intersection(p.indices()).count();
            let union = g.indices().union(p.indices()).count();
            inter as f64 / union as f64
        }
    }
}

fn shares_token(a: &Span, b: &Span) -> bool {
    a.indices().intersection(b.indices()).next().is_some()
}

/// Candidate weight, or None when the pair is not matchable: every non-empty
/// gold component must overlap the prediction, and polarity must agree when
/// requested.
fn tuple_weight(gold: &Opinion, pred: &Opinion, include_polarity: bool) -> Option<f64> {
    if include_polarity && gold.polarity != pred.polarity {
        return None;
    }
    for role in [Role::Holder, Role::Target, Role::Expression] {
        if let Some(gspan) = role.span_of(gold) {
            match role.span_of(pred) {
                Some(pspan) if shares_token(gspan, pspan) => {}
                _ => return None,
            }
        }
    }
    let weight = (component_overlap(gold.holder.as_ref(), pred.holder.as_ref())
        + component_overlap(gold.target.as_ref(), pred.target.as_ref())
        + component_overlap(Some(&gold.expression), Some(&pred.expression)))
        / 3.0;
    Some(weight)
}

/// Maximum-weight one-to-one assignment over candidate edges. Solved
/// exactly by a subset DP over the smaller side when it has at most
/// `EXACT_LIMIT` tuples, greedily by descending weight beyond that.
const EXACT_LIMIT: usize = 12;

fn max_weight_assignment(n_pred: usize, n_gold: usize, edges: &[(usize, usize, f64)]) -> f64 {
    if edges.is_empty() {
        return 0.0;
    }
    let (small_n, edges_by_large): (usize, BTreeMap<usize, Vec<(usize, f64)>>) =
        if n_gold <= n_pred {
            let mut by = BTreeMap::new();
            for &(p, g, w) in edges {
                by.entry(p).or_insert_with(Vec::new).push((g, w));
            }
            (n_gold, by)
        } else {
            let mut by = BTreeMap::new();
            for &(p, g, w) in edges {
                by.entry(g).or_insert_with(Vec::new).push((p, w));
            }
            (n_pred, by)
        };
    if small_n <= EXACT_LIMIT {
        let mut dp = vec![f64::NEG_INFINITY; 1 << small_n];
        dp[0] = 0.0;
        for partners in edges_by_large.values() {
            let mut next = dp.clone();
            for (mask, &base) in dp.iter().enumerate() {
                if base == f64::NEG_INFINITY {
                    continue;
                }
                for &(s, w) in partners {
                    if mask & (1 << s) == 0 {
                        let m = mask | (1 << s);
                        if base + w > next[m] {
                            next[m] = base + w;
                        }
                    }
                }
            }
            dp = next;
        }
        dp.into_iter().fold(0.0f64, f64::max)
    } else {
        let mut order: Vec<&(usize, usize, f64)> = edges.iter().collect();
        order.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        let mut used_pred = vec![false; n_pred];
        let mut used_gold = vec![false; n_gold];
        let mut total = 0.0;
        for &&(p, g, w) in &order {
            if !used_pred[p] && !used_gold[g] {
                used_pred[p] = true;
                used_gold[g] = true;
                total += w;
            }
        }
        total
    }
}

/// Overlap-weighted opinion tuple F1. With `include_polarity` this is the
/// sentiment variant; without it the non-polar one. The polarity constraint
/// only removes candidate edges, so the sentiment score never exceeds the
/// non-polar score.
pub fn sentiment_graph_f1(
    gold: &[SentimentGraph],
    pred: &[SentimentGraph],
    include_polarity: bool,
) -> Result<PrF1, MetricsError> {
    check_sentiment_alignment(gold, pred)?;
    let counts: Vec<(f64, usize, usize)> = gold
        .par_iter()
        .zip(pred.par_iter())
        .map(|(g, p)| {
            let mut edges = Vec::new();
            for (pi, pt) in p.opinions.iter().enumerate() {
                for (gi, gt) in g.opinions.iter().enumerate() {
                    if let Some(w) = tuple_weight(gt, pt, include_polarity) {
                        edges.push((pi, gi, w));
                    }
                }
            }
            let tp = max_weight_assignment(p.opinions.len(), g.opinions.len(), &edges);
            (tp, p.opinions.len(), g.opinions.len())
        })
        .collect();
    let (mut tp, mut pred_total, mut gold_total) = (0.0f64, 0usize, 0usize);
    for (t, p, g) in counts {
        tp += t;
        pred_total += p;
        gold_total += g;
    }
    Ok(PrF1::from_counts(tp, pred_total as f64, gold_total as f64))
}

/// Complete metric suite over one gold/predicted corpus pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub holder: PrF1,
    pub target: PrF1,
    pub expression: PrF1,
    pub targeted_f1: f64,
    pub uf1: f64,
    pub lf1: f64,
    pub nsf1: f64,
    pub sf1: f64,
}

impl ScoreReport {
    pub fn compute(
        gold: &[SentimentGraph],
        pred: &[SentimentGraph],
        gold_dep: &[DependencyGraph],
        pred_dep: &[DependencyGraph],
    ) -> Result<ScoreReport, MetricsError> {
        Ok(ScoreReport {
            holder: span_f1(gold, pred, Role::Holder)?,
            target: span_f1(gold, pred, Role::Target)?,
            expression: span_f1(gold, pred, Role::Expression)?,
            targeted_f1: targeted_f1(gold, pred)?.f1,
            uf1: dependency_f1(gold_dep, pred_dep, false)?.f1,
            lf1: dependency_f1(gold_dep, pred_dep, true)?.f1,
            nsf1: sentiment_graph_f1(gold, pred, false)?.f1,
            sf1: sentiment_graph_f1(gold, pred, true)?.f1,
        })
    }

    /// Flat key/value rendering, one metric per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, prf) in [
            ("holder", &self.holder),
            ("target", &self.target),
            ("expression", &self.expression),
        ] {
            out.push_str(&format!("{name}_precision = {:.6}\n", prf.precision));
            out.push_str(&format!("{name}_recall = {:.6}\n", prf.recall));
            out.push_str(&format!("{name}_f1 = {:.6}\n", prf.f1));
        }
        out.push_str(&format!("targeted_f1 = {:.6}\n", self.targeted_f1));
        out.push_str(&format!("uf1 = {:.6}\n", self.uf1));
        out.push_str(&format!("lf1 = {:.6}\n", self.lf1));
        out.push_str(&format!("nsf1 = {:.6}\n", self.nsf1));
        out.push_str(&format!("sf1 = {:.6}\n", self.sf1));
        out
    }
}
