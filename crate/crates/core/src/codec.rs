//! Conversion between sentiment graphs and bi-lexical dependency graphs.
//!
//! Each opinion becomes: a root arc to the expression head labeled with the
//! polarity, span-internal arcs from each node head to the remaining span
//! tokens, and argument arcs from the expression head to the holder/target
//! heads. Arcs sharing (head, dependent) collapse into one arc with a
//! `#`-joined label. Decoding inverts this; where the encoding is ambiguous
//! it is deterministic but may not recover the original graph.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{
    DependencyGraph, GraphError, Opinion, Polarity, Sentence, SentimentGraph, Span,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingStrategy {
    HeadFirst,
    HeadFinal,
    SyntaxBased,
}

impl EncodingStrategy {
    pub fn parse(s: &str) -> Option<EncodingStrategy> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "head-first" | "headfirst" | "first" => Some(EncodingStrategy::HeadFirst),
            "head-final" | "headfinal" | "final" => Some(EncodingStrategy::HeadFinal),
            "syntax-based" | "syntaxbased" | "syntax" => Some(EncodingStrategy::SyntaxBased),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EncodingStrategy::HeadFirst => "head-first",
            EncodingStrategy::HeadFinal => "head-final",
            EncodingStrategy::SyntaxBased => "syntax-based",
        }
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("token {index} has no syntactic head; syntax-based encoding needs one on every token")]
    MissingSynHead { index: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Picks the span token that represents the whole node in the dependency
/// graph. Syntax-based choice takes the leftmost token whose syntactic head
/// lies outside the span, falling back to the first token when no such token
/// exists (e.g. the span covers the whole sentence).
pub fn node_head(
    span: &Span,
    strategy: EncodingStrategy,
    sentence: &Sentence,
) -> Result<usize, CodecError> {
    match strategy {
        EncodingStrategy::HeadFirst => Ok(span.first()),
        EncodingStrategy::HeadFinal => Ok(span.last()),
        EncodingStrategy::SyntaxBased => {
            for idx in span.iter() {
                let head = sentence
                    .token(idx)
                    .syn_head
                    .ok_or(CodecError::MissingSynHead { index: idx })?;
                if !span.contains(head) {
                    return Ok(idx);
                }
            }
            Ok(span.first())
        }
    }
}

fn encode_node(
    out: &mut DependencyGraph,
    head: usize,
    span: &Span,
    label: &str,
) -> Result<(), CodecError> {
    for d in span.iter() {
        if d != head {
            out.add_atomic(head, d, label)?;
        }
    }
    Ok(())
}

/// Encodes a sentiment graph as a dependency graph under the given strategy.
pub fn encode(
    graph: &SentimentGraph,
    strategy: EncodingStrategy,
) -> Result<DependencyGraph, CodecError> {
    let mut out = DependencyGraph::new(graph.sentence.clone());
    for op in &graph.opinions {
        let exp_label = op.polarity.exp_label();
        let e = node_head(&op.expression, strategy, &graph.sentence)?;
        out.add_atomic(0, e, exp_label)?;
        encode_node(&mut out, e, &op.expression, exp_label)?;
        if let Some(holder) = &op.holder {
            let h = node_head(holder, strategy, &graph.sentence)?;
            out.add_atomic(e, h, "holder")?;
            encode_node(&mut out, h, holder, "holder")?;
        }
        if let Some(target) = &op.target {
            let t = node_head(target, strategy, &graph.sentence)?;
            out.add_atomic(e, t, "target")?;
            encode_node(&mut out, t, target, "target")?;
        }
    }
    Ok(out)
}

/// Result of [`decode`]: the recovered graph plus warnings for arcs the
/// recovery had to drop.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub graph: SentimentGraph,
    pub warnings: Vec<String>,
}

/// Span of an argument or expression node: the node head plus every
/// dependent reachable from it by an arc whose atomic labels include
/// `label`.
fn node_span(graph: &DependencyGraph, head: usize, label: &str) -> Span {
    let mut indices = vec![head];
    for arc in graph.arcs() {
        if arc.head == head && arc.label.split('#').any(|a| a == label) {
            indices.push(arc.dependent);
        }
    }
    Span::new(indices).expect("head always present")
}

/// Decodes a dependency graph back into a sentiment graph.
///
/// Per expression head, every holder span is paired with every target span;
/// an expression with no holder (or target) arcs yields `None` for that
/// component. Argument or expression-internal arcs whose head never receives
/// the matching attachment are dropped with a warning.
pub fn decode(graph: &DependencyGraph) -> Result<Recovery, CodecError> {
    graph.validate_root_labels()?;
    let mut warnings = Vec::new();
    let mut opinions = Vec::new();

    // Expression heads in index order, each with its atomic polarity labels.
    let mut expressions: BTreeMap<usize, Vec<Polarity>> = BTreeMap::new();
    for arc in graph.arcs() {
        if arc.head == 0 {
            let pols = expressions.entry(arc.dependent).or_default();
            for atomic in arc.atomic_labels()? {
                pols.push(Polarity::from_exp_label(atomic).expect("root labels validated"));
            }
        }
    }

    let mut used: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    for (&e, polarities) in &expressions {
        let mut holders: Vec<Span> = Vec::new();
        let mut targets: Vec<Span> = Vec::new();
        for arc in graph.arcs() {
            if arc.head != e {
                continue;
            }
            for atomic in arc.atomic_labels()? {
                match atomic {
                    "holder" => {
                        holders.push(node_span(graph, arc.dependent, "holder"));
                        used.insert((arc.head, arc.dependent), ());
                    }
                    "target" => {
                        targets.push(node_span(graph, arc.dependent, "target"));
                        used.insert((arc.head, arc.dependent), ());
                    }
                    _ => {}
                }
            }
        }
        for &polarity in polarities {
            let exp_label = polarity.exp_label();
            let expression = node_span(graph, e, exp_label);
            let holder_slots: Vec<Option<&Span>> = if holders.is_empty() {
                vec![None]
            } else {
                holders.iter().map(Some).collect()
            };
            let target_slots: Vec<Option<&Span>> = if targets.is_empty() {
                vec![None]
            } else {
                targets.iter().map(Some).collect()
            };
            for holder in &holder_slots {
                for target in &target_slots {
                    opinions.push(Opinion {
                        holder: holder.cloned(),
                        target: target.cloned(),
                        expression: expression.clone(),
                        polarity,
                    });
                }
            }
        }
    }

    // Arcs not consumed above are either span-internal (head is a referenced
    // argument head or an expression head) or dangling.
    for arc in graph.arcs() {
        if arc.head == 0 || used.contains_key(&(arc.head, arc.dependent)) {
            continue;
        }
        let head_is_expression = expressions.contains_key(&arc.head);
        let head_is_argument = used.keys().any(|&(_, d)| d == arc.head);
        for atomic in arc.atomic_labels()? {
            let consumed = match atomic {
                "holder" | "target" => head_is_argument || head_is_expression,
                _ => head_is_expression,
            };
            if !consumed {
                warnings.push(format!(
                    "dropped dangling arc {}->{} {:?}: head has no matching attachment",
                    arc.head, arc.dependent, atomic
                ));
            }
        }
    }

    let graph = SentimentGraph::new(graph.sentence.clone(), opinions)?;
    Ok(Recovery { graph, warnings })
}
