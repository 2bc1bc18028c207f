//! Sentiment corpus JSON. A file is an array of records; each opinion gives
//! its components as two parallel lists, surface strings and "begin:end"
//! character offsets. Offsets that cut through a token are snapped outward
//! to the covering tokens with a warning.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{Opinion, Polarity, Sentence, SentimentGraph, Span, Token};

use super::IoError;

/// One opinion component: parallel surface strings and offset strings.
pub type ComponentRecord = (Vec<String>, Vec<String>);

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OpinionRecord {
    #[serde(rename = "Source", default)]
    pub source: ComponentRecord,
    #[serde(rename = "Target", default)]
    pub target: ComponentRecord,
    #[serde(rename = "Polar_expression")]
    pub polar_expression: ComponentRecord,
    #[serde(rename = "Polarity")]
    pub polarity: String,
    #[serde(rename = "Intensity", default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenRecord {
    pub form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub begin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syn_head: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentimentJsonRecord {
    pub sent_id: String,
    pub text: String,
    #[serde(default)]
    pub opinions: Vec<OpinionRecord>,
    /// Explicit tokenization; whitespace tokenization of `text` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<TokenRecord>>,
}

#[derive(Debug)]
pub struct CorpusRead {
    pub graphs: Vec<SentimentGraph>,
    pub warnings: Vec<String>,
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn char_slice(s: &str, begin: usize, end: usize) -> String {
    s.chars().skip(begin).take(end.saturating_sub(begin)).collect()
}

/// Whitespace tokenization with character offsets.
fn whitespace_tokens(text: &str) -> Vec<(String, usize, usize)> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    for (pos, ch) in text.chars().enumerate() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push((std::mem::take(&mut current), start, pos));
            }
        } else {
            if current.is_empty() {
                start = pos;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        tokens.push((current, start, char_len(text)));
    }
    tokens
}

fn build_sentence(record: &SentimentJsonRecord) -> Result<Sentence, IoError> {
    let record_err = |message: String| IoError::Record {
        sent_id: record.sent_id.clone(),
        message,
    };
    let mut tokens = Vec::new();
    match &record.tokens {
        Some(explicit) => {
            let mut cursor = 0usize;
            for (i, tr) in explicit.iter().enumerate() {
                let (begin, end) = match (tr.begin, tr.end) {
                    (Some(b), Some(e)) => (b, e),
                    _ => {
                        // Align the form against the text left to right.
                        let hay: Vec<char> = record.text.chars().collect();
                        let needle: Vec<char> = tr.form.chars().collect();
                        if needle.is_empty() || needle.len() > hay.len() {
                            return Err(record_err(format!("token {} has unusable form", i + 1)));
                        }
                        let found = (cursor..=hay.len() - needle.len())
                            .find(|&s| hay[s..].starts_with(&needle[..]))
                            .ok_or_else(|| {
                                record_err(format!(
                                    "token {:?} not found in text after offset {cursor}",
                                    tr.form
                                ))
                            })?;
                        (found, found + needle.len())
                    }
                };
                if char_slice(&record.text, begin, end) != tr.form {
                    return Err(record_err(format!(
                        "token {:?} does not match text at {begin}:{end}",
                        tr.form
                    )));
                }
                cursor = end;
                tokens.push(Token {
                    index: i + 1,
                    form: tr.form.clone(),
                    lemma: tr.lemma.clone().unwrap_or_else(|| tr.form.clone()),
                    upos: tr.upos.clone().unwrap_or_else(|| "X".into()),
                    char_begin: begin,
                    char_end: end,
                    syn_head: tr.syn_head,
                });
            }
        }
        None => {
            for (i, (form, begin, end)) in whitespace_tokens(&record.text).into_iter().enumerate()
            {
                tokens.push(Token {
                    index: i + 1,
                    lemma: form.clone(),
                    form,
                    upos: "X".into(),
                    char_begin: begin,
                    char_end: end,
                    syn_head: None,
                });
            }
        }
    }
    Sentence::new(record.sent_id.clone(), record.text.clone(), tokens).map_err(Into::into)
}

/// Maps one component's offset list to a token span. Returns None for an
/// empty component.
fn component_span(
    record: &SentimentJsonRecord,
    sentence: &Sentence,
    component: &ComponentRecord,
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<Option<Span>, IoError> {
    let record_err = |message: String| IoError::Record {
        sent_id: record.sent_id.clone(),
        message,
    };
    let (surfaces, offsets) = component;
    if offsets.is_empty() {
        return Ok(None);
    }
    if surfaces.len() != offsets.len() {
        return Err(record_err(format!(
            "{name}: {} surface strings but {} offset pairs",
            surfaces.len(),
            offsets.len()
        )));
    }
    let text_len = char_len(&record.text);
    let mut indices = Vec::new();
    for (surface, offset) in surfaces.iter().zip(offsets) {
        let (b, e) = offset
            .split_once(':')
            .ok_or_else(|| record_err(format!("{name}: offset {offset:?} is not begin:end")))?;
        let begin: usize = b
            .trim()
            .parse()
            .map_err(|_| record_err(format!("{name}: bad offset {offset:?}")))?;
        let end: usize = e
            .trim()
            .parse()
            .map_err(|_| record_err(format!("{name}: bad offset {offset:?}")))?;
        if begin >= end || end > text_len {
            return Err(record_err(format!(
                "{name}: offset {begin}:{end} out of range for text of length {text_len}"
            )));
        }
        if char_slice(&record.text, begin, end) != *surface {
            return Err(record_err(format!(
                "{name}: surface {surface:?} does not match text at {begin}:{end}"
            )));
        }
        let mut snapped = false;
        let mut any = false;
        for tok in sentence.tokens() {
            if tok.char_begin < end && begin < tok.char_end {
                any = true;
                indices.push(tok.index);
                if begin > tok.char_begin || end < tok.char_end {
                    snapped = true;
                }
            }
        }
        if !any {
            return Err(record_err(format!(
                "{name}: offset {begin}:{end} covers no token"
            )));
        }
        if snapped {
            warnings.push(format!(
                "{}: {name} offset {begin}:{end} snapped to token boundaries",
                record.sent_id
            ));
        }
    }
    Ok(Some(Span::new(indices)?))
}

pub fn record_to_graph(
    record: &SentimentJsonRecord,
    warnings: &mut Vec<String>,
) -> Result<SentimentGraph, IoError> {
    let sentence = build_sentence(record)?;
    let mut opinions = Vec::new();
    for op in &record.opinions {
        let polarity = Polarity::parse(&op.polarity).ok_or_else(|| IoError::Record {
            sent_id: record.sent_id.clone(),
            message: format!("unknown polarity {:?}", op.polarity),
        })?;
        let holder = component_span(record, &sentence, &op.source, "source", warnings)?;
        let target = component_span(record, &sentence, &op.target, "target", warnings)?;
        let expression =
            component_span(record, &sentence, &op.polar_expression, "expression", warnings)?
                .ok_or_else(|| IoError::Record {
                    sent_id: record.sent_id.clone(),
                    message: "opinion has no expression".into(),
                })?;
        opinions.push(Opinion {
            holder,
            target,
            expression,
            polarity,
        });
    }
    SentimentGraph::new(sentence, opinions).map_err(Into::into)
}

pub fn read_sentiment_corpus(path: impl AsRef<Path>) -> Result<CorpusRead, IoError> {
    let data = fs::read_to_string(path)?;
    let records: Vec<SentimentJsonRecord> = serde_json::from_str(&data)?;
    let mut warnings = Vec::new();
    let mut graphs = Vec::new();
    for record in &records {
        graphs.push(record_to_graph(record, &mut warnings)?);
    }
    Ok(CorpusRead { graphs, warnings })
}

fn span_component(graph: &SentimentGraph, span: Option<&Span>) -> ComponentRecord {
    let mut surfaces = Vec::new();
    let mut offsets = Vec::new();
    if let Some(span) = span {
        for (begin, end) in span.char_ranges(&graph.sentence) {
            surfaces.push(char_slice(&graph.sentence.text, begin, end));
            offsets.push(format!("{begin}:{end}"));
        }
    }
    (surfaces, offsets)
}

pub fn graph_to_record(graph: &SentimentGraph) -> SentimentJsonRecord {
    let tokens = graph
        .sentence
        .tokens()
        .iter()
        .map(|t| TokenRecord {
            form: t.form.clone(),
            lemma: Some(t.lemma.clone()),
            upos: Some(t.upos.clone()),
            begin: Some(t.char_begin),
            end: Some(t.char_end),
            syn_head: t.syn_head,
        })
        .collect();
    let opinions = graph
        .opinions
        .iter()
        .map(|op| OpinionRecord {
            source: span_component(graph, op.holder.as_ref()),
            target: span_component(graph, op.target.as_ref()),
            polar_expression: span_component(graph, Some(&op.expression)),
            polarity: op.polarity.as_str().to_string(),
            intensity: None,
        })
        .collect();
    SentimentJsonRecord {
        sent_id: graph.sentence.sent_id.clone(),
        text: graph.sentence.text.clone(),
        opinions,
        tokens: Some(tokens),
    }
}

pub fn write_sentiment_corpus(
    path: impl AsRef<Path>,
    graphs: &[SentimentGraph],
) -> Result<(), IoError> {
    let records: Vec<SentimentJsonRecord> = graphs.iter().map(graph_to_record).collect();
    let out = serde_json::to_string_pretty(&records)?;
    fs::write(path, out + "\n")?;
    Ok(())
}
