//! Tabular dependency corpus. One token per line with tab-separated
//! columns: index, form, lemma, upos, heads-field, and an optional sixth
//! syntactic-head column (written only when some token carries one).
//! The heads-field is `_` or `|`-separated `head:label` pairs. Sentences
//! are prefixed with `# sent_id =` and `# text =` comments and separated by
//! blank lines.

use std::fs;
use std::path::Path;

use crate::graph::{DependencyGraph, Sentence, Token};

use super::IoError;

fn field_ok(s: &str) -> bool {
    !s.is_empty() && !s.contains(['\t', '\n', '\r', ' '])
}

pub fn write_dependency_corpus(
    path: impl AsRef<Path>,
    graphs: &[DependencyGraph],
) -> Result<(), IoError> {
    let mut out = String::new();
    for graph in graphs {
        let sent = &graph.sentence;
        out.push_str(&format!("# sent_id = {}\n", sent.sent_id));
        out.push_str(&format!("# text = {}\n", sent.text));
        let with_syn = sent.tokens().iter().any(|t| t.syn_head.is_some());
        for tok in sent.tokens() {
            for field in [&tok.form, &tok.lemma, &tok.upos] {
                if !field_ok(field) {
                    return Err(IoError::Record {
                        sent_id: sent.sent_id.clone(),
                        message: format!(
                            "token {} field {:?} contains whitespace",
                            tok.index, field
                        ),
                    });
                }
            }
            let heads = graph.heads_of(tok.index);
            let heads_field = if heads.is_empty() {
                "_".to_string()
            } else {
                heads
                    .iter()
                    .map(|a| format!("{}:{}", a.head, a.label))
                    .collect::<Vec<_>>()
                    .join("|")
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}",
                tok.index, tok.form, tok.lemma, tok.upos, heads_field
            ));
            if with_syn {
                match tok.syn_head {
                    Some(h) => out.push_str(&format!("\t{h}")),
                    None => out.push_str("\t_"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

struct PendingSentence {
    sent_id: Option<String>,
    text: Option<String>,
    rows: Vec<(usize, Row)>,
}

struct Row {
    form: String,
    lemma: String,
    upos: String,
    heads: Vec<(usize, String)>,
    syn_head: Option<usize>,
}

impl PendingSentence {
    fn new() -> PendingSentence {
        PendingSentence {
            sent_id: None,
            text: None,
            rows: Vec::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.sent_id.is_none() && self.text.is_none() && self.rows.is_empty()
    }

    fn finish(self, line: usize) -> Result<DependencyGraph, IoError> {
        let err = |message: String| IoError::Format { line, message };
        let sent_id = self
            .sent_id
            .ok_or_else(|| err("sentence without # sent_id comment".into()))?;
        let forms: Vec<&str> = self.rows.iter().map(|(_, r)| r.form.as_str()).collect();
        let text = self
            .text
            .unwrap_or_else(|| forms.join(" "));
        // Recover character offsets by aligning forms against the text.
        let hay: Vec<char> = text.chars().collect();
        let mut cursor = 0usize;
        let mut tokens = Vec::new();
        for (idx, row) in &self.rows {
            let needle: Vec<char> = row.form.chars().collect();
            if needle.is_empty() || cursor + needle.len() > hay.len() {
                return Err(err(format!("token {:?} does not fit in text", row.form)));
            }
            let begin = (cursor..=hay.len() - needle.len())
                .find(|&s| hay[s..].starts_with(&needle[..]))
                .ok_or_else(|| err(format!("token {:?} not found in text", row.form)))?;
            let end = begin + needle.len();
            cursor = end;
            tokens.push(Token {
                index: *idx,
                form: row.form.clone(),
                lemma: row.lemma.clone(),
                upos: row.upos.clone(),
                char_begin: begin,
                char_end: end,
                syn_head: row.syn_head,
            });
        }
        let sentence = Sentence::new(sent_id, text, tokens)?;
        let mut graph = DependencyGraph::new(sentence);
        for (idx, row) in &self.rows {
            for (head, label) in &row.heads {
                graph.add_arc(crate::graph::Arc::new(*head, *idx, label.clone())?)?;
            }
        }
        graph.validate_root_labels()?;
        Ok(graph)
    }
}

pub fn read_dependency_corpus(path: impl AsRef<Path>) -> Result<Vec<DependencyGraph>, IoError> {
    let data = fs::read_to_string(path)?;
    let mut graphs = Vec::new();
    let mut pending = PendingSentence::new();
    for (lineno, raw) in data.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| IoError::Format { line, message };
        if raw.trim().is_empty() {
            if !pending.is_empty() {
                graphs.push(std::mem::replace(&mut pending, PendingSentence::new()).finish(line)?);
            }
            continue;
        }
        if let Some(rest) = raw.strip_prefix("# sent_id =") {
            pending.sent_id = Some(rest.trim().to_string());
            continue;
        }
        if let Some(rest) = raw.strip_prefix("# text =") {
            pending.text = Some(rest.strip_prefix(' ').unwrap_or(rest).to_string());
            continue;
        }
        if raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 5 && cols.len() != 6 {
            return Err(err(format!("expected 5 or 6 columns, found {}", cols.len())));
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| err(format!("bad token index {:?}", cols[0])))?;
        if index != pending.rows.len() + 1 {
            return Err(err(format!(
                "token index {index} out of order (expected {})",
                pending.rows.len() + 1
            )));
        }
        let mut heads = Vec::new();
        if cols[4] != "_" {
            for pair in cols[4].split('|') {
                let (h, label) = pair
                    .split_once(':')
                    .ok_or_else(|| err(format!("heads entry {pair:?} is not head:label")))?;
                let head: usize = h
                    .parse()
                    .map_err(|_| err(format!("bad head index {h:?}")))?;
                if label.is_empty() {
                    return Err(err(format!("heads entry {pair:?} has empty label")));
                }
                heads.push((head, label.to_string()));
            }
        }
        let syn_head = if cols.len() == 6 {
            match cols[5] {
                "_" => None,
                s => Some(
                    s.parse::<usize>()
                        .map_err(|_| err(format!("bad syntactic head {s:?}")))?,
                ),
            }
        } else {
            None
        };
        pending.rows.push((
            index,
            Row {
                form: cols[1].to_string(),
                lemma: cols[2].to_string(),
                upos: cols[3].to_string(),
                heads,
                syn_head,
            },
        ));
    }
    if !pending.is_empty() {
        let line = data.lines().count();
        graphs.push(pending.finish(line)?);
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::tests::example_graph;
    use crate::codec::{encode, EncodingStrategy};
    use tempfile::tempdir;

    #[test]
    fn example_rows_have_expected_heads_fields() {
        let dep = encode(&example_graph(), EncodingStrategy::HeadFirst).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.dep");
        write_dependency_corpus(&path, &[dep]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let classmates = text
            .lines()
            .find(|l| l.starts_with("2\t"))
            .expect("row for token 2");
        assert_eq!(classmates, "2\tclassmates\tclassmates\tX\t1:holder#holder");
        let said = text.lines().find(|l| l.starts_with("3\t")).unwrap();
        assert!(said.ends_with("\t_"));
        let some = text.lines().find(|l| l.starts_with("1\t")).unwrap();
        assert!(some.ends_with("\t9:holder|13:holder"));
    }

    #[test]
    fn round_trip_identity() {
        let dep = encode(&example_graph(), EncodingStrategy::HeadFirst).unwrap();
        let empty = DependencyGraph::new(crate::codec::tests::example_sentence());
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.dep");
        write_dependency_corpus(&path, &[dep.clone(), empty.clone()]).unwrap();
        let back = read_dependency_corpus(&path).unwrap();
        assert_eq!(back, vec![dep, empty]);
    }

    #[test]
    fn syn_head_column_round_trips() {
        let base = crate::codec::tests::example_sentence();
        let mut tokens = base.tokens().to_vec();
        for (i, t) in tokens.iter_mut().enumerate() {
            t.syn_head = if i % 2 == 0 { Some(0) } else { None };
        }
        let sent = Sentence::new("syn-1", base.text.clone(), tokens).unwrap();
        let graph = DependencyGraph::new(sent);
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.dep");
        write_dependency_corpus(&path, &[graph.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().any(|l| l.split('\t').count() == 6));
        let back = read_dependency_corpus(&path).unwrap();
        assert_eq!(back, vec![graph]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.dep");
        std::fs::write(&path, "# sent_id = s\n1\tonly\tthree\n").unwrap();
        match read_dependency_corpus(&path) {
            Err(IoError::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn root_label_violation_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.dep");
        std::fs::write(
            &path,
            "# sent_id = s\n# text = a b\n1\ta\ta\tX\t0:holder\n2\tb\tb\tX\t_\n",
        )
        .unwrap();
        assert!(read_dependency_corpus(&path).is_err());
    }

    #[test]
    fn missing_text_comment_falls_back_to_joined_forms() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("plain.dep");
        std::fs::write(&path, "# sent_id = s\n1\ta\ta\tX\t_\n2\tbb\tbb\tX\t_\n").unwrap();
        let graphs = read_dependency_corpus(&path).unwrap();
        assert_eq!(graphs[0].sentence.text, "a bb");
        assert_eq!(graphs[0].sentence.token(2).char_begin, 2);
    }
}
