//! Closed vocabularies built from a training corpus. Ids are stable across
//! runs because entries are collected in sorted order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{label_vocabulary, DependencyGraph};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 0;
const CHAR_UNK_ID: usize = 1;

/// Entry lists are the serialized form; lookup maps are rebuilt on load.
/// Words, lemmas, and tags reserve id 0 for the unknown entry; characters
/// reserve 0 for convolution padding and 1 for unknown.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabData", into = "VocabData")]
pub struct Vocab {
    words: Vec<String>,
    lemmas: Vec<String>,
    pos: Vec<String>,
    chars: Vec<char>,
    labels: Vec<String>,
    word_ids: BTreeMap<String, usize>,
    lemma_ids: BTreeMap<String, usize>,
    pos_ids: BTreeMap<String, usize>,
    char_ids: BTreeMap<char, usize>,
    label_ids: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabData {
    words: Vec<String>,
    lemmas: Vec<String>,
    pos: Vec<String>,
    chars: Vec<char>,
    labels: Vec<String>,
}

impl From<VocabData> for Vocab {
    fn from(d: VocabData) -> Vocab {
        let index =
            |xs: &[String]| -> BTreeMap<String, usize> {
                xs.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect()
            };
        Vocab {
            word_ids: index(&d.words),
            lemma_ids: index(&d.lemmas),
            pos_ids: index(&d.pos),
            char_ids: d.chars.iter().enumerate().map(|(i, &c)| (c, i)).collect(),
            label_ids: index(&d.labels),
            words: d.words,
            lemmas: d.lemmas,
            pos: d.pos,
            chars: d.chars,
            labels: d.labels,
        }
    }
}

impl From<Vocab> for VocabData {
    fn from(v: Vocab) -> VocabData {
        VocabData {
            words: v.words,
            lemmas: v.lemmas,
            pos: v.pos,
            chars: v.chars,
            labels: v.labels,
        }
    }
}

impl Vocab {
    pub fn build(corpus: &[DependencyGraph]) -> Vocab {
        let mut words = BTreeSet::new();
        let mut lemmas = BTreeSet::new();
        let mut pos = BTreeSet::new();
        let mut chars = BTreeSet::new();
        for graph in corpus {
            for tok in graph.sentence.tokens() {
                words.insert(tok.form.clone());
                lemmas.insert(tok.lemma.clone());
                pos.insert(tok.upos.clone());
                chars.extend(tok.form.chars());
            }
        }
        let with_unk = |set: BTreeSet<String>| -> Vec<String> {
            let mut v = vec!["<unk>".to_string()];
            v.extend(set);
            v
        };
        let mut char_list = vec!['\u{0}', '\u{1}'];
        char_list.extend(chars);
        let data = VocabData {
            words: with_unk(words),
            lemmas: with_unk(lemmas),
            pos: with_unk(pos),
            chars: char_list,
            labels: label_vocabulary(corpus.iter()),
        };
        Vocab::from(data)
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn lemma_count(&self) -> usize {
        self.lemmas.len()
    }

    pub fn pos_count(&self) -> usize {
        self.pos.len()
    }

    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn word_id(&self, form: &str) -> usize {
        self.word_ids.get(form).copied().unwrap_or(UNK_ID)
    }

    pub fn lemma_id(&self, lemma: &str) -> usize {
        self.lemma_ids.get(lemma).copied().unwrap_or(UNK_ID)
    }

    pub fn pos_id(&self, upos: &str) -> usize {
        self.pos_ids.get(upos).copied().unwrap_or(UNK_ID)
    }

    /// Character ids of a form; unknown characters share one id and 0 is
    /// reserved for padding.
    pub fn char_id_seq(&self, form: &str) -> Vec<usize> {
        form.chars()
            .map(|c| self.char_ids.get(&c).copied().unwrap_or(CHAR_UNK_ID))
            .collect()
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.label_ids.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}
