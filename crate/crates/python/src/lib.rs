//! Python bindings for the sentigraph library: graph types, the
//! sentiment-graph/dependency-graph codec, oracle and replay, metrics,
//! corpus IO and the trainable parser.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use sentigraph::model::Vocab;
use sentigraph::{
    self as core, EncodingStrategy, NetworkConfig, Polarity, TrainConfig,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_strategy(s: &str) -> PyResult<EncodingStrategy> {
    EncodingStrategy::parse(s).ok_or_else(|| value_err(format!("unknown strategy {s:?}")))
}

fn parse_polarity(s: &str) -> PyResult<Polarity> {
    Polarity::parse(s).ok_or_else(|| value_err(format!("unknown polarity {s:?}")))
}

/// A tokenized input sentence.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Sentence {
    inner: core::Sentence,
}

#[pymethods]
impl Sentence {
    /// Builds a sentence from surface forms; lemma = lowercased form,
    /// upos = "X", text = forms joined by single spaces.
    #[staticmethod]
    fn from_forms(sent_id: &str, forms: Vec<String>) -> PyResult<Sentence> {
        let mut tokens = Vec::new();
        let mut offset = 0usize;
        for (i, form) in forms.iter().enumerate() {
            let len = form.chars().count();
            tokens.push(core::Token {
                index: i + 1,
                form: form.clone(),
                lemma: form.to_lowercase(),
                upos: "X".into(),
                char_begin: offset,
                char_end: offset + len,
                syn_head: None,
            });
            offset += len + 1;
        }
        let inner =
            core::Sentence::new(sent_id, forms.join(" "), tokens).map_err(value_err)?;
        Ok(Sentence { inner })
    }

    #[getter]
    fn sent_id(&self) -> String {
        self.inner.sent_id.clone()
    }

    #[getter]
    fn text(&self) -> String {
        self.inner.text.clone()
    }

    #[getter]
    fn forms(&self) -> Vec<String> {
        self.inner.tokens().iter().map(|t| t.form.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sentence({:?}, {} tokens)", self.inner.sent_id, self.inner.len())
    }
}

fn opinion_to_dict<'py>(py: Python<'py>, op: &core::Opinion) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let span = |s: &core::Span| s.iter().collect::<Vec<usize>>();
    d.set_item("holder", op.holder.as_ref().map(&span))?;
    d.set_item("target", op.target.as_ref().map(&span))?;
    d.set_item("expression", span(&op.expression))?;
    d.set_item("polarity", op.polarity.as_str())?;
    Ok(d)
}

fn opinion_from_any(obj: &Bound<'_, PyAny>) -> PyResult<core::Opinion> {
    let field = |name: &str| obj.get_item(name);
    let span_of = |v: Bound<'_, PyAny>| -> PyResult<Option<core::Span>> {
        if v.is_none() {
            return Ok(None);
        }
        let indices: Vec<usize> = v.extract()?;
        Ok(Some(core::Span::new(indices).map_err(value_err)?))
    };
    let holder = match field("holder") {
        Ok(v) => span_of(v)?,
        Err(_) => None,
    };
    let target = match field("target") {
        Ok(v) => span_of(v)?,
        Err(_) => None,
    };
    let expression = span_of(field("expression")?)?
        .ok_or_else(|| value_err("expression span is required"))?;
    let polarity = parse_polarity(&field("polarity")?.extract::<String>()?)?;
    Ok(core::Opinion {
        holder,
        target,
        expression,
        polarity,
    })
}

/// Opinion tuples over a sentence.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct SentimentGraph {
    inner: core::SentimentGraph,
}

#[pymethods]
impl SentimentGraph {
    /// `opinions`: dicts with keys holder/target (token-index lists or
    /// None), expression (token-index list) and polarity.
    #[new]
    fn new(sentence: &Sentence, opinions: &Bound<'_, PyList>) -> PyResult<SentimentGraph> {
        let ops: PyResult<Vec<core::Opinion>> =
            opinions.iter().map(|o| opinion_from_any(&o)).collect();
        let inner =
            core::SentimentGraph::new(sentence.inner.clone(), ops?).map_err(value_err)?;
        Ok(SentimentGraph { inner })
    }

    #[getter]
    fn sentence(&self) -> Sentence {
        Sentence {
            inner: self.inner.sentence.clone(),
        }
    }

    #[getter]
    fn opinions<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .opinions
            .iter()
            .map(|op| opinion_to_dict(py, op))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SentimentGraph({:?}, {} opinions)",
            self.inner.sentence.sent_id,
            self.inner.opinions.len()
        )
    }
}

/// Bi-lexical dependency graph: labeled head->dependent arcs over a
/// sentence, position 0 being the artificial root.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct DependencyGraph {
    inner: core::DependencyGraph,
}

#[pymethods]
impl DependencyGraph {
    /// `arcs`: (head, dependent, label) triples; labels may be collapsed
    /// `#`-joined atoms.
    #[new]
    fn new(sentence: &Sentence, arcs: Vec<(usize, usize, String)>) -> PyResult<DependencyGraph> {
        let mut inner = core::DependencyGraph::new(sentence.inner.clone());
        for (head, dependent, label) in arcs {
            inner
                .add_arc(core::Arc::new(head, dependent, label).map_err(value_err)?)
                .map_err(value_err)?;
        }
        Ok(DependencyGraph { inner })
    }

    #[getter]
    fn sentence(&self) -> Sentence {
        Sentence {
            inner: self.inner.sentence.clone(),
        }
    }

    #[getter]
    fn arcs(&self) -> Vec<(usize, usize, String)> {
        self.inner
            .arcs()
            .map(|a| (a.head, a.dependent, a.label.clone()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "DependencyGraph({:?}, {} arcs)",
            self.inner.sentence.sent_id,
            self.inner.arc_count()
        )
    }
}

/// A Move/Attach action sequence in its text form.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct TransitionSequence {
    inner: core::TransitionSequence,
}

#[pymethods]
impl TransitionSequence {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<TransitionSequence> {
        Ok(TransitionSequence {
            inner: core::TransitionSequence::from_text(text).map_err(value_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("TransitionSequence({} actions)", self.inner.len())
    }
}

/// Encodes a sentiment graph as a dependency graph.
/// `strategy`: head-first, head-final or syntax.
#[pyfunction]
#[pyo3(signature = (graph, strategy = "head-first"))]
fn encode(graph: &SentimentGraph, strategy: &str) -> PyResult<DependencyGraph> {
    let strategy = parse_strategy(strategy)?;
    Ok(DependencyGraph {
        inner: core::encode(&graph.inner, strategy).map_err(value_err)?,
    })
}

/// Decodes a dependency graph back into a sentiment graph; returns
/// (graph, warnings).
#[pyfunction]
fn decode(graph: &DependencyGraph) -> PyResult<(SentimentGraph, Vec<String>)> {
    let rec = core::decode(&graph.inner).map_err(value_err)?;
    Ok((SentimentGraph { inner: rec.graph }, rec.warnings))
}

/// Gold transition sequence for a dependency graph.
#[pyfunction]
fn oracle(graph: &DependencyGraph) -> TransitionSequence {
    TransitionSequence {
        inner: core::oracle(&graph.inner),
    }
}

/// Replays a sequence over a sentence into a dependency graph, failing on
/// the first illegal action.
#[pyfunction]
fn replay(sentence: &Sentence, seq: &TransitionSequence) -> PyResult<DependencyGraph> {
    Ok(DependencyGraph {
        inner: core::replay_graph(&sentence.inner, &seq.inner).map_err(value_err)?,
    })
}

fn unwrap_sentiment(graphs: &Bound<'_, PyList>) -> PyResult<Vec<core::SentimentGraph>> {
    graphs
        .iter()
        .map(|g| Ok(g.extract::<SentimentGraph>()?.inner))
        .collect()
}

fn unwrap_dependency(graphs: &Bound<'_, PyList>) -> PyResult<Vec<core::DependencyGraph>> {
    graphs
        .iter()
        .map(|g| Ok(g.extract::<DependencyGraph>()?.inner))
        .collect()
}

/// Full metric suite as a flat dict. Dependency corpora default to the
/// head-first encodings of the sentiment corpora.
#[pyfunction]
#[pyo3(signature = (gold, pred, gold_dep = None, pred_dep = None))]
fn score<'py>(
    py: Python<'py>,
    gold: &Bound<'py, PyList>,
    pred: &Bound<'py, PyList>,
    gold_dep: Option<&Bound<'py, PyList>>,
    pred_dep: Option<&Bound<'py, PyList>>,
) -> PyResult<Bound<'py, PyDict>> {
    let gold = unwrap_sentiment(gold)?;
    let pred = unwrap_sentiment(pred)?;
    let derive = |graphs: &[core::SentimentGraph]| -> PyResult<Vec<core::DependencyGraph>> {
        graphs
            .iter()
            .map(|g| core::encode(g, EncodingStrategy::HeadFirst).map_err(value_err))
            .collect()
    };
    let gold_dep = match gold_dep {
        Some(list) => unwrap_dependency(list)?,
        None => derive(&gold)?,
    };
    let pred_dep = match pred_dep {
        Some(list) => unwrap_dependency(list)?,
        None => derive(&pred)?,
    };
    let report =
        core::ScoreReport::compute(&gold, &pred, &gold_dep, &pred_dep).map_err(value_err)?;
    let d = PyDict::new(py);
    for (name, prf) in [
        ("holder", report.holder),
        ("target", report.target),
        ("expression", report.expression),
    ] {
        d.set_item(format!("{name}_precision"), prf.precision)?;
        d.set_item(format!("{name}_recall"), prf.recall)?;
        d.set_item(format!("{name}_f1"), prf.f1)?;
    }
    d.set_item("targeted_f1", report.targeted_f1)?;
    d.set_item("uf1", report.uf1)?;
    d.set_item("lf1", report.lf1)?;
    d.set_item("nsf1", report.nsf1)?;
    d.set_item("sf1", report.sf1)?;
    Ok(d)
}

/// Per-sentence (n, transitions) pairs and the arcs-per-token ratio.
#[pyfunction]
fn stats<'py>(py: Python<'py>, graphs: &Bound<'py, PyList>) -> PyResult<Bound<'py, PyDict>> {
    let graphs = unwrap_dependency(graphs)?;
    let stats = core::transition_stats(graphs.iter());
    let d = PyDict::new(py);
    d.set_item("per_sentence", stats.per_sentence)?;
    d.set_item("arcs_per_token", stats.arcs_per_token)?;
    Ok(d)
}

/// Reads a sentiment JSON corpus; returns (graphs, warnings).
#[pyfunction]
fn read_sentiment_corpus(path: PathBuf) -> PyResult<(Vec<SentimentGraph>, Vec<String>)> {
    let read = core::read_sentiment_corpus(&path).map_err(value_err)?;
    Ok((
        read.graphs
            .into_iter()
            .map(|inner| SentimentGraph { inner })
            .collect(),
        read.warnings,
    ))
}

#[pyfunction]
fn write_sentiment_corpus(path: PathBuf, graphs: &Bound<'_, PyList>) -> PyResult<()> {
    core::write_sentiment_corpus(&path, &unwrap_sentiment(graphs)?).map_err(value_err)
}

#[pyfunction]
fn read_dependency_corpus(path: PathBuf) -> PyResult<Vec<DependencyGraph>> {
    Ok(core::read_dependency_corpus(&path)
        .map_err(value_err)?
        .into_iter()
        .map(|inner| DependencyGraph { inner })
        .collect())
}

#[pyfunction]
fn write_dependency_corpus(path: PathBuf, graphs: &Bound<'_, PyList>) -> PyResult<()> {
    core::write_dependency_corpus(&path, &unwrap_dependency(graphs)?).map_err(value_err)
}

fn configs_from_dict(config: Option<&Bound<'_, PyDict>>) -> PyResult<(TrainConfig, NetworkConfig)> {
    let mut tcfg = TrainConfig::default();
    let mut ncfg = NetworkConfig::default();
    let Some(config) = config else {
        return Ok((tcfg, ncfg));
    };
    macro_rules! take {
        ($target:expr, $($key:ident),*) => {
            $(if let Some(v) = config.get_item(stringify!($key))? {
                $target.$key = v.extract()?;
            })*
        };
    }
    take!(tcfg, lr, beta1, beta2, lr_decay, clip_norm, dropout);
    take!(tcfg, patience, epochs, batch_size, beam);
    take!(tcfg, seed);
    take!(ncfg.repr, word_dim, pos_dim, lemma_dim, char_dim, char_filters, char_window);
    if let Some(v) = config.get_item("external_dim")? {
        ncfg.repr.external_dim = v.extract()?;
    }
    if let Some(v) = config.get_item("dropout")? {
        ncfg.repr.dropout = v.extract()?;
    }
    take!(ncfg, encoder_hidden, encoder_layers, decoder_hidden, arc_dim, label_dim);
    for (key, _) in config.iter() {
        let key: String = key.extract()?;
        const KNOWN: [&str; 23] = [
            "lr", "beta1", "beta2", "lr_decay", "clip_norm", "dropout", "patience", "epochs",
            "batch_size", "beam", "seed", "word_dim", "pos_dim", "lemma_dim", "char_dim",
            "char_filters", "char_window", "external_dim", "encoder_hidden", "encoder_layers",
            "decoder_hidden", "arc_dim", "label_dim",
        ];
        if !KNOWN.contains(&key.as_str()) {
            return Err(value_err(format!("unknown config key {key:?}")));
        }
    }
    Ok((tcfg, ncfg))
}

/// A trained pointer-network parser.
#[pyclass]
struct Parser {
    net: core::ParserNetwork,
}

#[pymethods]
impl Parser {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Parser> {
        Ok(Parser {
            net: core::load_model(&path).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        core::save_model(&self.net, &path).map_err(value_err)
    }

    /// Parses one sentence; returns (graph, sequence).
    #[pyo3(signature = (sentence, beam = 5))]
    fn parse(
        &self,
        sentence: &Sentence,
        beam: usize,
    ) -> PyResult<(DependencyGraph, TransitionSequence)> {
        let out = core::parse(&self.net, &sentence.inner, None, beam).map_err(value_err)?;
        Ok((
            DependencyGraph { inner: out.graph },
            TransitionSequence {
                inner: out.sequence,
            },
        ))
    }

    /// Greedy (uf1, lf1) over a gold dependency corpus.
    fn evaluate(&self, corpus: &Bound<'_, PyList>) -> PyResult<(f64, f64)> {
        core::corpus_f1s(&self.net, &unwrap_dependency(corpus)?).map_err(value_err)
    }
}

/// Trains a parser on a dependency corpus. `config` takes the flat keys of
/// the training and network configurations; `progress`, when given, is
/// called once per epoch with a stats dict.
#[pyfunction]
#[pyo3(signature = (corpus, dev = None, config = None, progress = None))]
fn train(
    py: Python<'_>,
    corpus: &Bound<'_, PyList>,
    dev: Option<&Bound<'_, PyList>>,
    config: Option<&Bound<'_, PyDict>>,
    progress: Option<Py<PyAny>>,
) -> PyResult<Parser> {
    let corpus = unwrap_dependency(corpus)?;
    let dev = dev.map(|d| unwrap_dependency(d)).transpose()?;
    let (tcfg, ncfg) = configs_from_dict(config)?;
    let vocab = Vocab::build(&corpus);
    let mut net = core::ParserNetwork::new(ncfg, vocab, tcfg.seed).map_err(value_err)?;
    let mut callback_error: Option<PyErr> = None;
    core::train(&mut net, &corpus, dev.as_deref(), &tcfg, |s| {
        if callback_error.is_some() {
            return;
        }
        if let Some(cb) = &progress {
            let call = || -> PyResult<()> {
                let d = PyDict::new(py);
                d.set_item("epoch", s.epoch)?;
                d.set_item("pointer_loss", s.pointer_loss)?;
                d.set_item("label_loss", s.label_loss)?;
                d.set_item("dev_uf1", s.dev_uf1)?;
                d.set_item("dev_lf1", s.dev_lf1)?;
                d.set_item("lr", s.lr)?;
                cb.call1(py, (d,))?;
                Ok(())
            };
            if let Err(e) = call() {
                callback_error = Some(e);
            }
        }
    })
    .map_err(value_err)?;
    if let Some(e) = callback_error {
        return Err(e);
    }
    Ok(Parser { net })
}

#[pymodule]
fn sentigraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sentence>()?;
    m.add_class::<SentimentGraph>()?;
    m.add_class::<DependencyGraph>()?;
    m.add_class::<TransitionSequence>()?;
    m.add_class::<Parser>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(read_sentiment_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(write_sentiment_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(read_dependency_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(write_dependency_corpus, m)?)?;
    Ok(())
}
