//! `sentigraph`: encode/decode sentiment graphs, derive and check oracle
//! transition sequences, train and run the pointer-network parser, score
//! predictions and dump transition statistics.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error. Logs go to
//! standard error; data goes to files or standard output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use sentigraph::model::Vocab;
use sentigraph::{
    corpus_f1s, decode, encode, load_model, oracle, parse, read_dependency_corpus,
    read_sentiment_corpus, replay, save_model, train, transition_stats, write_dependency_corpus,
    write_sentiment_corpus, DependencyGraph, EncodingStrategy, NetworkConfig, ParserNetwork,
    ScoreReport, Sentence, SentimentGraph, Token, TrainConfig,
};

#[derive(Parser)]
#[command(name = "sentigraph", version, about = "Structured sentiment analysis as dependency parsing")]
struct Cli {
    /// Random seed; overrides any seed from a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sentence-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a sentiment JSON corpus as a dependency corpus.
    Encode {
        /// head-first, head-final or syntax.
        #[arg(long, default_value = "head-first")]
        strategy: String,
        /// Input sentiment corpus (JSON array).
        input: PathBuf,
        /// Output dependency corpus.
        output: PathBuf,
    },
    /// Decode a dependency corpus back into sentiment JSON.
    Decode {
        input: PathBuf,
        output: PathBuf,
    },
    /// Verify that oracle sequences replay exactly to every graph.
    OracleCheck { input: PathBuf },
    /// Train the parser on a dependency corpus.
    Train(TrainArgs),
    /// Parse sentences with a trained model into a dependency corpus.
    Parse {
        #[arg(long)]
        model: PathBuf,
        /// Beam width (1 = greedy).
        #[arg(long, default_value_t = 5)]
        beam: usize,
        /// Sentiment JSON corpus (.json) or plain text, one
        /// whitespace-tokenized sentence per line.
        input: PathBuf,
        output: PathBuf,
    },
    /// Score predictions against gold, both as sentiment JSON corpora.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Gold dependency corpus; derived from --gold via head-first
        /// encoding when absent.
        #[arg(long)]
        gold_dep: Option<PathBuf>,
        /// Predicted dependency corpus; derived from --pred when absent.
        #[arg(long)]
        pred_dep: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Transition-sequence statistics for a dependency corpus.
    Stats {
        input: PathBuf,
        /// Write per-sentence (n, transitions) pairs as CSV.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Flat TOML config mirroring the training and network fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training dependency corpus.
    #[arg(long = "train")]
    train_path: PathBuf,
    /// Development dependency corpus for checkpoint selection.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
}

/// Flat config file: every field optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lr: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    lr_decay: Option<f64>,
    patience: Option<usize>,
    clip_norm: Option<f64>,
    dropout: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    beam: Option<usize>,
    seed: Option<u64>,
    word_dim: Option<usize>,
    pos_dim: Option<usize>,
    lemma_dim: Option<usize>,
    char_dim: Option<usize>,
    char_filters: Option<usize>,
    char_window: Option<usize>,
    external_dim: Option<usize>,
    encoder_hidden: Option<usize>,
    encoder_layers: Option<usize>,
    decoder_hidden: Option<usize>,
    arc_dim: Option<usize>,
    label_dim: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| validation(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| validation(format!("config {}: {e}", path.display())))
    }

    fn train_config(&self) -> TrainConfig {
        let mut cfg = TrainConfig::default();
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        take!(lr, beta1, beta2, lr_decay, patience, clip_norm, dropout, epochs, batch_size, beam, seed);
        cfg
    }

    fn network_config(&self) -> NetworkConfig {
        let mut cfg = NetworkConfig::default();
        macro_rules! take_repr {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.repr.$field = v; })*
            };
        }
        take_repr!(word_dim, pos_dim, lemma_dim, char_dim, char_filters, char_window, dropout);
        cfg.repr.external_dim = self.external_dim;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        take!(encoder_hidden, encoder_layers, decoder_hidden, arc_dim, label_dim);
        cfg
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn validation(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

impl From<sentigraph::IoError> for CliError {
    fn from(e: sentigraph::IoError) -> CliError {
        validation(e.to_string())
    }
}

impl From<sentigraph::CodecError> for CliError {
    fn from(e: sentigraph::CodecError) -> CliError {
        validation(e.to_string())
    }
}

impl From<sentigraph::ModelError> for CliError {
    fn from(e: sentigraph::ModelError) -> CliError {
        validation(e.to_string())
    }
}

impl From<sentigraph::MetricsError> for CliError {
    fn from(e: sentigraph::MetricsError) -> CliError {
        validation(e.to_string())
    }
}

impl From<sentigraph::GraphError> for CliError {
    fn from(e: sentigraph::GraphError) -> CliError {
        validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("sentigraph: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sentigraph: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Encode {
            strategy,
            input,
            output,
        } => cmd_encode(strategy, input, output),
        Command::Decode { input, output } => cmd_decode(input, output),
        Command::OracleCheck { input } => cmd_oracle_check(input),
        Command::Train(args) => cmd_train(args, cli.seed),
        Command::Parse {
            model,
            beam,
            input,
            output,
        } => cmd_parse(model, *beam, input, output),
        Command::Score {
            gold,
            pred,
            gold_dep,
            pred_dep,
            json,
        } => cmd_score(gold, pred, gold_dep.as_deref(), pred_dep.as_deref(), json.as_deref()),
        Command::Stats { input, plot } => cmd_stats(input, plot.as_deref()),
    }
}

fn read_sentiment(path: &Path) -> Result<Vec<SentimentGraph>, CliError> {
    let read = read_sentiment_corpus(path)?;
    for w in &read.warnings {
        eprintln!("sentigraph: warning: {w}");
    }
    Ok(read.graphs)
}

fn cmd_encode(strategy: &str, input: &Path, output: &Path) -> Result<(), CliError> {
    let strategy = EncodingStrategy::parse(strategy)
        .ok_or_else(|| usage(format!("unknown strategy {strategy:?}")))?;
    let graphs = read_sentiment(input)?;
    let encoded: Result<Vec<DependencyGraph>, _> = graphs
        .par_iter()
        .map(|g| encode(g, strategy))
        .collect();
    write_dependency_corpus(output, &encoded?)?;
    Ok(())
}

fn cmd_decode(input: &Path, output: &Path) -> Result<(), CliError> {
    let graphs = read_dependency_corpus(input)?;
    let decoded: Result<Vec<_>, _> = graphs.par_iter().map(decode).collect();
    let decoded = decoded?;
    let mut warning_count = 0usize;
    for rec in &decoded {
        for w in &rec.warnings {
            eprintln!("sentigraph: warning: {w}");
        }
        warning_count += rec.warnings.len();
    }
    let sentiment: Vec<SentimentGraph> = decoded.into_iter().map(|r| r.graph).collect();
    write_sentiment_corpus(output, &sentiment)?;
    println!("recovery warnings: {warning_count}");
    Ok(())
}

fn cmd_oracle_check(input: &Path) -> Result<(), CliError> {
    let graphs = read_dependency_corpus(input)?;
    let failures: Vec<String> = graphs
        .par_iter()
        .filter_map(|g| {
            let seq = oracle(g);
            let n = g.sentence.len();
            let outcome = match replay(n, &seq) {
                Ok(o) => o,
                Err(e) => return Some(format!("{}: replay failed: {e}", g.sentence.sent_id)),
            };
            if !outcome.reached_final() {
                return Some(format!(
                    "{}: replay stopped before the final state",
                    g.sentence.sent_id
                ));
            }
            let mut got: Vec<_> = outcome
                .arcs
                .iter()
                .map(|a| (a.head, a.dependent, a.label.clone()))
                .collect();
            let mut want: Vec<_> = g
                .arcs()
                .map(|a| (a.head, a.dependent, a.label.clone()))
                .collect();
            got.sort();
            want.sort();
            if got != want {
                return Some(format!("{}: replayed arcs differ", g.sentence.sent_id));
            }
            None
        })
        .collect();
    if failures.is_empty() {
        println!("oracle-check: {} sentences ok", graphs.len());
        Ok(())
    } else {
        for f in &failures {
            eprintln!("sentigraph: {f}");
        }
        Err(validation(format!("oracle-check: {} failures", failures.len())))
    }
}

fn cmd_train(args: &TrainArgs, seed: Option<u64>) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut tcfg = file.train_config();
    let ncfg = file.network_config();
    if let Some(v) = args.epochs {
        tcfg.epochs = v;
    }
    if let Some(v) = args.batch_size {
        tcfg.batch_size = v;
    }
    if let Some(v) = args.lr {
        tcfg.lr = v;
    }
    if let Some(v) = args.dropout {
        tcfg.dropout = v;
    }
    if let Some(v) = seed {
        tcfg.seed = v;
    }
    let corpus = read_dependency_corpus(&args.train_path)?;
    let dev = match &args.dev {
        Some(path) => Some(read_dependency_corpus(path)?),
        None => None,
    };
    let vocab = Vocab::build(&corpus);
    let mut net = ParserNetwork::new(ncfg, vocab, tcfg.seed)?;
    eprintln!(
        "train: {} sentences, dev {}, {} epochs",
        corpus.len(),
        dev.as_ref().map_or(0, Vec::len),
        tcfg.epochs
    );
    let outcome = train(&mut net, &corpus, dev.as_deref(), &tcfg, |s| {
        let dev = match (s.dev_uf1, s.dev_lf1) {
            (Some(u), Some(l)) => format!("  dev uf1 {u:.4} lf1 {l:.4}"),
            _ => String::new(),
        };
        eprintln!(
            "epoch {:4}  pointer-loss {:10.3}  label-loss {:10.3}{dev}  lr {:.6}",
            s.epoch, s.pointer_loss, s.label_loss, s.lr
        );
    })?;
    save_model(&net, &args.out)?;
    match (outcome.best_metric, outcome.best_epoch) {
        (Some(metric), Some(epoch)) => eprintln!(
            "train: best dev lf1 {:.4} at epoch {}; checkpoint written to {}",
            metric,
            epoch,
            args.out.display()
        ),
        _ => {
            let (uf1, lf1) = corpus_f1s(&net, &corpus)?;
            eprintln!(
                "train: final train uf1 {uf1:.4} lf1 {lf1:.4}; checkpoint written to {}",
                args.out.display()
            );
        }
    }
    Ok(())
}

/// Plain-text sentence input: one sentence per line, whitespace tokens.
fn read_token_lines(path: &Path) -> Result<Vec<Sentence>, CliError> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let mut sentences = Vec::new();
    for (lineno, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = Vec::new();
        let mut begin = 0usize;
        let mut cursor = 0usize;
        let chars: Vec<char> = line.chars().collect();
        let mut form = String::new();
        for (pos, &ch) in chars.iter().enumerate() {
            if ch.is_whitespace() {
                if !form.is_empty() {
                    tokens.push((std::mem::take(&mut form), begin, pos));
                }
            } else {
                if form.is_empty() {
                    begin = pos;
                }
                form.push(ch);
            }
            cursor = pos + 1;
        }
        if !form.is_empty() {
            tokens.push((form, begin, cursor));
        }
        let tokens: Vec<Token> = tokens
            .into_iter()
            .enumerate()
            .map(|(i, (form, b, e))| Token {
                index: i + 1,
                lemma: form.to_lowercase(),
                upos: "X".into(),
                form,
                char_begin: b,
                char_end: e,
                syn_head: None,
            })
            .collect();
        sentences.push(Sentence::new(format!("line-{}", lineno + 1), line, tokens)?);
    }
    Ok(sentences)
}

fn cmd_parse(model: &Path, beam: usize, input: &Path, output: &Path) -> Result<(), CliError> {
    let net = load_model(model)?;
    let sentences: Vec<Sentence> = if input.extension().is_some_and(|e| e == "json") {
        read_sentiment(input)?.into_iter().map(|g| g.sentence).collect()
    } else {
        read_token_lines(input)?
    };
    let parsed: Result<Vec<DependencyGraph>, _> = sentences
        .par_iter()
        .map(|s| parse(&net, s, None, beam).map(|o| o.graph))
        .collect();
    write_dependency_corpus(output, &parsed?)?;
    eprintln!("parse: {} sentences, beam {beam}", sentences.len());
    Ok(())
}

fn cmd_score(
    gold: &Path,
    pred: &Path,
    gold_dep: Option<&Path>,
    pred_dep: Option<&Path>,
    json: Option<&Path>,
) -> Result<(), CliError> {
    let gold_graphs = read_sentiment(gold)?;
    let pred_graphs = read_sentiment(pred)?;
    let gold_deps = match gold_dep {
        Some(path) => read_dependency_corpus(path)?,
        None => gold_graphs
            .par_iter()
            .map(|g| encode(g, EncodingStrategy::HeadFirst))
            .collect::<Result<_, _>>()?,
    };
    let pred_deps = match pred_dep {
        Some(path) => read_dependency_corpus(path)?,
        None => pred_graphs
            .par_iter()
            .map(|g| encode(g, EncodingStrategy::HeadFirst))
            .collect::<Result<_, _>>()?,
    };
    let report = ScoreReport::compute(&gold_graphs, &pred_graphs, &gold_deps, &pred_deps)?;
    print!("{}", report.to_text());
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| validation(format!("report serialization: {e}")))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_stats(input: &Path, plot: Option<&Path>) -> Result<(), CliError> {
    let graphs = read_dependency_corpus(input)?;
    let stats = transition_stats(graphs.iter());
    let tokens: usize = graphs.iter().map(|g| g.sentence.len()).sum();
    let arcs: usize = graphs.iter().map(DependencyGraph::arc_count).sum();
    let transitions: usize = stats.per_sentence.iter().map(|&(_, a)| a).sum();
    println!("sentences = {}", graphs.len());
    println!("tokens = {tokens}");
    println!("arcs = {arcs}");
    println!("arcs_per_token = {:.6}", stats.arcs_per_token);
    println!("transitions = {transitions}");
    if let Some(path) = plot {
        let mut csv = String::from("n,transitions\n");
        for &(n, a) in &stats.per_sentence {
            csv.push_str(&format!("{n},{a}\n"));
        }
        std::fs::write(path, csv).map_err(|e| validation(format!("{}: {e}", path.display())))?;
        eprintln!("stats: wrote {} rows to {}", stats.per_sentence.len(), path.display());
    }
    Ok(())
}
