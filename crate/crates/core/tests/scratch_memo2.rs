// Temporary experiment harness; delete before committing.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sentigraph::model::Vocab;
use sentigraph::{
    corpus_f1s, encode, oracle, parse, train, DependencyGraph, EncodingStrategy, NetworkConfig,
    Opinion, ParserNetwork, Polarity, Sentence, SentimentGraph, Span, Token, TrainConfig,
};

const UPOS: [&str; 4] = ["NOUN", "VERB", "ADJ", "ADV"];

fn random_sentence(rng: &mut ChaCha8Rng, id: usize) -> Sentence {
    let n = rng.random_range(5..=15);
    let mut tokens = Vec::new();
    let mut forms = Vec::new();
    let mut offset = 0usize;
    for i in 1..=n {
        let form = format!("w{:03}", rng.random_range(0..200));
        tokens.push(Token {
            index: i,
            form: form.clone(),
            lemma: form.to_lowercase(),
            upos: UPOS[rng.random_range(0..UPOS.len())].into(),
            char_begin: offset,
            char_end: offset + form.chars().count(),
            syn_head: None,
        });
        offset += form.chars().count() + 1;
        forms.push(form);
    }
    Sentence::new(format!("synth-{id}"), forms.join(" "), tokens).unwrap()
}

fn carve_segments(rng: &mut ChaCha8Rng, n: usize, max_seg: usize) -> Vec<Span> {
    let mut segments = Vec::new();
    let mut pos = 1usize;
    while pos <= n {
        let len = rng.random_range(1..=max_seg.min(n - pos + 1));
        segments.push(Span::new(pos..pos + len).unwrap());
        pos += len;
    }
    segments
}

fn random_graph(rng: &mut ChaCha8Rng, id: usize, max_seg: usize) -> SentimentGraph {
    let sentence = random_sentence(rng, id);
    let n = sentence.len();
    let mut segments = carve_segments(rng, n, max_seg);
    for i in (1..segments.len()).rev() {
        segments.swap(i, rng.random_range(0..=i));
    }
    let want = rng.random_range(1..=3usize);
    let mut opinions = Vec::new();
    let mut used_args: Vec<Span> = Vec::new();
    for _ in 0..want {
        let expression = match segments.pop() {
            Some(s) => s,
            None => break,
        };
        let arg = |rng: &mut ChaCha8Rng, segments: &mut Vec<Span>, used: &mut Vec<Span>| {
            match rng.random_range(0..4) {
                0 => None,
                1 if !used.is_empty() => Some(used[rng.random_range(0..used.len())].clone()),
                _ => segments.pop().map(|s| {
                    used.push(s.clone());
                    s
                }),
            }
        };
        let holder = arg(rng, &mut segments, &mut used_args);
        let target = arg(rng, &mut segments, &mut used_args);
        let polarity = match rng.random_range(0..3) {
            0 => Polarity::Positive,
            1 => Polarity::Negative,
            _ => Polarity::Neutral,
        };
        opinions.push(Opinion {
            holder,
            target,
            expression,
            polarity,
        });
    }
    SentimentGraph::new(sentence, opinions).unwrap()
}

fn corpus() -> Vec<DependencyGraph> {
    (0..50)
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(200_000 + case as u64);
            encode(&random_graph(&mut rng, case, 2), EncodingStrategy::HeadFirst).unwrap()
        })
        .collect()
}

fn run(tag: &str, cfg: NetworkConfig) {
    let corpus = corpus();
    let tcfg = TrainConfig {
        epochs: 200,
        ..TrainConfig::default()
    };
    let vocab = Vocab::build(&corpus);
    let mut net = ParserNetwork::new(cfg, vocab, tcfg.seed).unwrap();
    let start = Instant::now();
    train(&mut net, &corpus, None, &tcfg, |s| {
        if s.epoch % 10 == 0 {
            println!(
                "[{tag}] epoch {:3}  ptr {:8.2}  lab {:7.2}  ({}s)",
                s.epoch,
                s.pointer_loss,
                s.label_loss,
                start.elapsed().as_secs()
            );
        }
    })
    .unwrap();
    let (uf1, lf1) = corpus_f1s(&net, &corpus).unwrap();
    let mut exact = 0;
    for dep in &corpus {
        let p = parse(&net, &dep.sentence, None, 1).unwrap();
        if p.sequence.to_text() == oracle(dep).to_text() {
            exact += 1;
        }
    }
    println!(
        "[{tag}] final uf1 {uf1:.4} lf1 {lf1:.4}  exact {exact}/50  total {}s",
        start.elapsed().as_secs()
    );
}

fn repr(word: usize, pos: usize, lemma: usize, chars: (usize, usize)) -> NetworkConfig {
    let mut cfg = NetworkConfig::default();
    cfg.repr.word_dim = word;
    cfg.repr.pos_dim = pos;
    cfg.repr.lemma_dim = lemma;
    cfg.repr.char_dim = chars.0;
    cfg.repr.char_filters = chars.1;
    cfg
}

#[test]
#[ignore]
fn memo_a() {
    let mut cfg = repr(64, 16, 32, (16, 32));
    cfg.encoder_hidden = 64;
    cfg.encoder_layers = 1;
    cfg.decoder_hidden = 64;
    cfg.arc_dim = 256;
    cfg.label_dim = 128;
    run("A 1x64 arc256", cfg);
}

#[test]
#[ignore]
fn memo_b() {
    let mut cfg = repr(64, 16, 32, (16, 32));
    cfg.encoder_hidden = 64;
    cfg.encoder_layers = 2;
    cfg.decoder_hidden = 64;
    cfg.arc_dim = 256;
    cfg.label_dim = 128;
    run("B 2x64 arc256", cfg);
}

#[test]
#[ignore]
fn memo_c() {
    let mut cfg = repr(128, 32, 48, (16, 32));
    cfg.encoder_hidden = 96;
    cfg.encoder_layers = 1;
    cfg.decoder_hidden = 96;
    cfg.arc_dim = 384;
    cfg.label_dim = 192;
    run("C 1x96 arc384", cfg);
}
