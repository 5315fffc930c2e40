//! Command-line front end. Exit codes: 0 success, 2 usage or configuration,
//! 3 I/O, 4 non-finite loss.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use raam::analysis::{
    label_unfolded, mean_bracket_f1, nearest_words, phrase_candidate_count, phrase_embedding,
    phrase_table, render_tables, Metric, PhraseOptions, TableFormat,
};
use raam::corpus::{build_vocab, segments_from_ids, tokenize, Segment, Vocab, UNK_ID};
use raam::model::{init_model, load_model, save_model, Model};
use raam::parser::{tree_to_json, unfold, Strategy};
use raam::toygrammar::{parse_gold_trees, render_corpus, strip_comments, ToyGrammar};
use raam::training::{ranking_accuracy, train, GoldSentence, TrainConfig, TrainData};
use raam::{Error, Result};

#[derive(Parser)]
#[command(name = "raam", version, about = "Association/dissociation word and phrase representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary file from corpus files.
    Vocab {
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        min_freq: u64,
    },
    /// Train a model; checkpoints the model file after every epoch.
    Train {
        #[arg(long)]
        vocab: PathBuf,
        /// Unsupervised running-text corpus files.
        #[arg(long)]
        corpus: Vec<PathBuf>,
        /// Gold-tree file for supervised training.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Held-out corpus for per-epoch evaluation.
        #[arg(long)]
        heldout: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Embedding file (`token v1 ... vd` per line) to seed W.
        #[arg(long)]
        pretrained: Option<PathBuf>,
        /// Continue from an existing model file instead of a fresh one.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// JSONL report path; defaults to `<output>.report.jsonl`.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dim: Option<usize>,
        /// Extra `key=value` config overrides.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Bracket each input line.
    Parse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Input file; standard input when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "greedy")]
        strategy: String,
        #[arg(long)]
        json: bool,
    },
    /// Nearest-neighbor tables for words or word sequences.
    Neighbors {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Queries; multi-word queries are whitespace separated.
        #[arg(required = true)]
        queries: Vec<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        phrase_len: usize,
        /// Restrict candidates to the most frequent words.
        #[arg(long)]
        top_m: Option<usize>,
        #[arg(long, default_value = "euclidean")]
        metric: String,
        #[arg(long)]
        tsv: bool,
    },
    /// Generate a corpus and gold trees from a grammar.
    Toygen {
        /// Grammar file; the bundled 50-word grammar when absent.
        #[arg(long)]
        grammar: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        sentences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_len: usize,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Bracketing F1 and corrupted-pair ranking accuracy on gold trees.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Score these bracketings instead of the model's own parses.
        #[arg(long)]
        predicted: Option<PathBuf>,
        #[arg(long, default_value = "greedy")]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Encode phrases, then unfold them by dissociation.
    Unfold {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(required = true)]
        phrases: Vec<String>,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
        #[arg(long, default_value = "euclidean")]
        metric: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Vocab {
            corpus,
            output,
            max_size,
            min_freq,
        } => cmd_vocab(&corpus, &output, max_size, min_freq),
        Command::Train {
            vocab,
            corpus,
            gold,
            heldout,
            config,
            pretrained,
            resume,
            output,
            report,
            epochs,
            seed,
            dim,
            overrides,
        } => {
            let mut cfg = match &config {
                Some(p) => TrainConfig::load(p)?,
                None => TrainConfig::default(),
            };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = dim {
                cfg.dim = d;
            }
            for kv in &overrides {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
                cfg.set(k.trim(), v.trim()).map_err(Error::Config)?;
            }
            cfg.validate()?;
            let report = report.unwrap_or_else(|| with_suffix(&output, ".report.jsonl"));
            cmd_train(TrainArgs {
                vocab: &vocab,
                corpus: &corpus,
                gold: gold.as_deref(),
                heldout: heldout.as_deref(),
                pretrained: pretrained.as_deref(),
                resume: resume.as_deref(),
                output: &output,
                report: &report,
                cfg,
            })
        }
        Command::Parse {
            model,
            vocab,
            input,
            strategy,
            json,
        } => cmd_parse(&model, &vocab, input.as_deref(), strategy.parse()?, json),
        Command::Neighbors {
            model,
            vocab,
            queries,
            k,
            phrase_len,
            top_m,
            metric,
            tsv,
        } => {
            let model = load_model(&model)?;
            let vocab = Vocab::load(&vocab)?;
            let metric: Metric = metric.parse()?;
            let format = if tsv { TableFormat::Tsv } else { TableFormat::Text };
            let tables = if phrase_len == 1 && top_m.is_none() {
                queries
                    .iter()
                    .map(|q| nearest_words(&model, &vocab, q.trim(), k, metric))
                    .collect::<Result<Vec<_>>>()?
            } else {
                let top_m = top_m.unwrap_or(vocab.num_words());
                if let Some(count) = phrase_candidate_count(top_m, phrase_len) {
                    eprintln!("enumerating {count} candidate sequences");
                }
                let mut opts = PhraseOptions::new(phrase_len, top_m, k);
                opts.metric = metric;
                let qs: Vec<Vec<&str>> = queries.iter().map(|q| q.split_whitespace().collect()).collect();
                phrase_table(&model, &vocab, &opts, &qs)?
            };
            print!("{}", render_tables(&tables, format));
            Ok(())
        }
        Command::Toygen {
            grammar,
            sentences,
            seed,
            min_len,
            max_len,
            corpus,
            gold,
        } => {
            let (g, source) = match &grammar {
                Some(p) => (
                    ToyGrammar::parse(&read_text(p)?)?,
                    p.display().to_string(),
                ),
                None => (ToyGrammar::toy50(), "bundled toy50".to_string()),
            };
            let sents = g.generate_corpus(sentences, seed, min_len, max_len)?;
            let header = vec![
                format!("grammar = {source}"),
                format!("sentences = {sentences}"),
                format!("seed = {seed}"),
                format!("min_len = {min_len}"),
                format!("max_len = {max_len}"),
            ];
            let (c, t) = render_corpus(&sents, &header);
            write_text(&corpus, &c)?;
            write_text(&gold, &t)
        }
        Command::Eval {
            model,
            vocab,
            gold,
            predicted,
            strategy,
            seed,
        } => cmd_eval(&model, &vocab, &gold, predicted.as_deref(), strategy.parse()?, seed),
        Command::Unfold {
            model,
            vocab,
            phrases,
            threshold,
            max_depth,
            metric,
        } => {
            let model = load_model(&model)?;
            let vocab = Vocab::load(&vocab)?;
            let metric: Metric = metric.parse()?;
            for p in &phrases {
                let toks = tokenize(p);
                let ids = encode_warn(&vocab, &toks);
                let root = phrase_embedding(&model, &ids)?;
                let tree = unfold(&root, &model, threshold, max_depth);
                let parsed = Strategy::default().parse(&model, &ids)?.tree.render(&toks);
                println!("{parsed}\t{}", label_unfolded(&tree, &model, &vocab, metric));
            }
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Tokens of a corpus file, skipping `#` header lines.
fn corpus_tokens(path: &Path) -> Result<Vec<String>> {
    Ok(tokenize(&strip_comments(&read_text(path)?)))
}

fn encode_warn<S: AsRef<str>>(vocab: &Vocab, toks: &[S]) -> Vec<usize> {
    toks.iter()
        .map(|t| {
            vocab.id(t.as_ref()).unwrap_or_else(|| {
                eprintln!("warning: {:?} is not in the vocabulary, using <unk>", t.as_ref());
                UNK_ID
            })
        })
        .collect()
}

fn cmd_vocab(corpus: &[PathBuf], output: &Path, max_size: usize, min_freq: u64) -> Result<()> {
    let mut tokens = Vec::new();
    for p in corpus {
        tokens.extend(corpus_tokens(p)?);
    }
    let vocab = build_vocab(tokens.iter(), max_size, min_freq)?;
    let sources: Vec<String> = corpus.iter().map(|p| p.display().to_string()).collect();
    let comments = [
        format!("corpus = {}", sources.join(" ")),
        format!("max_size = {max_size}"),
        format!("min_freq = {min_freq}"),
    ];
    write_text(output, &vocab.to_file_string_with(&comments))
}

struct TrainArgs<'a> {
    vocab: &'a Path,
    corpus: &'a [PathBuf],
    gold: Option<&'a Path>,
    heldout: Option<&'a Path>,
    pretrained: Option<&'a Path>,
    resume: Option<&'a Path>,
    output: &'a Path,
    report: &'a Path,
    cfg: TrainConfig,
}

fn cmd_train(a: TrainArgs<'_>) -> Result<()> {
    let vocab = Vocab::load(a.vocab)?;
    let cfg = a.cfg;
    let mut ids: Vec<Option<usize>> = Vec::new();
    for p in a.corpus {
        ids.extend(corpus_tokens(p)?.iter().map(|t| vocab.id(t)));
    }
    let supervised: Option<Vec<GoldSentence>> = match a.gold {
        Some(p) => Some(
            parse_gold_trees(&read_text(p)?)?
                .into_iter()
                .map(|g| GoldSentence {
                    words: vocab.encode(&g.words),
                    tree: g.tree,
                })
                .collect(),
        ),
        None => None,
    };
    let heldout: Option<Vec<Segment>> = match a.heldout {
        Some(p) => {
            let hids: Vec<Option<usize>> = corpus_tokens(p)?.iter().map(|t| vocab.id(t)).collect();
            let n = cfg.curriculum.last().expect("validated").seg_len;
            Some(segments_from_ids(&hids, n, cfg.oov_policy)?)
        }
        None => None,
    };
    let mut model: Model = match a.resume {
        Some(p) => load_model(p)?,
        None => init_model(cfg.dim, &vocab, cfg.seed, a.pretrained)?,
    };

    let sidecar = with_suffix(a.output, ".cfg");
    let mut cfg_text = format!("# training configuration for {}\n", a.output.display());
    cfg_text.push_str(&cfg.to_config_string());
    write_text(&sidecar, &cfg_text)?;
    save_model(&model, a.output)?;
    let report_file = File::create(a.report).map_err(|e| Error::Io {
        path: a.report.to_path_buf(),
        source: e,
    })?;
    let mut report = BufWriter::new(report_file);
    let io_err = |e: io::Error| Error::Io {
        path: a.report.to_path_buf(),
        source: e,
    };

    let data = TrainData {
        unsupervised: (!a.corpus.is_empty()).then_some(&ids[..]),
        supervised: supervised.as_deref(),
        heldout: heldout.as_deref(),
    };
    train(&mut model, &vocab, data, &cfg, |entry, m| {
        save_model(m, a.output)?;
        writeln!(report, "{}", entry.to_json_line()).map_err(io_err)?;
        report.flush().map_err(io_err)?;
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        eprintln!(
            "epoch {} stage {}: ranking {} reconstruction {} supervised {} held-out accuracy {}",
            entry.epoch,
            entry.stage,
            fmt(entry.mean_ranking_loss),
            fmt(entry.mean_reconstruction_loss),
            fmt(entry.mean_supervised_loss),
            fmt(entry.heldout_ranking_accuracy)
        );
        Ok(())
    })?;
    // Touch the report so an empty run still leaves the file in place.
    OpenOptions::new()
        .append(true)
        .open(a.report)
        .map_err(io_err)?;
    Ok(())
}

fn cmd_parse(model: &Path, vocab: &Path, input: Option<&Path>, strategy: Strategy, json: bool) -> Result<()> {
    let model = load_model(model)?;
    let vocab = Vocab::load(vocab)?;
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(io::stdin().lock()),
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let out_err = |e: io::Error| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Io {
            path: input.map_or_else(|| PathBuf::from("<stdin>"), Path::to_path_buf),
            source: e,
        })?;
        let toks = tokenize(&line);
        if toks.is_empty() {
            writeln!(out).map_err(out_err)?;
            continue;
        }
        let ids = encode_warn(&vocab, &toks);
        let tree = strategy.parse(&model, &ids)?.tree;
        let text = if json {
            tree_to_json(&tree, &toks)
        } else {
            tree.render(&toks)
        };
        writeln!(out, "{text}").map_err(out_err)?;
    }
    out.flush().map_err(out_err)
}

fn cmd_eval(
    model: &Path,
    vocab: &Path,
    gold: &Path,
    predicted: Option<&Path>,
    strategy: Strategy,
    seed: u64,
) -> Result<()> {
    let model = load_model(model)?;
    let vocab = Vocab::load(vocab)?;
    let sents = parse_gold_trees(&read_text(gold)?)?;
    let given = match predicted {
        Some(p) => {
            let trees = parse_gold_trees(&read_text(p)?)?;
            if trees.len() != sents.len() {
                return Err(Error::Structure(format!(
                    "{} predicted trees for {} gold trees",
                    trees.len(),
                    sents.len()
                )));
            }
            Some(trees)
        }
        None => None,
    };
    let mut preds = Vec::with_capacity(sents.len());
    let mut segs = Vec::new();
    for (i, s) in sents.iter().enumerate() {
        let ids = encode_warn(&vocab, &s.words);
        preds.push(match &given {
            Some(trees) => trees[i].tree.clone(),
            None => strategy.parse(&model, &ids)?.tree.bracketing(),
        });
        if ids.len() >= 2 {
            segs.push(Segment::new(ids));
        }
    }
    let f1 = mean_bracket_f1(preds.iter().zip(sents.iter().map(|s| &s.tree)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let acc = ranking_accuracy(&model, &segs, &vocab, None, strategy, &mut rng)?;
    println!("sentences\t{}", sents.len());
    println!("strategy\t{strategy}");
    println!("seed\t{seed}");
    println!("bracket_f1\t{f1:.6}");
    println!("ranking_accuracy\t{acc:.6}");
    Ok(())
}
