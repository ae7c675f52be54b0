//! Command-line entry points. Exit codes: 0 success, 1 usage error,
//! 2 runtime failure. Failures print `error[CODE]: message` to stderr.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::api;
use crate::config::TrainConfig;
use crate::corpus::examples::split_by_story;
use crate::corpus::raw::SENTENCES_PER_STORY;
use crate::corpus::{
    augment_corpus, build_vocab, cap_characters, character_histogram, make_all_examples, parse_corpus, sentence_scores,
    split, write_corpus, PsychLabelSpace, RawStory,
};
use crate::error::{Error, Result};
use crate::evaluation::report::evaluate;
use crate::evaluation::{AcerClassifier, AcerConfig, AcerItem, AcerPair, MatchRule, Metric, PlutchikPredictor};
use crate::generation::{rollout, Decode, GenerationRequest, DEFAULT_MAX_LEN};
use crate::model::Model;
use crate::seq2seq::Network;
use crate::training::{gradient_check, synthetic_example, train};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "socp", version, about = "Psychology-conditioned multi-character story generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Label inventory JSON; defaults to the built-in lists.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

impl LabelArgs {
    fn load(&self) -> Result<PsychLabelSpace> {
        match &self.labels {
            Some(p) => PsychLabelSpace::from_file(p),
            None => Ok(PsychLabelSpace::default()),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and write its training examples as JSONL.
    Ingest {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        #[arg(long, default_value_t = crate::corpus::MAX_CHARS)]
        max_chars: usize,
        /// Also write the vocabulary as a JSON list.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Train a model; writes model.ckpt, train_log.jsonl and report.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Extra machine-labeled stories, used for training only.
        #[arg(long)]
        augmented: Option<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Generate a story from a request file; prints the response JSON.
    Generate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        request: PathBuf,
        /// Write attention traces here instead of standard output.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score generated stories, or candidate/reference files, and write a report.
    Eval {
        #[arg(long, required_unless_present = "candidates")]
        ckpt: Option<PathBuf>,
        #[arg(long, requires = "ckpt")]
        corpus: Option<PathBuf>,
        /// JSONL of candidate sentences (strings).
        #[arg(long, requires = "references", conflicts_with = "ckpt")]
        candidates: Option<PathBuf>,
        /// JSONL of reference sentences (strings).
        #[arg(long)]
        references: Option<PathBuf>,
        /// JSONL of ACER items for candidate/reference mode.
        #[arg(long)]
        arcs: Option<PathBuf>,
        #[arg(long, default_value = "bleu,rouge,meteor")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
        /// Trained classifier, required for `acer`.
        #[arg(long)]
        acer: Option<PathBuf>,
        /// argmax | topk:K | jaccard:T
        #[arg(long, default_value = "argmax")]
        rule: String,
        /// Evaluate every story instead of the held-out split.
        #[arg(long)]
        all: bool,
    },
    /// Compare analytic and finite-difference gradients on a micro model.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 12)]
        vocab: usize,
        #[arg(long, default_value_t = 2)]
        characters: usize,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Serve /health, /labels and /generate.
    Serve {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Train the Plutchik classifier on an annotated corpus.
    AcerTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Label unannotated stories with a trained classifier.
    Augment {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        acer: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        labels: LabelArgs,
    },
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            EXIT_FAILURE
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest {
            raw,
            out,
            min_count,
            max_chars,
            vocab,
            labels,
        } => {
            let labels = labels.load()?;
            let stories = parse_corpus(&raw, &labels)?;
            let v = build_vocab(&stories, min_count)?;
            let examples = make_all_examples(&stories, &labels, &v, max_chars)?;
            write_jsonl(&out, &examples)?;
            if let Some(p) = vocab {
                write_json(&p, &v.tokens())?;
            }
            print_json(&serde_json::json!({
                "stories": stories.len(),
                "examples": examples.len(),
                "vocab_size": v.len(),
                "character_histogram": character_histogram(&stories).counts,
            }))
        }
        Command::Train {
            config,
            corpus,
            out,
            augmented,
            labels,
        } => {
            let cfg = TrainConfig::from_file(&config)?;
            let labels = labels.load()?;
            let model = train_command(&cfg, &corpus, augmented.as_deref(), &labels, &out)?;
            log::info!("wrote {}", out.join("model.ckpt").display());
            drop(model);
            Ok(())
        }
        Command::Generate { ckpt, request, trace } => {
            let model = Model::load(&ckpt)?;
            let body = std::fs::read(&request).map_err(|e| Error::io(&request, e))?;
            let req: GenerationRequest = api::parse_json(&body)?;
            let resp = api::generate(Some(&model), &req)?;
            match trace {
                Some(p) => {
                    write_json(&p, &resp.traces)?;
                    print_json(&serde_json::json!({"story": resp.story, "seed": resp.seed}))
                }
                None => print_json(&resp),
            }
        }
        Command::Eval {
            ckpt,
            corpus,
            candidates,
            references,
            arcs,
            metrics,
            out,
            acer,
            rule,
            all,
        } => {
            let metrics = Metric::parse_list(&metrics)?;
            let rule = parse_rule(&rule)?;
            let clf = acer.as_deref().map(AcerClassifier::load).transpose()?;
            let (cands, refs, items) = match (ckpt, candidates) {
                (Some(ckpt), _) => {
                    let corpus = corpus.ok_or_else(|| Error::InvalidRequest {
                        field: "corpus".into(),
                        reason: "--corpus is required with --ckpt".into(),
                    })?;
                    let model = Model::load(&ckpt)?;
                    generated_pairs(&model, &corpus, all)?
                }
                (None, Some(c)) => {
                    let r = references.expect("clap enforces --references");
                    let items = arcs.as_deref().map(read_jsonl::<AcerItem>).transpose()?.unwrap_or_default();
                    (read_jsonl(&c)?, read_jsonl(&r)?, items)
                }
                (None, None) => unreachable!("clap requires --ckpt or --candidates"),
            };
            let acer_input = clf.as_ref().map(|c| (c as &dyn PlutchikPredictor, items.as_slice(), rule));
            let report = evaluate(&cands, &refs, &metrics, acer_input)?;
            write_json(&out, &report)?;
            print_json(&report)
        }
        Command::Gradcheck {
            config,
            vocab,
            characters,
            tolerance,
        } => {
            let cfg = TrainConfig::from_file(&config)?;
            let net = Network::<f64>::new(cfg.clone(), vocab)?;
            let ex = synthetic_example(&cfg, vocab, characters, cfg.seed)?;
            let report = gradient_check(&net, &ex)?;
            print_json(&report)?;
            if report.max_rel_error < tolerance {
                Ok(())
            } else {
                Err(Error::GradientMismatch {
                    max_rel_error: report.max_rel_error,
                    tolerance,
                })
            }
        }
        Command::Serve { ckpt, port, host } => {
            let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|_| Error::InvalidRequest {
                field: "host".into(),
                reason: format!("`{host}:{port}` is not a socket address"),
            })?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
            rt.block_on(super::server::serve(ckpt, addr))
        }
        Command::AcerTrain {
            corpus,
            out,
            config,
            labels,
        } => {
            let labels = labels.load()?;
            let cfg: AcerConfig = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    serde_json::from_str(&text)?
                }
                None => AcerConfig::default(),
            };
            let stories = parse_corpus(&corpus, &labels)?;
            let pairs = acer_pairs(&stories, &labels)?;
            let (clf, history) = AcerClassifier::train(cfg, &pairs)?;
            clf.save(&out)?;
            let acc = clf.per_state_accuracy(&pairs)?;
            print_json(&serde_json::json!({"pairs": pairs.len(), "loss": history, "train_accuracy": acc}))
        }
        Command::Augment { raw, acer, out, labels } => {
            let labels = labels.load()?;
            let clf = AcerClassifier::load(&acer)?;
            let stories = parse_unannotated(&raw)?;
            let augmented = augment_corpus(&stories, Some(&clf), &labels)?;
            write_corpus(&out, &augmented)?;
            print_json(&serde_json::json!({"stories": augmented.len()}))
        }
    }
}

/// Unannotated stories still need five sentences and declared characters.
fn parse_unannotated(path: &Path) -> Result<Vec<RawStory>> {
    let stories: Vec<RawStory> = read_jsonl(path)?;
    let empty = PsychLabelSpace::default();
    for (i, s) in stories.iter().enumerate() {
        s.validate(&empty, i + 1)?;
    }
    Ok(stories)
}

pub fn parse_rule(s: &str) -> Result<MatchRule> {
    let bad = || Error::InvalidRequest {
        field: "rule".into(),
        reason: format!("`{s}` is not argmax, topk:K or jaccard:T"),
    };
    match s.split_once(':') {
        None if s == "argmax" => Ok(MatchRule::ArgmaxInTarget),
        Some(("topk", k)) => Ok(MatchRule::TopK {
            k: k.parse().map_err(|_| bad())?,
        }),
        Some(("jaccard", t)) => Ok(MatchRule::Jaccard {
            threshold: t.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

/// One classifier pair per annotated (sentence, character); a state is a
/// target when its aggregated score is positive.
pub fn acer_pairs(stories: &[RawStory], labels: &PsychLabelSpace) -> Result<Vec<AcerPair>> {
    let mut pairs = Vec::new();
    for s in stories {
        for a in &s.annotations {
            let scores = crate::corpus::aggregate_plutchik(&a.workers_plutchik, labels)?;
            pairs.push(AcerPair {
                character: a.character.clone(),
                sentence: s.sentences[a.sentence - 1].clone(),
                target: scores.iter().map(|&x| f32::from(x > 0.0)).collect(),
            });
        }
    }
    Ok(pairs)
}

/// Greedy rollouts of `stories` under their gold per-sentence scores.
/// Returns generated sentences, gold sentences and ACER items.
fn generated_pairs(model: &Model, corpus: &Path, all: bool) -> Result<(Vec<String>, Vec<String>, Vec<AcerItem>)> {
    let cfg = &model.net.config;
    let stories = parse_corpus(corpus, &model.labels)?;
    let stories = if all {
        stories
    } else {
        split_by_story(stories, |s| s.story_id.as_str(), cfg.split_ratio, cfg.seed).1
    };
    if stories.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut cands, mut refs, mut items) = (Vec::new(), Vec::new(), Vec::new());
    for s in &stories {
        let capped = cap_characters(s, cfg.max_chars);
        let scores = (2..=SENTENCES_PER_STORY)
            .map(|k| sentence_scores(s, &capped, k, &model.labels))
            .collect::<Result<Vec<_>>>()?;
        if scores[0].iter().all(|c| c.is_padding()) {
            continue;
        }
        let (sentences, _) = rollout(model, &s.sentences[0], &scores, Decode::Greedy, cfg.seed, DEFAULT_MAX_LEN)?;
        for (k, generated) in sentences.into_iter().enumerate().skip(1) {
            for c in &scores[k - 1] {
                items.push(AcerItem {
                    character: c.character.clone(),
                    sentence: generated.clone(),
                    target: c.plutchik.clone(),
                });
            }
            cands.push(generated);
            refs.push(s.sentences[k].clone());
        }
    }
    Ok((cands, refs, items))
}

/// Builds examples, splits, trains and writes `out/model.ckpt` (best
/// validation parameters), `out/train_log.jsonl` and `out/report.json`.
pub fn train_command(
    cfg: &TrainConfig,
    corpus: &Path,
    augmented: Option<&Path>,
    labels: &PsychLabelSpace,
    out: &Path,
) -> Result<Model> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stories = parse_corpus(corpus, labels)?;
    let extra = augmented.map(|p| parse_corpus(p, labels)).transpose()?.unwrap_or_default();
    let all: Vec<RawStory> = stories.iter().chain(&extra).cloned().collect();
    let vocab = build_vocab(&all, cfg.min_count)?;
    let examples = make_all_examples(&stories, labels, &vocab, cfg.max_chars)?;
    let (mut train_set, val_set) = split(examples, cfg.split_ratio, cfg.seed);
    train_set.extend(make_all_examples(&extra, labels, &vocab, cfg.max_chars)?);
    let mut net = Network::<f32>::new(cfg.clone(), vocab.len())?;
    if let Some(p) = &cfg.pretrained_vectors {
        let id = net.layout.embedding;
        let filled = crate::numerics::vectors::load_pretrained(p, |w| vocab.get(w), net.params.get_mut(id))?;
        log::info!("{filled} embeddings initialized from {}", p.display());
    }
    let log_path = out.join("train_log.jsonl");
    let mut log_file = BufWriter::new(File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    let report = train(&mut net, &train_set, &val_set, |entry, _, _| {
        serde_json::to_writer(&mut log_file, entry)?;
        writeln!(log_file).map_err(|e| Error::io(&log_path, e))?;
        log_file.flush().map_err(|e| Error::io(&log_path, e))
    })?;
    let model = Model::new(net, vocab, labels.clone());
    model.save(&out.join("model.ckpt"))?;
    write_json(&out.join("report.json"), &report)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["socp", "generate", "--request", "r.json"]), EXIT_USAGE);
        assert_eq!(run(["socp", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["socp", "--help"]), EXIT_OK);
    }

    #[test]
    fn runtime_errors_exit_two() {
        assert_eq!(run(["socp", "generate", "--ckpt", "/nonexistent.ckpt", "--request", "r.json"]), EXIT_FAILURE);
    }

    #[test]
    fn rules_parse() {
        assert_eq!(parse_rule("argmax").unwrap(), MatchRule::ArgmaxInTarget);
        assert_eq!(parse_rule("topk:2").unwrap(), MatchRule::TopK { k: 2 });
        assert_eq!(parse_rule("jaccard:0.5").unwrap(), MatchRule::Jaccard { threshold: 0.5 });
        assert!(parse_rule("best").is_err());
    }
}
