//! Command-line front end. Every artifact lands under `<runs_dir>/<name>/`.
//!
//! Run directories are append-only: an artifact that already exists is left
//! alone when the new content is identical and is an error otherwise, unless
//! `--force` is given.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::corpus::{BlobConfig, Corpus, FoldSplit};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_folds, ratio_sweep, results_csv, FoldResult};
use crate::model::{
    encode_checkpoint, load_checkpoint, Checkpoint, CheckpointMeta, ModelDims, ReprMode,
};
use crate::promptgen::{
    clean_text, group_tuples, render_prompt_with, text_id, AcceptedText, PromptRecord, RejectReason,
};
use crate::strategies::{effective_ratio, evaluate_fold, run_experiment, FoldRun, Strategy};
use crate::synthesis::{plan_jobs, ChatClient, ChatRequest, SynthesisRecord, TtsClient};

#[derive(Debug, Parser)]
#[command(
    name = "sersynth",
    version,
    about = "Synthetic-data augmentation pipeline for speech emotion recognition"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed for folds, initialization and the mock backends
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use the offline mock chat and TTS backends.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Folds trained in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Run name; artifacts go to `<runs_dir>/<name>/`.
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Overwrite artifacts that differ from a previous run.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render prompts and sample emotional texts.
    GenText,
    /// Synthesize every accepted text with every voice.
    GenSpeech {
        /// Defaults to `texts.jsonl` in the run directory.
        #[arg(long)]
        texts: Option<PathBuf>,
    },
    /// Train all folds with one strategy.
    Train(TrainArgs),
    /// Train over several synthetic:real ratios.
    Sweep {
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated ratios, e.g. `0,0.25,0.5,1`
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        ratios: Option<Vec<f64>>,
    },
    /// Re-evaluate saved fold checkpoints on their test sessions.
    Eval,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// baseline, random-mix, adversarial, transfer or curriculum
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    /// Synthetic items per real training item
    #[arg(long, allow_negative_numbers = true)]
    pub ratio: Option<f64>,
    /// `last` or `weighted`.
    #[arg(long, value_parser = parse_repr)]
    pub repr: Option<ReprMode>,
    /// Train on a generated blob corpus.
    #[arg(long)]
    pub blob: bool,
    /// Training epochs per fold
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size
    #[arg(long)]
    pub batch_size: Option<usize>,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_repr(s: &str) -> std::result::Result<ReprMode, String> {
    match s {
        "last" | "last_layer" | "last-layer" => Ok(ReprMode::LastLayer),
        "weighted" | "weighted_layers" | "weighted-layers" => Ok(ReprMode::WeightedLayers),
        _ => Err(format!(
            "unknown representation `{s}` (expected last or weighted)"
        )),
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let plan = &mut cfg.plan;
        if let Some(s) = self.strategy {
            plan.strategy = s;
        }
        if let Some(r) = self.ratio {
            plan.ratio = r;
        }
        if let Some(m) = self.repr {
            plan.repr_mode = m;
        }
        if let Some(e) = self.epochs {
            plan.epochs = e;
        }
        if let Some(b) = self.batch_size {
            plan.batch_size = b;
        }
        if self.blob {
            cfg.corpus.manifest = None;
            cfg.corpus.blob.get_or_insert_with(BlobConfig::default);
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Train(t) | Command::Sweep { train: t, .. } => t.apply(&mut cfg),
        _ => {}
    }
    if let Command::Sweep {
        ratios: Some(r), ..
    } = &cli.command
    {
        cfg.sweep_ratios = r.clone();
    }
    cfg.resolve(&Overrides {
        seed: cli.seed,
        mock: cli.mock,
        jobs: cli.jobs,
        name: cli.name.clone(),
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let out = RunDir::new(cfg.run_dir(), cli.force)?;
    match &cli.command {
        Command::GenText => {
            out.write("gen-text.config.toml", cfg.to_toml()?.as_bytes())?;
            gen_text(&cfg, &out).map(|_| ())
        }
        Command::GenSpeech { texts } => {
            out.write("gen-speech.config.toml", cfg.to_toml()?.as_bytes())?;
            let texts = texts.clone().unwrap_or_else(|| out.path("texts.jsonl"));
            gen_speech(&cfg, &out, &texts).map(|_| ())
        }
        Command::Train(_) => {
            out.write("train.config.toml", cfg.to_toml()?.as_bytes())?;
            let csv = train(&cfg, &out)?;
            print!("{csv}");
            Ok(())
        }
        Command::Sweep { .. } => {
            out.write("sweep.config.toml", cfg.to_toml()?.as_bytes())?;
            let corpus = cfg.load_corpus()?;
            let table = ratio_sweep(&corpus, &cfg.plan, &cfg.sweep_ratios, cfg.jobs)?;
            let csv = table.to_csv();
            out.write("sweep.csv", csv.as_bytes())?;
            print!("{csv}");
            Ok(())
        }
        Command::Eval => {
            let csv = eval(&out)?;
            print!("{csv}");
            Ok(())
        }
    }
}

/// Append-only view of a run directory.
pub struct RunDir {
    root: PathBuf,
    force: bool,
}

impl RunDir {
    pub fn new(root: PathBuf, force: bool) -> Result<Self> {
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root, force })
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes `bytes` unless an identical file is already there.
    pub fn write(&self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
        let path = self.path(rel);
        if let Ok(existing) = fs::read(&path) {
            if existing == bytes {
                return Ok(());
            }
            if !self.force {
                return Err(Error::Config(format!(
                    "{} exists with different content; pass --force or choose another --name",
                    path.display()
                )));
            }
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    pub fn write_json(&self, rel: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    pub fn write_jsonl<T: Serialize>(&self, rel: impl AsRef<Path>, rows: &[T]) -> Result<()> {
        self.write(rel, &to_jsonl(rows)?)
    }
}

fn to_jsonl<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut bytes, row)?;
        bytes.push(b'\n');
    }
    Ok(bytes)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Validation(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(rows)
}

/// Counts from one `gen-text` run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextSummary {
    pub prompts: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
}

pub fn gen_text(cfg: &RunConfig, out: &RunDir) -> Result<TextSummary> {
    let tuples = group_tuples(&cfg.generation)?;
    let prompts = tuples
        .iter()
        .map(|t| {
            let p = render_prompt_with(&cfg.generation, t)?;
            Ok(PromptRecord {
                tuple: t.clone(),
                system: p.system,
                user: p.user,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.write_jsonl("prompts.jsonl", &prompts)?;

    let client = ChatClient::new(cfg.chat.clone())?;
    let samples = sample_all(&client, cfg, &prompts)?;

    let mut summary = TextSummary {
        prompts: prompts.len(),
        ..TextSummary::default()
    };
    for reason in RejectReason::ALL {
        summary.rejected.insert(reason.as_str().into(), 0);
    }
    let mut seen = HashSet::new();
    let mut accepted = Vec::new();
    for (i, (prompt, raws)) in prompts.iter().zip(&samples).enumerate() {
        for (j, raw) in raws.iter().enumerate() {
            let g = clean_text(raw, &prompt.tuple, &mut seen);
            match (g.cleaned, g.rejected_reason) {
                (Some(text), _) => accepted.push(AcceptedText {
                    id: text_id(i, j),
                    tuple: prompt.tuple.clone(),
                    text,
                }),
                (None, Some(reason)) => {
                    *summary.rejected.entry(reason.as_str().into()).or_default() += 1
                }
                (None, None) => unreachable!("a rejected text carries a reason"),
            }
        }
    }
    summary.accepted = accepted.len();
    out.write_jsonl("texts.jsonl", &accepted)?;

    println!("prompts: {}", summary.prompts);
    println!("accepted: {}", summary.accepted);
    for (reason, n) in &summary.rejected {
        println!("rejected {reason}: {n}");
    }
    Ok(summary)
}

/// Samples every prompt with up to `max_concurrent` requests in flight.
fn sample_all(
    client: &ChatClient,
    cfg: &RunConfig,
    prompts: &[PromptRecord],
) -> Result<Vec<Vec<String>>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Vec<String>>>>> =
        prompts.iter().map(|_| Mutex::new(None)).collect();
    let workers = cfg.chat.max_concurrent.min(prompts.len()).max(1);
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = prompts.get(i) else { break };
                let req = ChatRequest {
                    system: p.system.clone(),
                    user: p.user.clone(),
                    n_samples: cfg.generation.samples_per_tuple,
                    temperature: cfg.temperature,
                    model_name: cfg.model_name.clone(),
                };
                let r = client.sample(&req);
                let failed = r.is_err();
                *slots[i].lock().expect("slot lock poisoned") = Some(r);
                if failed {
                    // stop handing out new prompts
                    next.store(prompts.len(), Ordering::Relaxed);
                }
            });
        }
    });
    let mut samples = Vec::with_capacity(prompts.len());
    for slot in slots {
        match slot.into_inner().expect("slot lock poisoned") {
            Some(r) => samples.push(r?),
            None => break,
        }
    }
    // an early stop leaves trailing empty slots; surface the error that caused it
    if samples.len() < prompts.len() {
        return Err(Error::Transport {
            status: None,
            message: "text generation stopped after a failed request".into(),
        });
    }
    Ok(samples)
}

/// Counts from one `gen-speech` run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpeechSummary {
    pub planned: usize,
    pub skipped: usize,
    pub synthesized: usize,
}

/// Jobs whose id already appears in `speech/manifest.jsonl` are skipped; new
/// rows are appended after each batch so an interrupted run can resume.
pub fn gen_speech(cfg: &RunConfig, out: &RunDir, texts_path: &Path) -> Result<SpeechSummary> {
    if !texts_path.exists() {
        return Err(Error::Config(format!(
            "{} not found; run gen-text first or pass --texts",
            texts_path.display()
        )));
    }
    let texts: Vec<AcceptedText> = read_jsonl(texts_path)?;
    let jobs = plan_jobs(&texts, &cfg.voices, &cfg.styles, &out.path("speech/audio"))?;
    let manifest = out.path("speech/manifest.jsonl");
    let done: HashSet<String> = if manifest.exists() {
        read_jsonl::<SynthesisRecord>(&manifest)?
            .into_iter()
            .map(|r| r.id)
            .collect()
    } else {
        HashSet::new()
    };
    let pending: Vec<_> = jobs
        .iter()
        .filter(|j| !done.contains(&j.id))
        .cloned()
        .collect();
    let mut summary = SpeechSummary {
        planned: jobs.len(),
        skipped: jobs.len() - pending.len(),
        synthesized: 0,
    };

    let client = TtsClient::new(cfg.tts.clone())?;
    if let Some(parent) = manifest.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&manifest)
        .map_err(|e| Error::io(&manifest, e))?;
    for batch in pending.chunks(cfg.tts.max_concurrent * 8) {
        let results = client.synthesize_all(batch);
        let mut first_err = None;
        let mut rows = Vec::new();
        for (job, r) in batch.iter().zip(results) {
            match r {
                Ok(bytes) => rows.push(SynthesisRecord::new(job, bytes)),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        file.write_all(&to_jsonl(&rows)?)
            .map_err(|e| Error::io(&manifest, e))?;
        summary.synthesized += rows.len();
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    println!("planned: {}", summary.planned);
    println!("skipped: {}", summary.skipped);
    println!("synthesized: {}", summary.synthesized);
    Ok(summary)
}

#[derive(Serialize)]
struct ConfusionFile<'a> {
    labels: [&'static str; 4],
    counts: &'a [Vec<u64>],
}

fn write_fold(out: &RunDir, cfg: &RunConfig, run: &FoldRun) -> Result<()> {
    let dir = PathBuf::from(format!("fold{}", run.split.fold_index));
    out.write_json(dir.join("split.json"), &run.split)?;
    out.write_json(dir.join("synthetic_ids.json"), &run.synthetic_ids)?;
    out.write_jsonl(dir.join("epochs.jsonl"), &run.outcome.logs)?;
    out.write_json(
        dir.join("confusion.json"),
        &ConfusionFile {
            labels: crate::corpus::Label::ALL.map(|l| l.as_str()),
            counts: &run.result.confusion.counts,
        },
    )?;
    let ckpt = Checkpoint {
        model: run.outcome.model.clone(),
        domain_head: run.outcome.domain_head.clone(),
        meta: CheckpointMeta {
            strategy: cfg.plan.strategy.as_str().into(),
            epoch: run.outcome.selected_epoch,
            seed: cfg.plan.seed,
        },
    };
    out.write(dir.join("model.ckpt"), &encode_checkpoint(&ckpt)?)
}

/// Trains all folds and writes per-fold artifacts plus `results.csv`, whose
/// content is returned.
pub fn train(cfg: &RunConfig, out: &RunDir) -> Result<String> {
    let corpus = cfg.load_corpus()?;
    let runs = run_experiment(&corpus, &cfg.plan, cfg.jobs)?;
    for run in &runs {
        write_fold(out, cfg, run)?;
    }
    let results: Vec<FoldResult> = runs.into_iter().map(|r| r.result).collect();
    let csv = results_csv(
        effective_ratio(&cfg.plan),
        &aggregate_folds(&results, results.len())?,
    );
    out.write("results.csv", csv.as_bytes())?;
    Ok(csv)
}

/// Reloads the frozen training config, fold splits and checkpoints, scores
/// each checkpoint on its test session and writes `eval.csv`.
pub fn eval(out: &RunDir) -> Result<String> {
    let frozen = out.path("train.config.toml");
    if !frozen.exists() {
        return Err(Error::Config(format!(
            "{} not found; run train first",
            frozen.display()
        )));
    }
    let cfg =
        RunConfig::from_toml(&fs::read_to_string(&frozen).map_err(|e| Error::io(&frozen, e))?)?;
    let corpus = match (&cfg.corpus.manifest, &cfg.corpus.blob) {
        (None, Some(_)) => Corpus::load(&out.path("blob/manifest.jsonl"))?,
        _ => cfg.load_corpus()?,
    };
    let (layers, dims) = corpus
        .feature_shape()
        .ok_or_else(|| Error::Validation("corpus is empty".into()))?;
    let expected = ModelDims {
        layers,
        dims,
        hidden: cfg.plan.hidden,
        classes: crate::corpus::Label::ALL.len(),
    };
    let mut results = Vec::new();
    for k in 1..=crate::corpus::NUM_SESSIONS {
        let dir = out.path(format!("fold{k}"));
        let split_path = dir.join("split.json");
        let split: FoldSplit =
            serde_json::from_slice(&fs::read(&split_path).map_err(|e| Error::io(&split_path, e))?)?;
        let ckpt = load_checkpoint(&dir.join("model.ckpt"), Some(expected))?;
        results.push(evaluate_fold(&corpus, &split, &ckpt.model)?);
    }
    let csv = results_csv(
        effective_ratio(&cfg.plan),
        &aggregate_folds(&results, results.len())?,
    );
    out.write("eval.csv", csv.as_bytes())?;
    Ok(csv)
}
