//! The `cascade` command line.
//!
//! Every pipeline stage is a subcommand. Options can also come from a TOML
//! file given with `--config`: top-level keys and keys of a table named
//! after the subcommand are turned into flags placed before the command-line
//! flags, so explicit flags win. `--threads` (or `CASCADE_THREADS`) caps
//! parallelism. Each run that writes files also writes
//! `<first output>.manifest.json` with the resolved options, SHA-256 digests
//! of all inputs, the tool version and the wall-clock duration. Commands
//! without an output file print the manifest to stderr unless `--manifest`
//! names a file.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use commands::*;

pub const THREADS_ENV: &str = "CASCADE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Text-side tools for cascaded speech translation")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: CASCADE_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with default option values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Manifest location (default: beside the first output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Train a modified Kneser-Ney n-gram model and write it as ARPA.
    LmTrain(LmTrainArgs),
    /// Perplexity and per-sentence cross-entropy of a corpus.
    LmEval(LmEvalArgs),
    /// Tune linear interpolation weights on a dev set by EM.
    LmInterp(LmInterpArgs),
    /// Relative-entropy pruning of an ARPA model.
    LmPrune(LmPruneArgs),
    /// Cross-entropy-difference data selection.
    Select(SelectArgs),
    /// ROVER combination of system outputs.
    Rover(RoverArgs),
    /// Quality-estimation features for N-best hypotheses.
    QeExtract(QeExtractArgs),
    /// Train the Gaussian-process QE model.
    QeTrain(QeTrainArgs),
    /// Predict quality for feature rows.
    QePredict(QePredictArgs),
    /// Confidence-gated N-best rescoring.
    Rescore(RescoreArgs),
    /// WER or BLEU of a hypothesis file.
    Score(ScoreArgs),
    /// Pronunciation probabilities from aligned counts.
    PronProbs(PronProbsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::LmTrain(_) => "lm-train",
            Command::LmEval(_) => "lm-eval",
            Command::LmInterp(_) => "lm-interp",
            Command::LmPrune(_) => "lm-prune",
            Command::Select(_) => "select",
            Command::Rover(_) => "rover",
            Command::QeExtract(_) => "qe-extract",
            Command::QeTrain(_) => "qe-train",
            Command::QePredict(_) => "qe-predict",
            Command::Rescore(_) => "rescore",
            Command::Score(_) => "score",
            Command::PronProbs(_) => "pron-probs",
        }
    }
}

pub const SUBCOMMANDS: [&str; 12] = [
    "lm-train",
    "lm-eval",
    "lm-interp",
    "lm-prune",
    "select",
    "rover",
    "qe-extract",
    "qe-train",
    "qe-predict",
    "rescore",
    "score",
    "pron-probs",
];

/// Files a command read and wrote.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub threads: usize,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub duration_seconds: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Expands `--config FILE` into flags inserted right after the subcommand.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = iter.next();
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(OsString::from(path));
        } else {
            out.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(out);
    };
    let path = PathBuf::from(path);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("{}: {}", path.display(), e.message())))?;
    let Some(pos) = out
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(out);
    };
    let sub = out[pos].to_string_lossy().into_owned();
    let mut injected = Vec::new();
    let mut add = |key: &str, value: &toml::Value| -> Result<()> {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                other => Err(Error::InvalidArgument(format!(
                    "config key {key}: unsupported value {other}"
                ))),
            }
        };
        match value {
            toml::Value::Boolean(true) => injected.push(OsString::from(&flag)),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    injected.push(OsString::from(&flag));
                    injected.push(OsString::from(scalar(item)?));
                }
            }
            v => {
                injected.push(OsString::from(&flag));
                injected.push(OsString::from(scalar(v)?));
            }
        }
        Ok(())
    };
    for (key, value) in &doc {
        if !value.is_table() {
            add(key, value)?;
        }
    }
    if let Some(toml::Value::Table(section)) = doc.get(&sub) {
        for (key, value) in section {
            add(key, value)?;
        }
    }
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(Error::InvalidArgument("thread count must be positive".into()));
    }
    Ok(n)
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on usage errors, 2 on data errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command inside a thread pool of the requested size and
/// writes its manifest.
pub fn run(cli: &Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start thread pool: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(&cli.command))?;
    let duration = start.elapsed().as_secs_f64();

    let target = cli
        .manifest
        .clone()
        .or_else(|| outcome.outputs.first().map(|p| manifest_path(p)));
    let manifest = RunManifest {
        subcommand: cli.command.name().to_owned(),
        config: serde_json::to_value(&cli.command)?,
        threads,
        inputs: outcome
            .inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.clone(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?,
        outputs: outcome.outputs.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        duration_seconds: duration,
    };
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    match target {
        Some(target) => std::fs::write(&target, text).map_err(|e| Error::io(&target, e))?,
        None => eprint!("{text}"),
    }
    Ok(())
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::LmTrain(a) => lm_train(a),
        Command::LmEval(a) => lm_eval(a),
        Command::LmInterp(a) => lm_interp(a),
        Command::LmPrune(a) => lm_prune(a),
        Command::Select(a) => select(a),
        Command::Rover(a) => rover(a),
        Command::QeExtract(a) => qe_extract(a),
        Command::QeTrain(a) => qe_train(a),
        Command::QePredict(a) => qe_predict(a),
        Command::Rescore(a) => rescore(a),
        Command::Score(a) => score(a),
        Command::PronProbs(a) => pron_probs(a),
    }
}
