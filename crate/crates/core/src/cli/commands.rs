use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::corpus::{
    build_vocabulary, estimate_pronunciation_probs, load_corpus, load_lines, parse_decode_lexicon, parse_pron_counts,
    read_nbest, write_corpus, write_pron_lexicon, NBestList, Sentence, DEFAULT_MAX_VOCAB, DEFAULT_PRON_FLOOR,
};
use crate::error::{Error, Result};
use crate::lm::{self, count_ngrams, interpolate, prune, read_arpa, write_arpa, EmConfig, LanguageModel};
use crate::metrics::{bleu_with_sentences, corpus_wer, sentence_bleu, wer};
use crate::qe::{FeatureExtractor, FeatureTable, GpConfig, GpModel};
use crate::rescore::{self, gate_and_rescore, qe_predictions, RescoreConfig};
use crate::rover::{self, format_hypotheses, read_hypotheses, rover_combine};
use crate::select::{
    extract_parallel, line_search_batch, score_ced, select_fraction, train_selection_models, LineSearchConfig,
    LINE_SEARCH_ORDER,
};

use super::Outcome;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    Ok(())
}

fn load_nbest(path: &Path) -> Result<Vec<NBestList>> {
    read_nbest(path)?.collect()
}

/// Reads `utt_id<TAB>text` lines.
pub fn read_keyed(path: &Path) -> Result<Vec<(String, Sentence)>> {
    load_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let (id, text) = l
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected utt_id<TAB>text"))?;
            Ok((id.to_owned(), Sentence::parse(text)))
        })
        .collect()
}

#[derive(Debug, Args, Serialize)]
pub struct LmTrainArgs {
    /// Training text, one sentence per line (repeatable).
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Keep at most this many words, most frequent first.
    #[arg(long, default_value_t = DEFAULT_MAX_VOCAB)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Build the vocabulary from these files instead of the training text
    /// (repeatable); models meant for `lm-interp` must share one vocabulary.
    #[arg(long)]
    pub vocab_corpus: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn lm_train(a: &LmTrainArgs) -> Result<Outcome> {
    check_order(a.order)?;
    let mut corpus = Vec::new();
    for p in &a.corpus {
        corpus.extend(load_corpus(p)?);
    }
    let vocab = if a.vocab_corpus.is_empty() {
        build_vocabulary(&corpus, a.vocab_size, a.min_count)
    } else {
        let mut text = Vec::new();
        for p in &a.vocab_corpus {
            text.extend(load_corpus(p)?);
        }
        build_vocabulary(&text, a.vocab_size, a.min_count)
    };
    let counts = count_ngrams(&corpus, a.order, &vocab);
    let model = lm::estimate_mkn(&counts);
    write_arpa(&model, &a.output)?;
    let sizes: Vec<String> = (1..=a.order).map(|n| model.table(n).len().to_string()).collect();
    println!(
        "sentences={} vocabulary={} ngrams={}",
        corpus.len(),
        vocab.len(),
        sizes.join("/")
    );
    Ok(Outcome {
        inputs: a.corpus.iter().chain(&a.vocab_corpus).cloned().collect(),
        outputs: vec![a.output.clone()],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct LmEvalArgs {
    #[arg(long)]
    pub lm: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also print `line<TAB>bits_per_word` for every sentence.
    #[arg(long)]
    pub per_sentence: bool,
}

pub fn lm_eval(a: &LmEvalArgs) -> Result<Outcome> {
    let model = read_arpa(&a.lm)?;
    let corpus = load_corpus(&a.corpus)?;
    let (ll, events) = lm::corpus_ln_likelihood(&model, &corpus);
    let ppl = lm::perplexity(&model, &corpus);
    println!(
        "sentences={} events={} log10prob={:.4} perplexity={:.4}",
        corpus.len(),
        events,
        ll / std::f64::consts::LN_10,
        ppl
    );
    if a.per_sentence {
        let mut out = String::new();
        for (i, s) in corpus.iter().enumerate() {
            writeln!(out, "{}\t{:.6}", i + 1, lm::cross_entropy(&model, s)).unwrap();
        }
        print!("{out}");
    }
    Ok(Outcome {
        inputs: vec![a.lm.clone(), a.corpus.clone()],
        outputs: Vec::new(),
    })
}

#[derive(Debug, Args, Serialize)]
pub struct LmInterpArgs {
    /// Component models in ARPA format (at least two).
    #[arg(long = "lm", required = true)]
    pub lms: Vec<PathBuf>,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Weights and EM trace as JSON.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct InterpReport<'a> {
    components: &'a [PathBuf],
    weights: &'a [f64],
    log_likelihoods: &'a [f64],
    iterations: usize,
    converged: bool,
    dev_perplexity: f64,
}

pub fn lm_interp(a: &LmInterpArgs) -> Result<Outcome> {
    let models = a.lms.iter().map(read_arpa).collect::<Result<Vec<_>>>()?;
    let dev = load_corpus(&a.dev)?;
    let config = EmConfig {
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
    };
    let (mixture, trace) = interpolate(models, &dev, &config)?;
    let report = InterpReport {
        components: &a.lms,
        weights: mixture.weights().as_slice(),
        log_likelihoods: &trace.log_likelihoods,
        iterations: trace.iterations,
        converged: trace.converged,
        dev_perplexity: lm::perplexity(&mixture, &dev),
    };
    write_text(&a.output, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    let weights: Vec<String> = report.weights.iter().map(|w| format!("{w:.6}")).collect();
    println!(
        "weights={} iterations={} dev_perplexity={:.4}",
        weights.join(","),
        trace.iterations,
        report.dev_perplexity
    );
    let mut inputs = a.lms.clone();
    inputs.push(a.dev.clone());
    Ok(Outcome {
        inputs,
        outputs: vec![a.output.clone()],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct LmPruneArgs {
    #[arg(long)]
    pub lm: PathBuf,
    /// Remove n-grams whose relative-entropy change is at most this.
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn lm_prune(a: &LmPruneArgs) -> Result<Outcome> {
    let model = read_arpa(&a.lm)?;
    let pruned = prune(&model, a.threshold)?;
    write_arpa(&pruned, &a.output)?;
    println!("ngrams {} -> {}", model.num_entries(), pruned.num_entries());
    Ok(Outcome {
        inputs: vec![a.lm.clone()],
        outputs: vec![a.output.clone()],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    /// In-domain training text.
    #[arg(long)]
    pub in_domain: PathBuf,
    /// Candidate pool to select from.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Text for the out-of-domain model (default: the pool itself).
    #[arg(long)]
    pub out_domain: Option<PathBuf>,
    #[arg(long, default_value_t = LINE_SEARCH_ORDER)]
    pub order: usize,
    /// Keep this fraction of the pool, lowest cross-entropy difference first.
    #[arg(long, conflicts_with = "line_search", required_unless_present = "line_search")]
    pub fraction: Option<f64>,
    /// Pick the batch size that minimizes dev cross-entropy.
    #[arg(long, requires_all = ["dev", "grid"])]
    pub line_search: bool,
    /// In-domain dev text for the line search.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Candidate batch sizes for the line search, comma-separated.
    #[arg(long, alias = "batch-grid", value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Line-aligned target side of the pool.
    #[arg(long, requires = "target_output")]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub target_output: Option<PathBuf>,
    /// Per-line `line_index<TAB>ced<TAB>selected`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Selected pool lines, best first.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn select(a: &SelectArgs) -> Result<Outcome> {
    check_order(a.order)?;
    let in_domain = load_corpus(&a.in_domain)?;
    let pool = load_corpus(&a.corpus)?;
    let out_domain = match &a.out_domain {
        Some(p) => load_corpus(p)?,
        None => pool.clone(),
    };
    let (lm_in, lm_out) = train_selection_models(&in_domain, &out_domain, a.order);
    let scored = score_ced(&lm_in, &lm_out, &pool);
    let report = match (&a.dev, a.fraction) {
        (Some(dev), _) if a.line_search => {
            let dev = load_corpus(dev)?;
            let report = line_search_batch(&scored, &dev, &a.grid, &LineSearchConfig::default())?;
            for (k, h) in &report.batch_values {
                eprintln!("batch {k}: dev cross-entropy {h:.4} bits/word");
            }
            report
        }
        (_, Some(f)) => select_fraction(&scored, f)?,
        _ => {
            return Err(Error::InvalidArgument(
                "give --fraction or --line-search with --dev and --grid".into(),
            ))
        }
    };
    let chosen: Vec<Sentence> = report.selected().iter().map(|&i| pool[i].clone()).collect();
    write_corpus(&a.output, &chosen)?;
    let mut inputs = vec![a.in_domain.clone(), a.corpus.clone()];
    inputs.extend(a.out_domain.clone());
    if a.line_search {
        inputs.extend(a.dev.clone());
    }
    let mut outputs = vec![a.output.clone()];
    if let (Some(target), Some(out)) = (&a.target, &a.target_output) {
        let lines = load_lines(target)?;
        let picked = extract_parallel(&report, &lines)?;
        let mut text = picked.join("\n");
        if !picked.is_empty() {
            text.push('\n');
        }
        write_text(out, &text)?;
        inputs.push(target.clone());
        outputs.push(out.clone());
    }
    if let Some(path) = &a.scores {
        let mask = report.mask();
        let mut text = String::from("line_index\tced\tselected\n");
        for s in &scored {
            writeln!(text, "{}\t{}\t{}", s.index, s.ced, u8::from(mask[s.index])).unwrap();
        }
        write_text(path, &text)?;
        outputs.push(path.clone());
    }
    println!("selected {} of {} lines", report.chosen, pool.len());
    Ok(Outcome { inputs, outputs })
}

#[derive(Debug, Args, Serialize)]
pub struct RoverArgs {
    /// Hypothesis files `utt_id<TAB>word[:conf] ...`, one per system.
    #[arg(required = true)]
    pub systems: Vec<PathBuf>,
    /// Weight of vote frequency against confidence.
    #[arg(long, default_value_t = rover::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Confidence assigned to NULL arcs.
    #[arg(long, default_value_t = rover::DEFAULT_NULL_CONFIDENCE)]
    pub null_conf: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn rover(a: &RoverArgs) -> Result<Outcome> {
    let systems = a.systems.iter().map(read_hypotheses).collect::<Result<Vec<_>>>()?;
    let rows = rover_combine(&systems, a.alpha, a.null_conf)?;
    write_text(&a.output, &format_hypotheses(&rows))?;
    println!("combined {} utterances from {} systems", rows.len(), systems.len());
    Ok(Outcome {
        inputs: a.systems.clone(),
        outputs: vec![a.output.clone()],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct QeExtractArgs {
    #[arg(long)]
    pub nbest: PathBuf,
    /// Target-domain language model (ARPA).
    #[arg(long)]
    pub lm: PathBuf,
    /// Text the language model was trained on, for frequency and coverage features.
    #[arg(long)]
    pub lm_corpus: PathBuf,
    /// Feature names to keep, comma-separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, default_value_t = rescore::DEFAULT_DEPTH)]
    pub depth: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn qe_extract(a: &QeExtractArgs) -> Result<Outcome> {
    if a.depth == 0 {
        return Err(Error::InvalidArgument("N-best depth must be positive".into()));
    }
    let model = read_arpa(&a.lm)?;
    let lm_corpus = load_corpus(&a.lm_corpus)?;
    let counts = count_ngrams(&lm_corpus, model.order(), model.vocab());
    let mut extractor = FeatureExtractor::new(&model, &counts);
    if !a.features.is_empty() {
        extractor = extractor.with_features(&a.features)?;
    }
    let lists: Vec<NBestList> = load_nbest(&a.nbest)?.iter().map(|l| l.truncated(a.depth)).collect();
    let table = extractor.extract_nbest(&lists);
    table.write(&a.output)?;
    println!("{} rows x {} features", table.len(), table.names.len());
    Ok(Outcome {
        inputs: vec![a.nbest.clone(), a.lm.clone(), a.lm_corpus.clone()],
        outputs: vec![a.output.clone()],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct QeTrainArgs {
    /// Feature table from `qe-extract`.
    #[arg(long)]
    pub features: PathBuf,
    /// N-best lists the features were extracted from.
    #[arg(long)]
    pub nbest: PathBuf,
    /// Reference transcripts `utt_id<TAB>text`; targets are sentence BLEU.
    #[arg(long)]
    pub references: PathBuf,
    /// Retrain on the k most relevant features.
    #[arg(long)]
    pub select_k: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train on a seeded random subset of at most this many rows.
    #[arg(long)]
    pub max_rows: Option<usize>,
    /// Feature relevance `name<TAB>relevance`, most relevant first.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Sentence-BLEU targets for every row of `table`.
pub fn bleu_targets(
    table: &FeatureTable,
    lists: &[NBestList],
    references: &HashMap<String, Sentence>,
) -> Result<Vec<f64>> {
    let hyps: HashMap<String, &Sentence> = lists
        .iter()
        .flat_map(|l| l.hypotheses())
        .map(|h| (format!("{}:{}", h.utt_id, h.rank), &h.tokens))
        .collect();
    table
        .keys
        .iter()
        .map(|key| {
            let hyp = hyps
                .get(key)
                .ok_or_else(|| Error::Structure(format!("no N-best hypothesis for feature row {key}")))?;
            let utt = key.rsplit_once(':').map_or(key.as_str(), |(u, _)| u);
            let reference = references
                .get(utt)
                .ok_or_else(|| Error::Structure(format!("no reference for utterance {utt}")))?;
            Ok(sentence_bleu(reference.tokens(), hyp.tokens(), 4))
        })
        .collect()
}

pub fn qe_train(a: &QeTrainArgs) -> Result<Outcome> {
    let table = FeatureTable::read(&a.features)?;
    let lists = load_nbest(&a.nbest)?;
    let references: HashMap<String, Sentence> = read_keyed(&a.references)?.into_iter().collect();
    let y = bleu_targets(&table, &lists, &references)?;
    let config = GpConfig {
        restarts: a.restarts,
        seed: a.seed,
        max_rows: a.max_rows,
        ..GpConfig::default()
    };
    let mut model = GpModel::train(&table.rows, &y, &table.names, &config)?;
    let ranking = model.ranking();
    if let Some(k) = a.select_k {
        let keep = model.select_features(k)?.names();
        let sub = table.select_columns(&keep)?;
        model = GpModel::train(&sub.rows, &y, &sub.names, &config)?;
    }
    model.save(&a.output)?;
    let mut outputs = vec![a.output.clone()];
    if let Some(path) = &a.ranking {
        let mut text = String::new();
        for (name, relevance) in &ranking.entries {
            writeln!(text, "{name}\t{relevance}").unwrap();
        }
        write_text(path, &text)?;
        outputs.push(path.clone());
    }
    println!(
        "trained on {} rows, {} features, log marginal likelihood {:.4}",
        model.training_rows(),
        model.feature_names().len(),
        model.log_marginal_likelihood()
    );
    Ok(Outcome {
        inputs: vec![a.features.clone(), a.nbest.clone(), a.references.clone()],
        outputs,
    })
}

#[derive(Debug, Args, Serialize)]
pub struct QePredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// `key<TAB>mean<TAB>variance` per row.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn qe_predict(a: &QePredictArgs) -> Result<Outcome> {
    let model = GpModel::load(&a.model)?;
    let table = FeatureTable::read(&a.features)?.select_columns(model.feature_names())?;
    let predictions = model.predict_batch(&table.rows)?;
    let mut text = String::from("key\tmean\tvariance\n");
    for (key, (mean, var)) in table.keys.iter().zip(&predictions) {
        writeln!(text, "{key}\t{mean}\t{var}").unwrap();
    }
    write_text(&a.output, &text)?;
    println!("predicted {} rows", predictions.len());
    Ok(Outcome {
        inputs: vec![a.model.clone(), a.features.clone()],
        outputs: vec![a.output.clone()],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct RescoreArgs {
    #[arg(long)]
    pub nbest: PathBuf,
    #[arg(long)]
    pub qe_model: PathBuf,
    /// Feature table covering the N-best hypotheses.
    #[arg(long)]
    pub features: PathBuf,
    /// Weight of the normalized ASR score.
    #[arg(long, default_value_t = rescore::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Fraction of utterances, least confident first, that get rescored.
    #[arg(long, default_value_t = rescore::DEFAULT_GATE_QUANTILE)]
    pub gate_quantile: f64,
    #[arg(long, default_value_t = rescore::DEFAULT_DEPTH)]
    pub depth: usize,
    /// Chosen hypotheses as `utt_id<TAB>text`.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-utterance decision log (default: `<output>.decisions.tsv`).
    #[arg(long)]
    pub decisions: Option<PathBuf>,
}

pub fn rescore(a: &RescoreArgs) -> Result<Outcome> {
    let config = RescoreConfig {
        alpha: a.alpha,
        gate_quantile: a.gate_quantile,
        depth: a.depth,
    };
    config.validate()?;
    let lists: Vec<NBestList> = load_nbest(&a.nbest)?.iter().map(|l| l.truncated(a.depth)).collect();
    let model = GpModel::load(&a.qe_model)?;
    let table = FeatureTable::read(&a.features)?;
    let predictions = qe_predictions(&model, &table, &lists, a.depth)?;
    let out = gate_and_rescore(&lists, &predictions, &config)?;
    let rows: Vec<(String, Vec<String>)> = out
        .decisions
        .iter()
        .zip(&out.hypotheses)
        .map(|(d, h)| (d.utt_id.clone(), h.tokens().to_vec()))
        .collect();
    write_text(&a.output, &format_hypotheses(&rows))?;
    let decisions = a.decisions.clone().unwrap_or_else(|| {
        let mut name = a.output.file_name().map(std::ffi::OsString::from).unwrap_or_default();
        name.push(".decisions.tsv");
        a.output.with_file_name(name)
    });
    write_text(&decisions, &out.decision_log())?;
    let gated = out.decisions.iter().filter(|d| d.gated).count();
    let changed = out.decisions.iter().filter(|d| d.chosen_rank != 1).count();
    println!("rescored {gated} of {} utterances, {changed} changed", lists.len());
    Ok(Outcome {
        inputs: vec![a.nbest.clone(), a.qe_model.clone(), a.features.clone()],
        outputs: vec![a.output.clone(), decisions],
    })
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Wer,
    Bleu,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    /// Both files are `utt_id<TAB>text`, matched by id.
    #[arg(long)]
    pub keyed: bool,
    #[arg(long)]
    pub lowercase: bool,
    /// Also print a per-sentence score table.
    #[arg(long)]
    pub per_sentence: bool,
    /// Maximum BLEU n-gram order.
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
}

fn aligned_pairs(a: &ScoreArgs) -> Result<(Vec<Sentence>, Vec<Sentence>)> {
    if !a.keyed {
        return Ok((load_corpus(&a.reference)?, load_corpus(&a.hyp)?));
    }
    let refs: HashMap<String, Sentence> = read_keyed(&a.reference)?.into_iter().collect();
    let hyps = read_keyed(&a.hyp)?;
    if hyps.len() != refs.len() {
        return Err(Error::Structure(format!(
            "{} references but {} hypotheses",
            refs.len(),
            hyps.len()
        )));
    }
    let mut r = Vec::with_capacity(hyps.len());
    let mut h = Vec::with_capacity(hyps.len());
    for (id, hyp) in hyps {
        let reference = refs
            .get(&id)
            .ok_or_else(|| Error::Structure(format!("no reference for utterance {id}")))?;
        r.push(reference.clone());
        h.push(hyp);
    }
    Ok((r, h))
}

fn lowercase(s: &Sentence) -> Sentence {
    Sentence::new(s.iter().map(str::to_lowercase))
}

/// One-line summary, plus a per-sentence table when asked.
pub fn format_score(a: &ScoreArgs, refs: &[Sentence], hyps: &[Sentence]) -> Result<String> {
    let mut out = String::new();
    match a.metric {
        Metric::Wer => {
            let r = corpus_wer(refs, hyps)?;
            writeln!(
                out,
                "WER = {:.2}% (S={} D={} I={} N={})",
                100.0 * r.wer(),
                r.substitutions,
                r.deletions,
                r.insertions,
                r.reference_len
            )
            .unwrap();
            if a.per_sentence {
                out.push_str("line\terrors\tref_len\twer\n");
                for (i, (rs, hs)) in refs.iter().zip(hyps).enumerate() {
                    let s = wer(rs.tokens(), hs.tokens());
                    writeln!(out, "{}\t{}\t{}\t{:.4}", i + 1, s.errors(), s.reference_len, s.wer()).unwrap();
                }
            }
        }
        Metric::Bleu => {
            let r = bleu_with_sentences(refs, hyps, a.max_order)?;
            let precisions: Vec<String> = r.precisions.iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
            writeln!(
                out,
                "BLEU = {:.2}, {} (BP={:.3}, ratio={:.3}, hyp_len={}, ref_len={})",
                r.percent(),
                precisions.join("/"),
                r.brevity_penalty,
                r.hypothesis_len as f64 / (r.reference_len.max(1)) as f64,
                r.hypothesis_len,
                r.reference_len
            )
            .unwrap();
            if a.per_sentence {
                out.push_str("line\tbleu\n");
                for (i, s) in r.sentence_scores.iter().flatten().enumerate() {
                    writeln!(out, "{}\t{:.2}", i + 1, s).unwrap();
                }
            }
        }
    }
    Ok(out)
}

pub fn score(a: &ScoreArgs) -> Result<Outcome> {
    let (mut refs, mut hyps) = aligned_pairs(a)?;
    if a.lowercase {
        refs = refs.iter().map(lowercase).collect();
        hyps = hyps.iter().map(lowercase).collect();
    }
    print!("{}", format_score(a, &refs, &hyps)?);
    Ok(Outcome {
        inputs: vec![a.reference.clone(), a.hyp.clone()],
        outputs: Vec::new(),
    })
}

#[derive(Debug, Args, Serialize)]
pub struct PronProbsArgs {
    /// Aligned counts `word<TAB>pronunciation<TAB>count`.
    #[arg(long)]
    pub counts: PathBuf,
    /// Decoding lexicon `word<TAB>pronunciation`.
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PRON_FLOOR)]
    pub floor: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn pron_probs(a: &PronProbsArgs) -> Result<Outcome> {
    let counts = parse_pron_counts(File::open(&a.counts).map_err(|e| Error::io(&a.counts, e))?)?;
    let lexicon = parse_decode_lexicon(File::open(&a.lexicon).map_err(|e| Error::io(&a.lexicon, e))?)?;
    let probs = estimate_pronunciation_probs(&counts, &lexicon, a.floor)?;
    write_text(&a.output, &write_pron_lexicon(&probs))?;
    println!("{} words", probs.len());
    Ok(Outcome {
        inputs: vec![a.counts.clone(), a.lexicon.clone()],
        outputs: vec![a.output.clone()],
    })
}
