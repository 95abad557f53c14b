//! Confidence-gated N-best rescoring with predicted translation quality.
//!
//! Utterances whose rank-1 ASR confidence falls in the lowest
//! `gate_quantile` fraction are rescored: ASR totals and QE predictions are
//! min-max normalized within the list and mixed linearly. All other
//! utterances keep their rank-1 hypothesis.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::{Hypothesis, NBestList, Sentence};
use crate::error::{Error, Result};
use crate::metrics::{sentence_bleu, wer};
use crate::qe::{FeatureTable, GpModel};
use crate::select::fraction_count;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_GATE_QUANTILE: f64 = 0.55;
pub const DEFAULT_DEPTH: usize = 10;
pub const DECISION_HEADER: &str = "utt_id\tgated\tconfidence\tchosen_rank";

#[derive(Debug, Clone, PartialEq)]
pub struct RescoreConfig {
    /// Weight of the normalized ASR score; `1 - alpha` goes to QE.
    pub alpha: f64,
    /// Fraction of utterances, lowest confidence first, that are rescored.
    pub gate_quantile: f64,
    pub depth: usize,
}

impl Default for RescoreConfig {
    fn default() -> Self {
        RescoreConfig {
            alpha: DEFAULT_ALPHA,
            gate_quantile: DEFAULT_GATE_QUANTILE,
            depth: DEFAULT_DEPTH,
        }
    }
}

impl RescoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be in [0,1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.gate_quantile) {
            return Err(Error::InvalidArgument(format!(
                "gate quantile must be in [0,1], got {}",
                self.gate_quantile
            )));
        }
        if self.depth == 0 {
            return Err(Error::InvalidArgument("N-best depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescoreDecision {
    pub utt_id: String,
    pub gated: bool,
    /// Rank-1 confidence.
    pub confidence: f64,
    pub chosen_rank: u32,
    /// Combined score per hypothesis; empty when not gated.
    pub combined: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescoreOutput {
    pub hypotheses: Vec<Sentence>,
    pub decisions: Vec<RescoreDecision>,
}

impl RescoreOutput {
    /// Decision log TSV with header.
    pub fn decision_log(&self) -> String {
        let mut out = format!("{DECISION_HEADER}\n");
        for d in &self.decisions {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                d.utt_id,
                u8::from(d.gated),
                d.confidence,
                d.chosen_rank
            );
        }
        out
    }
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// `alpha * asr_norm + (1 - alpha) * qe_norm` per hypothesis, where both
/// terms are min-max normalized within the list (a constant column maps to 0).
pub fn combine_scores(list: &NBestList, qe: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if qe.len() != list.len() {
        return Err(Error::InvalidArgument(format!(
            "utterance {}: {} hypotheses but {} QE predictions",
            list.utt_id(),
            list.len(),
            qe.len()
        )));
    }
    let totals: Vec<f64> = list.hypotheses().iter().map(|h| h.total).collect();
    let asr = min_max(&totals);
    let q = min_max(qe);
    Ok(asr.iter().zip(&q).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect())
}

/// Index of the maximum; the earliest (best-ranked) wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Utterance indices that fall inside the gate: the `ceil(q * U)` lowest
/// rank-1 confidences, ties broken by position. Larger quantiles give supersets.
pub fn gated_utterances(lists: &[NBestList], gate_quantile: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..lists.len()).collect();
    order.sort_by(|&a, &b| {
        lists[a]
            .best()
            .confidence
            .total_cmp(&lists[b].best().confidence)
            .then(a.cmp(&b))
    });
    let k = fraction_count(gate_quantile, lists.len());
    let mut gated = vec![false; lists.len()];
    for &i in &order[..k] {
        gated[i] = true;
    }
    gated
}

/// Rescores every gated utterance. `predictions[u]` holds one QE prediction
/// per hypothesis of `lists[u]` truncated to `config.depth`.
pub fn gate_and_rescore(
    lists: &[NBestList],
    predictions: &[Vec<f64>],
    config: &RescoreConfig,
) -> Result<RescoreOutput> {
    config.validate()?;
    if predictions.len() != lists.len() {
        return Err(Error::InvalidArgument(format!(
            "{} N-best lists but {} prediction sets",
            lists.len(),
            predictions.len()
        )));
    }
    let gated = gated_utterances(lists, config.gate_quantile);
    let results: Vec<(Sentence, RescoreDecision)> = lists
        .par_iter()
        .zip(predictions)
        .zip(&gated)
        .map(|((list, qe), &gated)| {
            let list = list.truncated(config.depth);
            let (rank, combined) = if gated {
                let qe = qe.get(..list.len()).unwrap_or(qe);
                let combined = combine_scores(&list, qe, config.alpha)?;
                (argmax(&combined) + 1, combined)
            } else {
                (1, Vec::new())
            };
            let chosen = &list.hypotheses()[rank - 1];
            Ok((
                chosen.tokens.clone(),
                RescoreDecision {
                    utt_id: list.utt_id().to_owned(),
                    gated,
                    confidence: list.best().confidence,
                    chosen_rank: rank as u32,
                    combined,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (hypotheses, decisions) = results.into_iter().unzip();
    Ok(RescoreOutput { hypotheses, decisions })
}

/// QE predictive means for every hypothesis (up to `depth`) of every list,
/// looked up in `features` by `utt_id:rank`.
pub fn qe_predictions(
    model: &GpModel,
    features: &FeatureTable,
    lists: &[NBestList],
    depth: usize,
) -> Result<Vec<Vec<f64>>> {
    let columns = features.select_columns(model.feature_names())?;
    let index: HashMap<&str, usize> = columns.keys.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    lists
        .par_iter()
        .map(|list| {
            list.hypotheses()
                .iter()
                .take(depth)
                .map(|h| {
                    let key = format!("{}:{}", h.utt_id, h.rank);
                    let row = index
                        .get(key.as_str())
                        .ok_or_else(|| Error::Structure(format!("no feature row for {key}")))?;
                    Ok(model.predict(&columns.rows[*row])?.0)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMetric {
    SentenceBleu,
    /// Fewest word errors.
    Wer,
}

impl OracleMetric {
    /// Higher is better.
    pub fn score(self, reference: &Sentence, hyp: &Hypothesis) -> f64 {
        match self {
            OracleMetric::SentenceBleu => sentence_bleu(reference.tokens(), hyp.tokens.tokens(), 4),
            OracleMetric::Wer => -(wer(reference.tokens(), hyp.tokens.tokens()).errors() as f64),
        }
    }
}

/// Per utterance, the rank of the hypothesis that scores best against its
/// reference; ties go to the better-ranked hypothesis.
pub fn oracle_select(
    lists: &[NBestList],
    references: &HashMap<String, Sentence>,
    metric: OracleMetric,
) -> Result<Vec<u32>> {
    lists
        .par_iter()
        .map(|list| {
            let reference = references
                .get(list.utt_id())
                .ok_or_else(|| Error::Structure(format!("no reference for utterance {}", list.utt_id())))?;
            let scores: Vec<f64> = list.hypotheses().iter().map(|h| metric.score(reference, h)).collect();
            Ok(argmax(&scores) as u32 + 1)
        })
        .collect()
}
