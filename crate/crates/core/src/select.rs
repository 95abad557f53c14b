//! Cross-entropy-difference data selection.
//!
//! Every sentence of an out-of-domain corpus is scored as
//! `H_in(s) - H_out(s)` (bits per word); low scores look in-domain. The
//! corpus is then cut either at a fixed fraction or at the batch size whose
//! language model best fits an in-domain dev set.

use rayon::prelude::*;

use crate::corpus::{build_vocabulary, Sentence, Vocabulary, DEFAULT_MAX_VOCAB};
use crate::error::{Error, Result};
use crate::lm::{corpus_ln_likelihood, cross_entropy, LanguageModel, NGramModel};

/// Default order of the batch language models trained during line search.
pub const LINE_SEARCH_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSentence {
    pub sentence: Sentence,
    /// Line index in the scored corpus.
    pub index: usize,
    pub h_in: f64,
    pub h_out: f64,
    /// `h_in - h_out`.
    pub ced: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    /// All line indices, ascending CED, ties by line index.
    pub ranking: Vec<usize>,
    /// Number of leading entries of `ranking` that are selected.
    pub chosen: usize,
    /// `(batch size, in-domain dev cross-entropy in bits/word)` per line-search candidate.
    pub batch_values: Vec<(usize, f64)>,
    pub fraction: Option<f64>,
}

impl SelectionReport {
    pub fn selected(&self) -> &[usize] {
        &self.ranking[..self.chosen]
    }

    /// Per line index: whether it was selected.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.ranking.len()];
        for &i in self.selected() {
            mask[i] = true;
        }
        mask
    }
}

/// Scores each sentence under both models; runs in parallel, output in corpus order.
pub fn score_ced<I, O>(in_domain: &I, out_domain: &O, corpus: &[Sentence]) -> Vec<ScoredSentence>
where
    I: LanguageModel + ?Sized,
    O: LanguageModel + ?Sized,
{
    corpus
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let h_in = cross_entropy(in_domain, s);
            let h_out = cross_entropy(out_domain, s);
            ScoredSentence {
                sentence: s.clone(),
                index,
                h_in,
                h_out,
                ced: h_in - h_out,
            }
        })
        .collect()
}

/// Line indices sorted by CED, stable on index.
pub fn rank(scored: &[ScoredSentence]) -> Vec<usize> {
    let mut order: Vec<&ScoredSentence> = scored.iter().collect();
    order.sort_by(|a, b| a.ced.total_cmp(&b.ced).then(a.index.cmp(&b.index)));
    order.into_iter().map(|s| s.index).collect()
}

/// `ceil(fraction * count)`, tolerant of floating-point noise in the product.
pub(crate) fn fraction_count(fraction: f64, count: usize) -> usize {
    let exact = fraction * count as f64;
    let rounded = exact.round();
    let k = if (exact - rounded).abs() < 1e-9 {
        rounded
    } else {
        exact.ceil()
    };
    (k.max(0.0) as usize).min(count)
}

/// Keeps the `ceil(fraction * count)` lowest-CED sentences.
pub fn select_fraction(scored: &[ScoredSentence], fraction: f64) -> Result<SelectionReport> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    check_indices(scored)?;
    Ok(SelectionReport {
        ranking: rank(scored),
        chosen: fraction_count(fraction, scored.len()),
        batch_values: Vec::new(),
        fraction: Some(fraction),
    })
}

fn check_indices(scored: &[ScoredSentence]) -> Result<()> {
    if scored.iter().enumerate().any(|(i, s)| s.index != i) {
        return Err(Error::InvalidArgument(
            "scored sentences must be in corpus order".into(),
        ));
    }
    Ok(())
}

/// Line-search settings.
#[derive(Debug, Clone)]
pub struct LineSearchConfig {
    pub order: usize,
    /// Vocabulary shared by every batch model; `None` builds one from the
    /// scored corpus and the dev set.
    pub vocab: Option<Vocabulary>,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            order: LINE_SEARCH_ORDER,
            vocab: None,
        }
    }
}

/// For each candidate batch size `k`, trains a model on the `k` lowest-CED
/// sentences and measures its cross-entropy on the in-domain dev set; the
/// batch with the lowest value is chosen. Candidates are evaluated in
/// parallel and reported in grid order.
pub fn line_search_batch(
    scored: &[ScoredSentence],
    dev: &[Sentence],
    batch_grid: &[usize],
    config: &LineSearchConfig,
) -> Result<SelectionReport> {
    if dev.is_empty() {
        return Err(Error::InvalidArgument("dev corpus is empty".into()));
    }
    if batch_grid.is_empty() {
        return Err(Error::InvalidArgument("batch grid is empty".into()));
    }
    if batch_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("batch grid must be strictly increasing".into()));
    }
    if batch_grid[0] == 0 || *batch_grid.last().unwrap() > scored.len() {
        return Err(Error::InvalidArgument(format!(
            "batch sizes must lie in 1..={}",
            scored.len()
        )));
    }
    check_indices(scored)?;
    let ranking = rank(scored);
    let vocab = match &config.vocab {
        Some(v) => v.clone(),
        None => {
            let all: Vec<Sentence> = scored
                .iter()
                .map(|s| s.sentence.clone())
                .chain(dev.iter().cloned())
                .collect();
            build_vocabulary(&all, DEFAULT_MAX_VOCAB, 1)
        }
    };
    let batch_values: Vec<(usize, f64)> = batch_grid
        .par_iter()
        .map(|&k| {
            let batch: Vec<Sentence> = ranking[..k].iter().map(|&i| scored[i].sentence.clone()).collect();
            let model = NGramModel::train(&batch, config.order, &vocab);
            let (ll, events) = corpus_ln_likelihood(&model, dev);
            (k, -ll / (events as f64 * std::f64::consts::LN_2))
        })
        .collect();
    let chosen = batch_values
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|b| b.0)
        .expect("non-empty grid");
    Ok(SelectionReport {
        ranking,
        chosen,
        batch_values,
        fraction: None,
    })
}

/// Target-side lines at the selected indices, in selection order.
pub fn extract_parallel<T: Clone>(selection: &SelectionReport, target: &[T]) -> Result<Vec<T>> {
    if target.len() != selection.ranking.len() {
        return Err(Error::InvalidArgument(format!(
            "source corpus has {} lines, target has {}",
            selection.ranking.len(),
            target.len()
        )));
    }
    Ok(selection.selected().iter().map(|&i| target[i].clone()).collect())
}

/// In-domain and out-of-domain models over one shared vocabulary.
pub fn train_selection_models(
    in_domain: &[Sentence],
    out_domain: &[Sentence],
    order: usize,
) -> (NGramModel, NGramModel) {
    let all: Vec<Sentence> = in_domain.iter().chain(out_domain).cloned().collect();
    let vocab = build_vocabulary(&all, DEFAULT_MAX_VOCAB, 1);
    (
        NGramModel::train(in_domain, order, &vocab),
        NGramModel::train(out_domain, order, &vocab),
    )
}
