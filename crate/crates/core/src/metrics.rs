//! Word error rate and BLEU.
//!
//! Both metrics operate on tokens exactly as given; casing and punctuation
//! are the caller's concern.

use std::collections::HashMap;

use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Edit counts of one alignment, or their sum over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WerReport {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
    /// Set when the reference is empty but the hypothesis is not; the rate
    /// is then computed against a length of one.
    pub empty_reference: bool,
}

impl WerReport {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `(S + D + I) / N`; may exceed one.
    pub fn wer(&self) -> f64 {
        if self.reference_len == 0 {
            return self.errors() as f64;
        }
        self.errors() as f64 / self.reference_len as f64
    }

    fn accumulate(&mut self, other: &WerReport) {
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.reference_len += other.reference_len;
        self.empty_reference = self.reference_len == 0 && self.errors() > 0;
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Diag,
    Del,
    Ins,
}

/// Unit-cost Levenshtein alignment. Among minimal alignments the one with
/// the fewest insertions plus deletions (most substitutions) is reported.
pub fn wer<A: AsRef<str>, B: AsRef<str>>(reference: &[A], hypothesis: &[B]) -> WerReport {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    // (edits, insertions + deletions)
    let mut cost = vec![(0u32, 0u32); (n + 1) * w];
    let mut back = vec![Op::Diag; (n + 1) * w];
    for i in 1..=n {
        cost[i * w] = (i as u32, i as u32);
        back[i * w] = Op::Del;
    }
    for j in 1..=m {
        cost[j] = (j as u32, j as u32);
        back[j] = Op::Ins;
    }
    for i in 1..=n {
        for j in 1..=m {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let (de, di) = cost[(i - 1) * w + j - 1];
            let mut best = (de + u32::from(!same), di);
            let mut op = Op::Diag;
            let (ue, ui) = cost[(i - 1) * w + j];
            let del = (ue + 1, ui + 1);
            if del < best {
                best = del;
                op = Op::Del;
            }
            let (le, li) = cost[i * w + j - 1];
            let ins = (le + 1, li + 1);
            if ins < best {
                best = ins;
                op = Op::Ins;
            }
            cost[i * w + j] = best;
            back[i * w + j] = op;
        }
    }
    let mut report = WerReport {
        reference_len: n,
        empty_reference: n == 0 && m > 0,
        ..WerReport::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match back[i * w + j] {
            Op::Diag => {
                if reference[i - 1].as_ref() != hypothesis[j - 1].as_ref() {
                    report.substitutions += 1;
                }
                i -= 1;
                j -= 1;
            }
            Op::Del => {
                report.deletions += 1;
                i -= 1;
            }
            Op::Ins => {
                report.insertions += 1;
                j -= 1;
            }
        }
    }
    report
}

/// Edits summed over line-aligned corpora before dividing.
pub fn corpus_wer(references: &[Sentence], hypotheses: &[Sentence]) -> Result<WerReport> {
    check_aligned(references.len(), hypotheses.len())?;
    let mut total = WerReport::default();
    for (r, h) in references.iter().zip(hypotheses) {
        total.accumulate(&wer(r.tokens(), h.tokens()));
    }
    Ok(total)
}

fn check_aligned(r: usize, h: usize) -> Result<()> {
    if r != h {
        return Err(Error::InvalidArgument(format!(
            "reference has {r} segments, hypothesis has {h}"
        )));
    }
    Ok(())
}

/// Corpus BLEU statistics; `bleu` is in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    pub precisions: Vec<f64>,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub brevity_penalty: f64,
    pub hypothesis_len: usize,
    pub reference_len: usize,
    pub bleu: f64,
    /// First order (1-based) with no matching n-grams, which forces BLEU to zero.
    pub zero_precision_order: Option<usize>,
    /// Smoothed sentence-level scores, when requested.
    pub sentence_scores: Option<Vec<f64>>,
}

impl BleuReport {
    pub fn percent(&self) -> f64 {
        self.bleu * 100.0
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for win in tokens.windows(n) {
            *out.entry(win.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    out
}

/// Clipped matches and hypothesis n-gram totals per order.
fn segment_stats<A: AsRef<str>, B: AsRef<str>>(
    reference: &[A],
    hypothesis: &[B],
    max_order: usize,
) -> (Vec<u64>, Vec<u64>) {
    let mut matches = vec![0; max_order];
    let mut totals = vec![0; max_order];
    for n in 1..=max_order {
        let r = ngram_counts(reference, n);
        let h = ngram_counts(hypothesis, n);
        totals[n - 1] = h.values().sum();
        matches[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    }
    (matches, totals)
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len >= ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Corpus BLEU with one reference per segment.
pub fn bleu(references: &[Sentence], hypotheses: &[Sentence], max_order: usize) -> Result<BleuReport> {
    check_aligned(references.len(), hypotheses.len())?;
    if max_order == 0 {
        return Err(Error::InvalidArgument("BLEU order must be at least 1".into()));
    }
    let mut matches = vec![0u64; max_order];
    let mut totals = vec![0u64; max_order];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (r, h) in references.iter().zip(hypotheses) {
        let (m, t) = segment_stats(r.tokens(), h.tokens(), max_order);
        for n in 0..max_order {
            matches[n] += m[n];
            totals[n] += t[n];
        }
        hyp_len += h.len();
        ref_len += r.len();
    }
    let precisions: Vec<f64> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| if t == 0 { 0.0 } else { m as f64 / t as f64 })
        .collect();
    let zero_precision_order = precisions.iter().position(|&p| p == 0.0).map(|i| i + 1);
    let bp = brevity_penalty(hyp_len, ref_len);
    let bleu = if zero_precision_order.is_some() {
        0.0
    } else {
        bp * (precisions.iter().map(|p| p.ln()).sum::<f64>() / max_order as f64).exp()
    };
    Ok(BleuReport {
        precisions,
        matches,
        totals,
        brevity_penalty: bp,
        hypothesis_len: hyp_len,
        reference_len: ref_len,
        bleu,
        zero_precision_order,
        sentence_scores: None,
    })
}

/// Corpus BLEU plus per-segment [`sentence_bleu`] scores.
pub fn bleu_with_sentences(references: &[Sentence], hypotheses: &[Sentence], max_order: usize) -> Result<BleuReport> {
    let mut report = bleu(references, hypotheses, max_order)?;
    report.sentence_scores = Some(
        references
            .iter()
            .zip(hypotheses)
            .map(|(r, h)| sentence_bleu(r.tokens(), h.tokens(), max_order))
            .collect(),
    );
    Ok(report)
}

/// Smoothed sentence BLEU on a 0-100 scale.
///
/// Orders `n >= 2` with no matching n-gram use `(m + 1) / (t + 1)`; all
/// other orders use the raw precision, so a segment with matches at every
/// order scores exactly its single-segment corpus BLEU. An empty hypothesis
/// scores zero.
pub fn sentence_bleu<A: AsRef<str>, B: AsRef<str>>(reference: &[A], hypothesis: &[B], max_order: usize) -> f64 {
    if hypothesis.is_empty() || max_order == 0 {
        return 0.0;
    }
    let (matches, totals) = segment_stats(reference, hypothesis, max_order);
    let mut log_sum = 0.0;
    for n in 0..max_order {
        let (m, t) = (matches[n] as f64, totals[n] as f64);
        let p = if n == 0 {
            if matches[0] == 0 {
                return 0.0;
            }
            m / t
        } else if matches[n] == 0 {
            (m + 1.0) / (t + 1.0)
        } else {
            m / t
        };
        log_sum += p.ln();
    }
    100.0 * brevity_penalty(hypothesis.len(), reference.len()) * (log_sum / max_order as f64).exp()
}
