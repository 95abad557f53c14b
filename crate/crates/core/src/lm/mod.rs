//! Back-off n-gram language models.
//!
//! Models are estimated with interpolated modified Kneser-Ney smoothing
//! ([`estimate_mkn`]), stored in back-off form with natural-log values, and
//! serialized as ARPA text (log10). [`interpolate`] tunes linear mixture
//! weights by EM and [`prune`] applies relative-entropy pruning.

mod arpa;
mod counts;
mod interp;
mod model;
mod prune;

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::corpus::Sentence;

pub use arpa::{format_arpa, parse_arpa, read_arpa, write_arpa};
pub use counts::{count_ngrams, CountTable, NGram};
pub use interp::{interpolate, EmConfig, EmTrace, InterpolatedModel, InterpolationWeights};
pub use model::{
    estimate_mkn, Discounts, NGramEntry, NGramModel, LOG10_ZERO, MAX_FALLBACK_DISCOUNT, NO_SINGLETON_DISCOUNT,
};
pub use prune::prune;

/// A conditional word model that can score whole sentences.
pub trait LanguageModel: Sync {
    fn order(&self) -> usize;

    /// Natural-log probability of every predicted event of the sentence: each
    /// token, then `</s>`, with `<s>` padding as the initial history.
    fn sentence_ln_probs(&self, sentence: &Sentence) -> Vec<f64>;
}

/// Per-word cross-entropy in bits: `-(1 / (I + 1)) * sum log2 p` over the
/// `I` tokens plus the sentence end.
pub fn cross_entropy<M: LanguageModel + ?Sized>(model: &M, sentence: &Sentence) -> f64 {
    let lps = model.sentence_ln_probs(sentence);
    -lps.iter().sum::<f64>() / (lps.len() as f64 * LN_2)
}

/// Total natural-log likelihood and event count over a corpus. Sentences are
/// scored in parallel; the reduction runs in corpus order.
pub fn corpus_ln_likelihood<M: LanguageModel + ?Sized>(model: &M, corpus: &[Sentence]) -> (f64, usize) {
    let parts: Vec<(f64, usize)> = corpus
        .par_iter()
        .map(|s| {
            let lps = model.sentence_ln_probs(s);
            (lps.iter().sum::<f64>(), lps.len())
        })
        .collect();
    parts.into_iter().fold((0.0, 0), |(l, n), (dl, dn)| (l + dl, n + dn))
}

/// Corpus perplexity `2^H` with `H` aggregated over all predicted events.
pub fn perplexity<M: LanguageModel + ?Sized>(model: &M, corpus: &[Sentence]) -> f64 {
    let (ll, events) = corpus_ln_likelihood(model, corpus);
    if events == 0 {
        return 1.0;
    }
    (-ll / events as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every event has the same probability.
    struct Flat(f64);

    impl LanguageModel for Flat {
        fn order(&self) -> usize {
            1
        }

        fn sentence_ln_probs(&self, sentence: &Sentence) -> Vec<f64> {
            vec![self.0.ln(); sentence.len() + 1]
        }
    }

    #[test]
    fn uniform_cross_entropy() {
        let h = cross_entropy(&Flat(0.1), &Sentence::parse("x"));
        assert!((h - 10f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_model_has_zero_entropy() {
        assert_eq!(cross_entropy(&Flat(1.0), &Sentence::parse("a b c")), 0.0);
        assert_eq!(cross_entropy(&Flat(1.0), &Sentence::default()), 0.0);
    }

    #[test]
    fn uniform_perplexity() {
        let c: Vec<Sentence> = ["a b", "", "c d e f"].iter().map(|l| Sentence::parse(l)).collect();
        assert!((perplexity(&Flat(0.1), &c) - 10.0).abs() < 1e-9);
    }
}
