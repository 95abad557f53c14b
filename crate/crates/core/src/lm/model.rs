use std::collections::HashMap;
use std::f64::consts::LN_10;

use super::counts::{count_ngrams, CountTable, NGram};
use super::LanguageModel;
use crate::corpus::{Sentence, Vocabulary, WordId};

/// log10 value ARPA files use for impossible events such as `P(<s>)`.
pub const LOG10_ZERO: f64 = -99.0;

/// Largest single discount used when counts-of-counts are degenerate.
pub const MAX_FALLBACK_DISCOUNT: f64 = 0.999;

/// Single discount used when an order has no n-gram with count one, where
/// `Y` would be zero and leave no mass for unseen events.
pub const NO_SINGLETON_DISCOUNT: f64 = 0.5;

/// Probability and optional back-off weight of one stored n-gram, natural log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramEntry {
    pub ln_prob: f64,
    /// Absent means a weight of one.
    pub ln_backoff: Option<f64>,
}

/// Back-off n-gram model.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    /// `tables[k]` holds the (k+1)-grams.
    tables: Vec<HashMap<NGram, NGramEntry>>,
}

/// Modified Kneser-Ney discounts for counts 1, 2 and 3+.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub one: f64,
    pub two: f64,
    pub three_plus: f64,
}

impl Discounts {
    /// Three-discount estimate from `[n1, n2, n3, n4]`; falls back to a single
    /// discount `Y = n1 / (n1 + 2 n2)` when any count-of-count is zero or a
    /// discount would be negative. Without singletons the single discount is
    /// [`NO_SINGLETON_DISCOUNT`].
    pub fn from_counts_of_counts(coc: [u64; 4]) -> Self {
        let [n1, n2, n3, n4] = coc.map(|c| c as f64);
        let y = if n1 + 2.0 * n2 > 0.0 { n1 / (n1 + 2.0 * n2) } else { 0.0 };
        if n1 > 0.0 && n2 > 0.0 && n3 > 0.0 && n4 > 0.0 {
            let d = Discounts {
                one: 1.0 - 2.0 * y * n2 / n1,
                two: 2.0 - 3.0 * y * n3 / n2,
                three_plus: 3.0 - 4.0 * y * n4 / n3,
            };
            if d.one >= 0.0 && d.two >= 0.0 && d.three_plus >= 0.0 {
                return d;
            }
        }
        let single = if n1 == 0.0 {
            NO_SINGLETON_DISCOUNT
        } else {
            y.clamp(0.0, MAX_FALLBACK_DISCOUNT)
        };
        Discounts {
            one: single,
            two: single,
            three_plus: single,
        }
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.one,
            2 => self.two,
            _ => self.three_plus,
        }
    }
}

impl NGramModel {
    pub(crate) fn from_tables(order: usize, vocab: Vocabulary, tables: Vec<HashMap<NGram, NGramEntry>>) -> Self {
        debug_assert_eq!(tables.len(), order);
        NGramModel { order, vocab, tables }
    }

    /// Counts `corpus` and estimates a modified Kneser-Ney model.
    pub fn train(corpus: &[Sentence], order: usize, vocab: &Vocabulary) -> Self {
        estimate_mkn(&count_ngrams(corpus, order, vocab))
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Entries of order `n` (1-based).
    pub fn table(&self, n: usize) -> &HashMap<NGram, NGramEntry> {
        &self.tables[n - 1]
    }

    pub(crate) fn tables_mut(&mut self) -> &mut Vec<HashMap<NGram, NGramEntry>> {
        &mut self.tables
    }

    pub fn entry(&self, gram: &[WordId]) -> Option<&NGramEntry> {
        self.tables.get(gram.len().checked_sub(1)?)?.get(gram)
    }

    pub fn num_entries(&self) -> usize {
        self.tables.iter().map(HashMap::len).sum()
    }

    /// Natural-log back-off weight of a context (zero when it is not stored).
    pub fn ln_backoff(&self, context: &[WordId]) -> f64 {
        if context.is_empty() {
            return 0.0;
        }
        self.entry(context).and_then(|e| e.ln_backoff).unwrap_or(0.0)
    }

    /// Back-off query in natural log. Contexts longer than `N-1` are truncated
    /// to their most recent words.
    pub fn ln_prob_ids(&self, context: &[WordId], word: WordId) -> f64 {
        let keep = context.len().min(self.order - 1);
        let mut ctx = &context[context.len() - keep..];
        let mut key: Vec<WordId> = Vec::with_capacity(keep + 1);
        let mut acc = 0.0;
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx.len()].get(key.as_slice()) {
                return acc + e.ln_prob;
            }
            if ctx.is_empty() {
                return acc + self.missing_unigram(word);
            }
            acc += self.ln_backoff(ctx);
            ctx = &ctx[1..];
        }
    }

    fn missing_unigram(&self, word: WordId) -> f64 {
        if word != WordId::UNKNOWN {
            if let Some(e) = self.tables[0].get([WordId::UNKNOWN].as_slice()) {
                return e.ln_prob;
            }
        }
        LOG10_ZERO * LN_10
    }

    /// log10 P(word | context) with string tokens; OOV words score as `<unk>`.
    pub fn score<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let ctx: Vec<WordId> = context.iter().map(|w| self.word_id(w.as_ref())).collect();
        self.ln_prob_ids(&ctx, self.vocab.id_or_unk(word)) / LN_10
    }

    fn word_id(&self, w: &str) -> WordId {
        self.vocab.id_or_unk(w)
    }

    /// Stored contexts: every entry of order `< N` carrying a back-off weight.
    pub fn contexts(&self) -> impl Iterator<Item = &[WordId]> {
        self.tables[..self.order - 1]
            .iter()
            .flat_map(|t| t.iter().filter(|(_, e)| e.ln_backoff.is_some()).map(|(g, _)| &g[..]))
    }

    /// Sum of `P(w | context)` over every predictable word.
    pub fn conditional_mass(&self, context: &[WordId]) -> f64 {
        self.vocab
            .predictable()
            .map(|w| self.ln_prob_ids(context, w).exp())
            .sum()
    }
}

impl LanguageModel for NGramModel {
    fn order(&self) -> usize {
        self.order
    }

    fn sentence_ln_probs(&self, sentence: &Sentence) -> Vec<f64> {
        let ids = self.vocab.encode_padded(sentence);
        (1..ids.len())
            .map(|i| {
                let start = i.saturating_sub(self.order - 1);
                self.ln_prob_ids(&ids[start..i], ids[i])
            })
            .collect()
    }
}

/// Interpolated modified Kneser-Ney estimate converted to back-off form.
///
/// The unigram level interpolates with the uniform distribution over the
/// predictable vocabulary so that every word, `<unk>` included, has mass.
/// Each stored context's back-off weight is its interpolation weight.
pub fn estimate_mkn(counts: &CountTable) -> NGramModel {
    let order = counts.order();
    let vocab = counts.vocab().clone();
    let predictable = (vocab.len() - 1) as f64;
    let mut model = NGramModel {
        order,
        vocab,
        tables: vec![HashMap::new(); order],
    };

    for n in 1..=order {
        let discounts = Discounts::from_counts_of_counts(counts.counts_of_counts(n));
        let mut by_context: HashMap<&[WordId], Vec<(WordId, u64)>> = HashMap::new();
        for (gram, a) in counts.adjusted(n) {
            if a > 0 {
                by_context.entry(&gram[..n - 1]).or_default().push((gram[n - 1], a));
            }
        }

        let mut new_entries: Vec<(NGram, f64)> = Vec::new();
        let mut backoffs: Vec<(&[WordId], f64)> = Vec::new();
        let mut unigram_gamma = 1.0;
        for (ctx, exts) in &by_context {
            let total: u64 = exts.iter().map(|e| e.1).sum();
            let total = total as f64;
            let mut n_by_bin = [0u64; 3];
            for &(_, a) in exts {
                n_by_bin[(a.min(3) - 1) as usize] += 1;
            }
            let gamma = (discounts.one * n_by_bin[0] as f64
                + discounts.two * n_by_bin[1] as f64
                + discounts.three_plus * n_by_bin[2] as f64)
                / total;
            for &(w, a) in exts {
                let lower = if n == 1 {
                    1.0 / predictable
                } else {
                    model.ln_prob_ids(&ctx[1..], w).exp()
                };
                let p = (a as f64 - discounts.for_count(a)).max(0.0) / total + gamma * lower;
                let mut gram = ctx.to_vec();
                gram.push(w);
                new_entries.push((gram.into(), p.ln()));
            }
            if n == 1 {
                unigram_gamma = gamma;
            } else {
                backoffs.push((ctx, gamma.ln()));
            }
        }

        let table = &mut model.tables[n - 1];
        for (gram, ln_prob) in new_entries {
            table.insert(
                gram,
                NGramEntry {
                    ln_prob,
                    ln_backoff: None,
                },
            );
        }
        if n == 1 {
            let unseen = (unigram_gamma / predictable).ln();
            for w in model.vocab.predictable() {
                table.entry(Box::new([w])).or_insert(NGramEntry {
                    ln_prob: unseen,
                    ln_backoff: None,
                });
            }
            table.insert(
                Box::new([WordId::START]),
                NGramEntry {
                    ln_prob: LOG10_ZERO * LN_10,
                    ln_backoff: None,
                },
            );
        } else {
            let lower = &mut model.tables[n - 2];
            for (ctx, ln_bow) in backoffs {
                if let Some(e) = lower.get_mut(ctx) {
                    e.ln_backoff = Some(ln_bow);
                } else {
                    debug_assert!(false, "context without a lower-order entry");
                }
            }
        }
    }
    model
}
