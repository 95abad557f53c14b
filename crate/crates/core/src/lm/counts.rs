use std::collections::HashMap;

use crate::corpus::{Sentence, Vocabulary, WordId};

pub type NGram = Box<[WordId]>;

/// Raw and Kneser-Ney adjusted n-gram statistics for orders `1..=N`.
///
/// Sentences are padded as `<s> w1 .. wI </s>`; `<s>` is never counted as a
/// unigram. Adjusted counts are raw counts at the highest order and for
/// n-grams starting with `<s>`, continuation counts (number of distinct left
/// extensions) otherwise.
#[derive(Debug, Clone)]
pub struct CountTable {
    order: usize,
    vocab: Vocabulary,
    raw: Vec<HashMap<NGram, u64>>,
    continuation: Vec<HashMap<NGram, u64>>,
    counts_of_counts: Vec<[u64; 4]>,
}

impl CountTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Raw counts of `n`-grams (1-based order).
    pub fn raw(&self, n: usize) -> &HashMap<NGram, u64> {
        &self.raw[n - 1]
    }

    /// Continuation counts of `n`-grams, for `n < N`.
    pub fn continuation(&self, n: usize) -> Option<&HashMap<NGram, u64>> {
        self.continuation.get(n - 1)
    }

    pub fn raw_count(&self, gram: &[WordId]) -> u64 {
        self.raw
            .get(gram.len().wrapping_sub(1))
            .and_then(|t| t.get(gram))
            .copied()
            .unwrap_or(0)
    }

    /// Count used by the smoothing estimator for this n-gram.
    pub fn adjusted_count(&self, gram: &[WordId]) -> u64 {
        let n = gram.len();
        if n == 0 || n > self.order {
            return 0;
        }
        if n == self.order || gram[0] == WordId::START {
            self.raw_count(gram)
        } else {
            self.continuation[n - 1].get(gram).copied().unwrap_or(0)
        }
    }

    /// `[n1, n2, n3, n4]` over adjusted counts of order `n`.
    pub fn counts_of_counts(&self, n: usize) -> [u64; 4] {
        self.counts_of_counts[n - 1]
    }

    /// Iterates `(n-gram, adjusted count)` for order `n`.
    pub fn adjusted(&self, n: usize) -> impl Iterator<Item = (&[WordId], u64)> + '_ {
        self.raw[n - 1].keys().map(move |g| (&g[..], self.adjusted_count(g)))
    }

    /// Total number of tokens observed (unigram events, `</s>` included).
    pub fn total_tokens(&self) -> u64 {
        self.raw[0].values().sum()
    }
}

/// Counts all n-grams up to `order` over `corpus`, mapping OOV tokens to `<unk>`.
pub fn count_ngrams(corpus: &[Sentence], order: usize, vocab: &Vocabulary) -> CountTable {
    assert!(order >= 1, "n-gram order must be at least 1");
    let mut raw: Vec<HashMap<NGram, u64>> = vec![HashMap::new(); order];
    for sentence in corpus {
        let ids = vocab.encode_padded(sentence);
        for n in 1..=order {
            for (start, gram) in ids.windows(n).enumerate() {
                if n == 1 && start == 0 {
                    continue;
                }
                *raw[n - 1].entry(gram.into()).or_default() += 1;
            }
        }
    }
    let mut continuation: Vec<HashMap<NGram, u64>> = vec![HashMap::new(); order - 1];
    for n in 1..order {
        let table = &mut continuation[n - 1];
        for gram in raw[n].keys() {
            *table.entry(gram[1..].into()).or_default() += 1;
        }
    }
    let mut table = CountTable {
        order,
        vocab: vocab.clone(),
        raw,
        continuation,
        counts_of_counts: vec![[0; 4]; order],
    };
    for n in 1..=order {
        let mut coc = [0u64; 4];
        for (_, c) in table.adjusted(n) {
            if (1..=4).contains(&c) {
                coc[c as usize - 1] += 1;
            }
        }
        table.counts_of_counts[n - 1] = coc;
    }
    table
}
