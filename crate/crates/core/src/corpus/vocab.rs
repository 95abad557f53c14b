use std::collections::HashMap;

use rayon::prelude::*;

use super::Sentence;

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";
pub const UNKNOWN: &str = "<unk>";

pub const DEFAULT_MAX_VOCAB: usize = 60_000;

/// Dense word index into a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub u32);

impl WordId {
    pub const START: WordId = WordId(0);
    pub const END: WordId = WordId(1);
    pub const UNKNOWN: WordId = WordId(2);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Closed id<->word bijection. Ids 0, 1, 2 are `<s>`, `</s>`, `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, WordId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_words(std::iter::empty::<&str>())
    }
}

impl Vocabulary {
    /// Reserved symbols first, then `words` in order; duplicates are ignored.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocabulary {
            words: Vec::new(),
            ids: HashMap::new(),
        };
        for w in [SENTENCE_START, SENTENCE_END, UNKNOWN] {
            v.insert(w);
        }
        for w in words {
            v.insert(w.as_ref());
        }
        v
    }

    fn insert(&mut self, w: &str) -> WordId {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = WordId(self.words.len() as u32);
        self.words.push(w.to_owned());
        self.ids.insert(w.to_owned(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.ids.get(word).copied()
    }

    /// Maps out-of-vocabulary words to `<unk>`.
    pub fn id_or_unk(&self, word: &str) -> WordId {
        self.id(word).unwrap_or(WordId::UNKNOWN)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id.index()]
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// All ids that can be predicted by a language model (everything but `<s>`).
    pub fn predictable(&self) -> impl Iterator<Item = WordId> {
        (1..self.words.len() as u32).map(WordId)
    }

    /// Encodes a sentence as `<s> w1 .. wI </s>`.
    pub fn encode_padded(&self, sentence: &Sentence) -> Vec<WordId> {
        let mut ids = Vec::with_capacity(sentence.len() + 2);
        ids.push(WordId::START);
        ids.extend(sentence.iter().map(|w| self.id_or_unk(w)));
        ids.push(WordId::END);
        ids
    }

    /// Union of two vocabularies: `self`'s order, then new words from `other`.
    pub fn union(&self, other: &Vocabulary) -> Vocabulary {
        Vocabulary::from_words(self.words().chain(other.words()))
    }
}

/// Keeps the `max_size - 3` most frequent words with at least `min_count`
/// occurrences; equal counts are ordered lexicographically.
pub fn build_vocabulary(corpus: &[Sentence], max_size: usize, min_count: u64) -> Vocabulary {
    assert!(max_size >= 3, "vocabulary must hold the reserved symbols");
    let counts = corpus
        .par_iter()
        .fold(HashMap::<&str, u64>::new, |mut acc, s| {
            for w in s.iter() {
                *acc.entry(w).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_default() += c;
            }
            a
        });
    let mut ranked: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(w, c)| c >= min_count && ![SENTENCE_START, SENTENCE_END, UNKNOWN].contains(&w))
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - 3);
    Vocabulary::from_words(ranked.into_iter().map(|(w, _)| w))
}
