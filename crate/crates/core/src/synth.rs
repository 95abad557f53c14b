//! Seeded synthetic data: Markov-chain text sources, mixed-domain pools,
//! multi-system ASR outputs with controlled errors, and scored N-best lists.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Hypothesis, NBestList, Sentence};
use crate::metrics::wer;

/// A first-order Markov chain over a closed word list. Each word has a small
/// fixed set of weighted successors, so sampled text has strong bigram
/// structure that an n-gram model can learn.
#[derive(Debug, Clone)]
pub struct MarkovSource {
    words: Vec<String>,
    successors: Vec<Vec<(usize, f64)>>,
    /// Alternative spelling per state, emitted half of the time.
    homophones: Vec<Option<String>>,
    /// Probability of jumping to a uniformly random state instead of a successor.
    surprise: f64,
    min_len: usize,
    max_len: usize,
}

impl MarkovSource {
    /// `vocab_size` words named `{prefix}{i}`, `branching` successors each.
    pub fn new(prefix: &str, vocab_size: usize, branching: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<String> = (0..vocab_size).map(|i| format!("{prefix}{i}")).collect();
        let successors = (0..vocab_size)
            .map(|_| {
                let picks = rand::seq::index::sample(&mut rng, vocab_size, branching.min(vocab_size));
                let weights: Vec<f64> = (0..picks.len()).map(|_| rng.gen_range(0.2..1.0)).collect();
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                picks
                    .iter()
                    .zip(weights)
                    .map(|(w, p)| {
                        acc += p / total;
                        (w, acc)
                    })
                    .collect()
            })
            .collect();
        MarkovSource {
            homophones: vec![None; words.len()],
            surprise: 0.0,
            words,
            successors,
            min_len: 6,
            max_len: 16,
        }
    }

    pub fn with_lengths(mut self, min_len: usize, max_len: usize) -> Self {
        self.min_len = min_len.max(1);
        self.max_len = max_len.max(self.min_len);
        self
    }

    /// Lets each transition jump to a random state with probability `p`.
    pub fn with_surprise(mut self, p: f64) -> Self {
        self.surprise = p.clamp(0.0, 1.0);
        self
    }

    /// Gives a `fraction` of the states a second spelling `{word}h`. Both
    /// spellings are emitted equally often, so no text model can tell them apart.
    pub fn with_homophones(mut self, fraction: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (w, h) in self.words.iter().zip(self.homophones.iter_mut()) {
            *h = rng.gen_bool(fraction).then(|| format!("{w}h"));
        }
        self
    }

    /// Primary spellings of all states.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn index(&self, word: &str) -> Option<usize> {
        self.words
            .iter()
            .zip(&self.homophones)
            .position(|(w, h)| w == word || h.as_deref() == Some(word))
    }

    /// The other spelling of `word`, if its state has two.
    pub fn homophone(&self, word: &str) -> Option<&str> {
        let i = self.index(word)?;
        let alt = self.homophones[i].as_deref()?;
        Some(if alt == word { self.words[i].as_str() } else { alt })
    }

    /// Successor states of `word` in the chain (primary spellings).
    pub fn successors(&self, word: &str) -> Vec<&str> {
        self.index(word)
            .map(|i| {
                self.successors[i]
                    .iter()
                    .map(|&(j, _)| self.words[j].as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    fn emit<R: Rng>(&self, state: usize, rng: &mut R) -> String {
        match &self.homophones[state] {
            Some(h) if rng.gen_bool(0.5) => h.clone(),
            _ => self.words[state].clone(),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Sentence {
        let len = rng.gen_range(self.min_len..=self.max_len);
        let mut cur = rng.gen_range(0..self.words.len());
        let mut out = Vec::with_capacity(len);
        out.push(self.emit(cur, rng));
        while out.len() < len {
            if self.surprise > 0.0 && rng.gen_bool(self.surprise) {
                cur = rng.gen_range(0..self.words.len());
                out.push(self.emit(cur, rng));
                continue;
            }
            let u: f64 = rng.gen();
            let next = self.successors[cur]
                .iter()
                .find(|&&(_, c)| u <= c)
                .or(self.successors[cur].last())
                .map(|&(j, _)| j)
                .unwrap_or(cur);
            cur = next;
            out.push(self.emit(cur, rng));
        }
        Sentence::new(out)
    }

    pub fn corpus<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Sentence> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// A pool of in-domain and out-of-domain sentences plus separate in-domain
/// training and dev text.
#[derive(Debug, Clone)]
pub struct MixedDomain {
    pub pool: Vec<Sentence>,
    /// Per pool line: drawn from the in-domain source.
    pub in_domain: Vec<bool>,
    pub in_domain_train: Vec<Sentence>,
    pub dev: Vec<Sentence>,
}

/// In-domain and out-of-domain sources share no words.
pub fn mixed_domain(seed: u64, n_in: usize, n_out: usize) -> MixedDomain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src_in = MarkovSource::new("med", 200, 6, seed ^ 0x1111);
    let src_out = MarkovSource::new("gen", 400, 10, seed ^ 0x2222);
    let mut rows: Vec<(Sentence, bool)> = src_in
        .corpus(n_in, &mut rng)
        .into_iter()
        .map(|s| (s, true))
        .chain(src_out.corpus(n_out, &mut rng).into_iter().map(|s| (s, false)))
        .collect();
    rows.shuffle(&mut rng);
    let (pool, in_domain) = rows.into_iter().unzip();
    MixedDomain {
        pool,
        in_domain,
        in_domain_train: src_in.corpus(n_in.max(1) / 2 + 100, &mut rng),
        dev: src_in.corpus(200, &mut rng),
    }
}

/// Reference sentences and several systems' outputs of them.
#[derive(Debug, Clone)]
pub struct SystemOutputs {
    pub references: Vec<Sentence>,
    pub systems: Vec<Vec<Sentence>>,
}

/// Each system substitutes a different, disjoint `rate` fraction of all
/// reference word positions with a system-specific wrong word.
pub fn disjoint_corruption(seed: u64, n_sentences: usize, n_systems: usize, rate: f64) -> SystemOutputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = MarkovSource::new("w", 300, 8, seed ^ 0x3333);
    let references = src.corpus(n_sentences, &mut rng);
    let mut positions: Vec<(usize, usize)> = references
        .iter()
        .enumerate()
        .flat_map(|(s, r)| (0..r.len()).map(move |t| (s, t)))
        .collect();
    positions.shuffle(&mut rng);
    let per_system = (rate * positions.len() as f64).round() as usize;
    let systems = (0..n_systems)
        .map(|k| {
            let mut out: Vec<Vec<String>> = references.iter().map(|r| r.tokens().to_vec()).collect();
            let start = (k * per_system).min(positions.len());
            let end = ((k + 1) * per_system).min(positions.len());
            for &(s, t) in &positions[start..end] {
                out[s][t] = format!("err{k}_{}", rng.gen_range(0..50));
            }
            out.into_iter().map(Sentence::new).collect()
        })
        .collect();
    SystemOutputs { references, systems }
}

/// Knobs of the synthetic N-best generator.
#[derive(Debug, Clone)]
pub struct NBestConfig {
    pub utterances: usize,
    pub depth: usize,
    /// Probability that rank 1 equals the reference.
    pub rank1_correct: f64,
    /// Among errorful lists, probability that a better hypothesis sits below rank 1.
    pub better_below: f64,
    pub seed: u64,
}

impl Default for NBestConfig {
    fn default() -> Self {
        NBestConfig {
            utterances: 500,
            depth: 10,
            rank1_correct: 0.7,
            better_below: 0.6,
            seed: 0,
        }
    }
}

/// Scored N-best lists with their references.
#[derive(Debug, Clone)]
pub struct NBestExperiment {
    pub lists: Vec<NBestList>,
    pub references: Vec<Sentence>,
    /// Per list: rank 1 equals the reference.
    pub rank1_correct: Vec<bool>,
    /// Per list: some hypothesis below rank 1 has fewer errors than rank 1.
    pub better_below: Vec<bool>,
}

/// Word-level corruption used by the N-best generator.
struct Corruptor<'a> {
    source: &'a MarkovSource,
}

impl Corruptor<'_> {
    /// Applies `k` errors at (mostly) distinct positions. Substitutions
    /// pick either a chain-plausible word or an arbitrary word of the source.
    fn corrupt<R: Rng>(&self, tokens: &[String], k: usize, rng: &mut R) -> Vec<String> {
        let mut out = tokens.to_vec();
        let mut used = BTreeSet::new();
        for _ in 0..k {
            if out.is_empty() {
                out.push(self.random_word(rng));
                continue;
            }
            let mut pos = rng.gen_range(0..out.len());
            for _ in 0..8 {
                if !used.contains(&pos) {
                    break;
                }
                pos = rng.gen_range(0..out.len());
            }
            used.insert(pos);
            let kind: f64 = rng.gen();
            let homophone = self.source.homophone(&out[pos]).map(str::to_owned);
            if let Some(h) = homophone.filter(|_| kind < 0.35) {
                out[pos] = h;
            } else if kind < 0.7 {
                let current = out[pos].clone();
                let mut replacement = if rng.gen_bool(0.5) && pos > 0 {
                    let succ = self.source.successors(&out[pos - 1]);
                    succ.choose(rng)
                        .map(|s| s.to_string())
                        .unwrap_or_else(|| self.random_word(rng))
                } else {
                    self.random_word(rng)
                };
                while replacement == current {
                    replacement = self.random_word(rng);
                }
                out[pos] = replacement;
            } else if kind < 0.85 && out.len() > 1 {
                out.remove(pos);
            } else {
                out.insert(pos, self.random_word(rng));
            }
        }
        out
    }

    fn random_word<R: Rng>(&self, rng: &mut R) -> String {
        self.source.words().choose(rng).expect("non-empty source").clone()
    }
}

/// Builds N-best lists over references drawn from `source`.
///
/// Correct lists put the reference at rank 1 and 1-3-error variants below
/// it. Errorful lists put a 1-2-error variant at rank 1; with probability
/// `better_below` the reference appears at a random lower rank, and every
/// other entry adds further errors to rank 1. Rank-1 confidence is drawn
/// higher for correct lists than for errorful ones, with overlap.
pub fn synthetic_nbest(source: &MarkovSource, config: &NBestConfig) -> NBestExperiment {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let corruptor = Corruptor { source };
    let depth = config.depth.max(2);
    let mut lists = Vec::with_capacity(config.utterances);
    let mut references = Vec::with_capacity(config.utterances);
    let mut rank1_correct = Vec::with_capacity(config.utterances);
    let mut better_below = Vec::with_capacity(config.utterances);

    for u in 0..config.utterances {
        let reference = source.sample(&mut rng);
        let ref_tokens = reference.tokens().to_vec();
        let correct = rng.gen_bool(config.rank1_correct);
        let mut texts: Vec<Vec<String>> = Vec::with_capacity(depth);
        let mut has_better = false;
        if correct {
            texts.push(ref_tokens.clone());
            while texts.len() < depth {
                let k = rng.gen_range(1..=3);
                push_distinct(&mut texts, corruptor.corrupt(&ref_tokens, k, &mut rng));
            }
        } else {
            let first = loop {
                let k = rng.gen_range(1..=2);
                let c = corruptor.corrupt(&ref_tokens, k, &mut rng);
                if c != ref_tokens {
                    break c;
                }
            };
            let first_errors = wer(&ref_tokens, &first).errors();
            texts.push(first.clone());
            has_better = rng.gen_bool(config.better_below);
            let slot = if has_better {
                Some(rng.gen_range(1..depth.min(6)))
            } else {
                None
            };
            while texts.len() < depth {
                if Some(texts.len()) == slot {
                    texts.push(ref_tokens.clone());
                    continue;
                }
                let k = rng.gen_range(1..=2);
                let c = corruptor.corrupt(&first, k, &mut rng);
                if wer(&ref_tokens, &c).errors() > first_errors {
                    push_distinct(&mut texts, c);
                }
            }
        }

        let confidence = if correct {
            rng.gen_range(0.45..1.0)
        } else {
            rng.gen_range(0.05..0.75)
        };
        let mut total = -(40.0 + 4.0 * ref_tokens.len() as f64) - rng.gen_range(0.0..10.0);
        let utt_id = format!("utt{u:04}");
        let hyps: Vec<Hypothesis> = texts
            .into_iter()
            .enumerate()
            .map(|(i, toks)| {
                if i > 0 {
                    total -= rng.gen_range(0.1..2.0);
                }
                let lm = -(toks.len() as f64) * rng.gen_range(1.5..2.5);
                let conf = (confidence - 0.04 * i as f64 - rng.gen_range(0.0..0.05)).clamp(0.0, 1.0);
                Hypothesis {
                    utt_id: utt_id.clone(),
                    rank: i as u32 + 1,
                    acoustic: total - lm,
                    lm,
                    total,
                    confidence: if i == 0 { confidence } else { conf },
                    tokens: Sentence::new(toks),
                }
            })
            .collect();
        lists.push(NBestList::new(hyps).expect("generator keeps lists well-formed"));
        references.push(reference);
        rank1_correct.push(correct);
        better_below.push(has_better);
    }
    NBestExperiment {
        lists,
        references,
        rank1_correct,
        better_below,
    }
}

fn push_distinct(texts: &mut Vec<Vec<String>>, candidate: Vec<String>) {
    if !texts.contains(&candidate) {
        texts.push(candidate);
    }
}
