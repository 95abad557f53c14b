use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Hypothesis, NBestList, Sentence, WordId};
use crate::error::{Error, Result};
use crate::lm::{CountTable, LanguageModel, NGramModel};

/// Names of every built-in feature, in extraction order.
pub const FEATURE_NAMES: [&str; 21] = [
    "token_count",
    "mean_token_length",
    "lm_log10_prob",
    "lm_log10_prob_per_word",
    "lm_perplexity",
    "freq_quartile_1",
    "freq_quartile_2",
    "freq_quartile_3",
    "freq_quartile_4",
    "seen_bigram_fraction",
    "seen_trigram_fraction",
    "type_token_ratio",
    "oov_fraction",
    "punctuation_fraction",
    "numeric_fraction",
    "asr_acoustic_per_word",
    "asr_lm_per_word",
    "asr_total_per_word",
    "asr_confidence",
    "nbest_rank",
    "score_margin",
];

/// Source-side resources for feature extraction.
pub struct FeatureExtractor<'a> {
    lm: &'a NGramModel,
    counts: &'a CountTable,
    /// Training-frequency quartile (0..4) of each seen word; quartile 0 holds the rarest words.
    quartile: HashMap<WordId, usize>,
    enabled: Vec<usize>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(lm: &'a NGramModel, counts: &'a CountTable) -> Self {
        let mut words: Vec<(u64, &str, WordId)> = counts
            .raw(1)
            .iter()
            .filter(|(g, _)| g[0].index() > WordId::UNKNOWN.index())
            .map(|(g, &c)| (c, counts.vocab().word(g[0]), g[0]))
            .collect();
        words.sort();
        let n = words.len();
        let quartile = words
            .iter()
            .enumerate()
            .map(|(i, &(_, _, id))| (id, (4 * i / n.max(1)).min(3)))
            .collect();
        FeatureExtractor {
            lm,
            counts,
            quartile,
            enabled: (0..FEATURE_NAMES.len()).collect(),
        }
    }

    /// Restricts extraction to the named features, in the given order.
    pub fn with_features<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        self.enabled = names
            .iter()
            .map(|n| {
                FEATURE_NAMES
                    .iter()
                    .position(|f| *f == n.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown feature {:?}", n.as_ref())))
            })
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn names(&self) -> Vec<String> {
        self.enabled.iter().map(|&i| FEATURE_NAMES[i].to_owned()).collect()
    }

    /// Features of one hypothesis; `best_total` is the rank-1 total score of its list.
    pub fn extract(&self, hyp: &Hypothesis, best_total: f64) -> Vec<f64> {
        let all = self.all_features(hyp, best_total);
        self.enabled.iter().map(|&i| all[i]).collect()
    }

    fn all_features(&self, hyp: &Hypothesis, best_total: f64) -> [f64; 21] {
        let s = &hyp.tokens;
        let toks = s.tokens();
        let n = toks.len() as f64;
        let per = |x: f64| if toks.is_empty() { 0.0 } else { x / n };
        let frac = |pred: &dyn Fn(&str) -> bool| per(toks.iter().filter(|t| pred(t)).count() as f64);

        let lps = self.lm.sentence_ln_probs(s);
        let ln_total: f64 = lps.iter().sum();
        let log10_total = ln_total / std::f64::consts::LN_10;
        let events = lps.len() as f64;

        let vocab = self.lm.vocab();
        let ids: Vec<Option<WordId>> = toks.iter().map(|t| self.counts.vocab().id(t)).collect();
        let mut quartiles = [0.0; 4];
        for id in ids.iter().flatten() {
            if let Some(&q) = self.quartile.get(id) {
                quartiles[q] += 1.0;
            }
        }
        let types: HashSet<&String> = toks.iter().collect();

        [
            n,
            per(toks.iter().map(|t| t.chars().count() as f64).sum()),
            log10_total,
            log10_total / events,
            (-ln_total / events).exp(),
            per(quartiles[0]),
            per(quartiles[1]),
            per(quartiles[2]),
            per(quartiles[3]),
            self.seen_fraction(&ids, 2),
            self.seen_fraction(&ids, 3),
            per(types.len() as f64),
            frac(&|t| !vocab.contains(t)),
            frac(&|t| t.chars().all(|c| !c.is_alphanumeric())),
            frac(&|t| t.chars().any(|c| c.is_ascii_digit()) && t.parse::<f64>().is_ok()),
            hyp.acoustic / n.max(1.0),
            hyp.lm / n.max(1.0),
            hyp.total / n.max(1.0),
            hyp.confidence,
            f64::from(hyp.rank),
            best_total - hyp.total,
        ]
    }

    /// Fraction of the hypothesis' internal n-grams seen in training.
    fn seen_fraction(&self, ids: &[Option<WordId>], n: usize) -> f64 {
        if n > self.counts.order() || ids.len() < n {
            return 0.0;
        }
        let table = self.counts.raw(n);
        let windows = ids.windows(n);
        let total = windows.len() as f64;
        let seen = windows
            .filter(|w| {
                let gram: Option<Vec<WordId>> = w.iter().copied().collect();
                gram.is_some_and(|g| table.contains_key(g.as_slice()))
            })
            .count();
        seen as f64 / total
    }

    /// Features of every hypothesis, in list order; lists are processed in parallel.
    pub fn extract_nbest(&self, lists: &[NBestList]) -> FeatureTable {
        let rows: Vec<Vec<(String, Vec<f64>)>> = lists
            .par_iter()
            .map(|list| {
                let best = list.best().total;
                list.hypotheses()
                    .iter()
                    .map(|h| (format!("{}:{}", h.utt_id, h.rank), self.extract(h, best)))
                    .collect()
            })
            .collect();
        let (keys, rows) = rows.into_iter().flatten().unzip();
        FeatureTable {
            names: self.names(),
            keys,
            rows,
        }
    }
}

/// Feature rows keyed by `utt_id:rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub keys: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The named columns, in the given order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureTable> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|f| f == n.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("no feature column {:?}", n.as_ref())))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureTable {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            keys: self.keys.clone(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }

    pub fn row(&self, key: &str) -> Option<&[f64]> {
        self.keys.iter().position(|k| k == key).map(|i| self.rows[i].as_slice())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key");
        for n in &self.names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for (k, row) in self.keys.iter().zip(&self.rows) {
            out.push_str(k);
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse<R: Read>(reader: R) -> Result<FeatureTable> {
        let mut lines = BufReader::new(reader).lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            Some((_, Err(e))) => return Err(Error::io("<features>", e)),
            None => return Err(Error::parse(1, "missing feature header")),
        };
        let mut cols = header.trim_end_matches('\r').split('\t');
        if cols.next() != Some("key") {
            return Err(Error::parse(1, "feature header must start with `key`"));
        }
        let names: Vec<String> = cols.map(str::to_owned).collect();
        let mut keys = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|_| Error::Decode { line: line_no })?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let key = fields.next().unwrap_or_default().to_owned();
            let row: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(line_no, format!("not a finite number: {f:?}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != names.len() {
                return Err(Error::parse(
                    line_no,
                    format!("expected {} feature values, found {}", names.len(), row.len()),
                ));
            }
            keys.push(key);
            rows.push(row);
        }
        Ok(FeatureTable { names, keys, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<FeatureTable> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Convenience for callers holding a plain sentence rather than an N-best entry.
pub fn hypothesis_from_sentence(utt_id: &str, sentence: Sentence) -> Hypothesis {
    Hypothesis {
        utt_id: utt_id.to_owned(),
        rank: 1,
        acoustic: 0.0,
        lm: 0.0,
        total: 0.0,
        confidence: 1.0,
        tokens: sentence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use crate::lm::count_ngrams;

    fn setup(corpus: &[&str], order: usize) -> (NGramModel, CountTable) {
        let c: Vec<Sentence> = corpus.iter().map(|l| Sentence::parse(l)).collect();
        let v = build_vocabulary(&c, 1000, 1);
        let counts = count_ngrams(&c, order, &v);
        (crate::lm::estimate_mkn(&counts), counts)
    }

    fn feature(x: &FeatureExtractor, line: &str, name: &str) -> f64 {
        let h = hypothesis_from_sentence("u", Sentence::parse(line));
        let i = FEATURE_NAMES.iter().position(|f| *f == name).unwrap();
        x.extract(&h, 0.0)[i]
    }

    #[test]
    fn token_count() {
        let (m, c) = setup(&["a b c"], 2);
        let x = FeatureExtractor::new(&m, &c);
        assert_eq!(feature(&x, "a b c", "token_count"), 3.0);
    }

    #[test]
    fn oov_fraction() {
        let (m, c) = setup(&["a"], 1);
        let x = FeatureExtractor::new(&m, &c);
        assert_eq!(feature(&x, "a qqq", "oov_fraction"), 0.5);
    }

    #[test]
    fn uniform_unigram_per_word_log_prob() {
        let mut arpa = String::from("\\data\\\nngram 1=11\n\n\\1-grams:\n-99\t<s>\n-1\t</s>\n-1\t<unk>\n");
        for i in 0..8 {
            arpa.push_str(&format!("-1\tw{i}\n"));
        }
        arpa.push_str("\n\\end\\\n");
        let m = crate::lm::parse_arpa(arpa.as_bytes()).unwrap();
        let c = vec![Sentence::parse("w0 w1")];
        let counts = count_ngrams(&c, 1, m.vocab());
        let x = FeatureExtractor::new(&m, &counts);
        assert!((feature(&x, "w1 w2 w3", "lm_log10_prob_per_word") + 1.0).abs() < 1e-12);
        assert!((feature(&x, "w1 w2 w3", "lm_perplexity") - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_hypothesis_is_finite() {
        let (m, c) = setup(&["a b", "b c"], 3);
        let x = FeatureExtractor::new(&m, &c);
        let h = hypothesis_from_sentence("u", Sentence::default());
        let f = x.extract(&h, 0.0);
        assert_eq!(f.len(), 21);
        assert!(f.iter().all(|v| v.is_finite()));
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn quartiles_partition_seen_tokens() {
        let (m, c) = setup(&["a a a a b b b c c d", "e f g h"], 3);
        let x = FeatureExtractor::new(&m, &c);
        let h = hypothesis_from_sentence("u", Sentence::parse("a b c d e z"));
        let f = x.extract(&h, 0.0);
        let q: f64 = f[5..9].iter().sum();
        assert!((q - 5.0 / 6.0).abs() < 1e-12);
        // "a" is the most frequent word
        assert!(f[8] > 0.0);
    }

    #[test]
    fn seen_ngram_fractions() {
        let (m, c) = setup(&["a b c d"], 3);
        let x = FeatureExtractor::new(&m, &c);
        assert_eq!(feature(&x, "a b x d", "seen_bigram_fraction"), 1.0 / 3.0);
        assert_eq!(feature(&x, "a b c x", "seen_trigram_fraction"), 0.5);
    }

    #[test]
    fn punctuation_and_numbers() {
        let (m, c) = setup(&["a"], 1);
        let x = FeatureExtractor::new(&m, &c);
        assert_eq!(feature(&x, "a , 3.5 . x2", "punctuation_fraction"), 0.4);
        assert_eq!(feature(&x, "a , 3.5 . x2", "numeric_fraction"), 0.2);
    }

    #[test]
    fn subset_and_tsv_round_trip() {
        let (m, c) = setup(&["a b c", "b c d"], 2);
        let x = FeatureExtractor::new(&m, &c)
            .with_features(&["asr_confidence", "token_count"])
            .unwrap();
        let hyps = vec![
            Hypothesis {
                utt_id: "u1".into(),
                rank: 1,
                acoustic: -10.5,
                lm: -3.25,
                total: -13.75,
                confidence: 0.9,
                tokens: Sentence::parse("a b"),
            },
            Hypothesis {
                utt_id: "u1".into(),
                rank: 2,
                acoustic: -11.0,
                lm: -4.0,
                total: -15.0,
                confidence: 0.6,
                tokens: Sentence::parse("a d c"),
            },
        ];
        let t = x.extract_nbest(&[NBestList::new(hyps).unwrap()]);
        assert_eq!(t.names, vec!["asr_confidence", "token_count"]);
        assert_eq!(t.keys, vec!["u1:1", "u1:2"]);
        assert_eq!(t.rows[1], vec![0.6, 3.0]);
        let back = FeatureTable::parse(t.to_tsv().as_bytes()).unwrap();
        assert_eq!(back, t);
        assert!(FeatureExtractor::new(&m, &c).with_features(&["nope"]).is_err());
    }
}
