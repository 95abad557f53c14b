use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

/// Probability given to a decoding-dictionary pronunciation that was never
/// observed for an otherwise observed word, before renormalization.
pub const DEFAULT_PRON_FLOOR: f64 = 1e-4;

/// Aligned pronunciation counts: word -> pronunciation -> count.
pub type PronunciationCounts = BTreeMap<String, BTreeMap<String, f64>>;

/// word -> [(pronunciation, probability)], probabilities summing to one per word.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PronLexicon {
    entries: BTreeMap<String, Vec<(String, f64)>>,
}

impl PronLexicon {
    pub fn get(&self, word: &str) -> Option<&[(String, f64)]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn probability(&self, word: &str, pron: &str) -> Option<f64> {
        self.get(word)?.iter().find(|(p, _)| p == pron).map(|&(_, prob)| prob)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(String, f64)])> {
        self.entries.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Relative-frequency pronunciation probabilities for every word of the
/// decoding lexicon.
///
/// Words with observed counts get count / total; their dictionary
/// pronunciations without counts get `floor`, then the word is renormalized.
/// Words never observed (or with all-zero counts) get uniform probabilities.
/// Observed pronunciations absent from the decoding lexicon are dropped.
pub fn estimate_pronunciation_probs(
    aligned_counts: &PronunciationCounts,
    decode_lexicon: &BTreeMap<String, Vec<String>>,
    floor: f64,
) -> Result<PronLexicon> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "pronunciation floor must be positive, got {floor}"
        )));
    }
    let mut entries = BTreeMap::new();
    for (word, prons) in decode_lexicon {
        if prons.is_empty() {
            return Err(Error::InvalidArgument(format!("word {word} has no pronunciations")));
        }
        let mut prons = prons.clone();
        prons.dedup();
        let observed = aligned_counts.get(word);
        if let Some(counts) = observed {
            if let Some((p, c)) = counts.iter().find(|(_, &c)| !(c >= 0.0 && c.is_finite())) {
                return Err(Error::InvalidArgument(format!(
                    "count for {word} /{p}/ is invalid: {c}"
                )));
            }
        }
        let total: f64 = observed
            .map(|c| prons.iter().filter_map(|p| c.get(p)).sum())
            .unwrap_or(0.0);
        let probs: Vec<(String, f64)> = if total > 0.0 {
            let counts = observed.expect("positive total implies counts");
            let raw: Vec<f64> = prons
                .iter()
                .map(|p| match counts.get(p) {
                    Some(&c) if c > 0.0 => c / total,
                    _ => floor,
                })
                .collect();
            let z: f64 = raw.iter().sum();
            prons.into_iter().zip(raw).map(|(p, r)| (p, r / z)).collect()
        } else {
            let u = 1.0 / prons.len() as f64;
            prons.into_iter().map(|p| (p, u)).collect()
        };
        entries.insert(word.clone(), probs);
    }
    Ok(PronLexicon { entries })
}

fn tsv_lines<R: Read>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    BufReader::new(reader).lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(_) => Some(Err(Error::Decode { line: i + 1 })),
    })
}

/// Parses `word\tpronunciation\tcount` rows; repeated pairs accumulate.
pub fn parse_pron_counts<R: Read>(reader: R) -> Result<PronunciationCounts> {
    let mut out = PronunciationCounts::new();
    for row in tsv_lines(reader) {
        let (line, text) = row?;
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(line, "expected word, pronunciation, count"));
        }
        let count: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("count is not a number: {:?}", fields[2])))?;
        if !(count >= 0.0 && count.is_finite()) {
            return Err(Error::parse(line, "count must be non-negative"));
        }
        *out.entry(fields[0].to_owned())
            .or_default()
            .entry(normalize_pron(fields[1]))
            .or_default() += count;
    }
    Ok(out)
}

/// Parses `word\tpronunciation` rows into the decoding lexicon.
pub fn parse_decode_lexicon<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for row in tsv_lines(reader) {
        let (line, text) = row?;
        let Some((word, pron)) = text.split_once('\t') else {
            return Err(Error::parse(line, "expected word<TAB>pronunciation"));
        };
        let pron = normalize_pron(pron);
        if pron.is_empty() {
            return Err(Error::parse(line, "empty pronunciation"));
        }
        let list = out.entry(word.to_owned()).or_default();
        if !list.contains(&pron) {
            list.push(pron);
        }
    }
    Ok(out)
}

fn normalize_pron(p: &str) -> String {
    p.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Serializes as `word\tpronunciation\tprobability`.
pub fn write_pron_lexicon(lexicon: &PronLexicon) -> String {
    let mut out = String::new();
    for (word, prons) in lexicon.iter() {
        for (p, prob) in prons {
            out.push_str(&format!("{word}\t{p}\t{prob}\n"));
        }
    }
    out
}
