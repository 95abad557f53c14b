//! ROVER system combination.
//!
//! Each system's 1-best hypothesis is aligned, in system order, into a word
//! transition network (WTN): a sequence of slots holding competing words and
//! NULL arcs. A vote per slot then picks the consensus word.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_NULL_CONFIDENCE: f64 = 0.7;

/// A slot entry. The derived order puts words lexicographically, then NULL.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlotWord {
    Word(String),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlotStats {
    pub votes: u32,
    pub confidence_sum: f64,
}

pub type Slot = BTreeMap<SlotWord, SlotStats>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordTransitionNetwork {
    slots: Vec<Slot>,
    systems: u32,
}

/// One system's output for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemHypothesis {
    pub tokens: Vec<String>,
    pub confidences: Option<Vec<f64>>,
}

impl SystemHypothesis {
    pub fn new(tokens: Vec<String>) -> Self {
        SystemHypothesis {
            tokens,
            confidences: None,
        }
    }

    pub fn with_confidences(tokens: Vec<String>, confidences: Vec<f64>) -> Result<Self> {
        if confidences.len() != tokens.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tokens but {} confidences",
                tokens.len(),
                confidences.len()
            )));
        }
        if let Some(c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidArgument(format!("confidence {c} outside [0,1]")));
        }
        Ok(SystemHypothesis {
            tokens,
            confidences: Some(confidences),
        })
    }

    pub fn from_words(line: &str) -> Self {
        Self::new(line.split_whitespace().map(str::to_owned).collect())
    }

    /// Confidence of token `i`; tokens without confidences count as 1.
    fn confidence(&self, i: usize) -> f64 {
        self.confidences.as_ref().map_or(1.0, |c| c[i])
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Match,
    Substitute,
    /// Slot kept, hypothesis contributes NULL.
    Delete,
    /// New slot for a hypothesis word.
    Insert,
}

impl WordTransitionNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn systems(&self) -> u32 {
        self.systems
    }

    /// Minimum alignment cost of `tokens` against the current slots.
    pub fn alignment_cost(&self, tokens: &[String]) -> u32 {
        let table = self.cost_table(tokens);
        table[self.slots.len()][tokens.len()]
    }

    fn cost_table(&self, tokens: &[String]) -> Vec<Vec<u32>> {
        let (n, m) = (self.slots.len(), tokens.len());
        let mut d = vec![vec![0u32; m + 1]; n + 1];
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j as u32;
        }
        for i in 1..=n {
            d[i][0] = i as u32;
            for j in 1..=m {
                let diag = d[i - 1][j - 1] + self.sub_cost(i - 1, &tokens[j - 1]);
                d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d
    }

    fn sub_cost(&self, slot: usize, token: &str) -> u32 {
        let present = self.slots[slot]
            .keys()
            .any(|w| matches!(w, SlotWord::Word(x) if x == token));
        u32::from(!present)
    }

    /// Aligns one hypothesis into the network.
    pub fn align(&mut self, hyp: &SystemHypothesis) {
        let tokens = &hyp.tokens;
        let table = self.cost_table(tokens);
        let (mut i, mut j) = (self.slots.len(), tokens.len());
        let mut steps = Vec::with_capacity(i + j);
        while i > 0 || j > 0 {
            let here = table[i][j];
            let step = if i > 0 && j > 0 && self.sub_cost(i - 1, &tokens[j - 1]) == 0 && table[i - 1][j - 1] == here {
                Step::Match
            } else if i > 0 && j > 0 && table[i - 1][j - 1] + 1 == here {
                Step::Substitute
            } else if i > 0 && table[i - 1][j] + 1 == here {
                Step::Delete
            } else {
                Step::Insert
            };
            match step {
                Step::Match | Step::Substitute => {
                    i -= 1;
                    j -= 1;
                }
                Step::Delete => i -= 1,
                Step::Insert => j -= 1,
            }
            steps.push(step);
        }
        steps.reverse();

        let prior = self.systems;
        let mut merged = Vec::with_capacity(steps.len());
        let mut old = std::mem::take(&mut self.slots).into_iter();
        let mut j = 0;
        for step in steps {
            match step {
                Step::Match | Step::Substitute => {
                    let mut slot = old.next().expect("alignment consumes existing slots");
                    add(&mut slot, SlotWord::Word(tokens[j].clone()), hyp.confidence(j));
                    merged.push(slot);
                    j += 1;
                }
                Step::Delete => {
                    let mut slot = old.next().expect("alignment consumes existing slots");
                    add(&mut slot, SlotWord::Null, 0.0);
                    merged.push(slot);
                }
                Step::Insert => {
                    let mut slot = Slot::new();
                    if prior > 0 {
                        slot.insert(
                            SlotWord::Null,
                            SlotStats {
                                votes: prior,
                                confidence_sum: 0.0,
                            },
                        );
                    }
                    add(&mut slot, SlotWord::Word(tokens[j].clone()), hyp.confidence(j));
                    merged.push(slot);
                    j += 1;
                }
            }
        }
        self.slots = merged;
        self.systems += 1;
    }

    /// Per-slot argmax of `alpha * votes / N + (1 - alpha) * mean confidence`,
    /// where NULL's confidence term is `null_confidence`.
    pub fn vote(&self, alpha: f64, null_confidence: f64) -> Vec<String> {
        let n = f64::from(self.systems.max(1));
        let mut out = Vec::new();
        for slot in &self.slots {
            let mut best: Option<(&SlotWord, f64)> = None;
            for (word, stats) in slot {
                let conf = match word {
                    SlotWord::Null => null_confidence,
                    SlotWord::Word(_) => stats.confidence_sum / f64::from(stats.votes),
                };
                let score = alpha * f64::from(stats.votes) / n + (1.0 - alpha) * conf;
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((word, score));
                }
            }
            if let Some((SlotWord::Word(w), _)) = best {
                out.push(w.clone());
            }
        }
        out
    }
}

fn add(slot: &mut Slot, word: SlotWord, confidence: f64) {
    let e = slot.entry(word).or_default();
    e.votes += 1;
    e.confidence_sum += confidence;
}

/// Validates the vote parameters.
pub fn check_vote_params(alpha: f64, null_confidence: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must be in [0,1], got {alpha}")));
    }
    if !(0.0..=1.0).contains(&null_confidence) {
        return Err(Error::InvalidArgument(format!(
            "null confidence must be in [0,1], got {null_confidence}"
        )));
    }
    Ok(())
}

/// Builds the network for one utterance and votes.
pub fn combine(hyps: &[&SystemHypothesis], alpha: f64, null_confidence: f64) -> Vec<String> {
    let mut wtn = WordTransitionNetwork::new();
    for h in hyps {
        wtn.align(h);
    }
    wtn.vote(alpha, null_confidence)
}

/// One system's hypotheses, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HypothesisFile {
    pub entries: Vec<(String, SystemHypothesis)>,
}

/// Combines every utterance of the first system with the same utterance of
/// the others. Output follows the first system's utterance order.
pub fn rover_combine(
    systems: &[HypothesisFile],
    alpha: f64,
    null_confidence: f64,
) -> Result<Vec<(String, Vec<String>)>> {
    check_vote_params(alpha, null_confidence)?;
    let Some(first) = systems.first() else {
        return Err(Error::InvalidArgument("no systems to combine".into()));
    };
    let mut indexed: Vec<HashMap<&str, &SystemHypothesis>> = Vec::with_capacity(systems.len());
    for (s, sys) in systems.iter().enumerate() {
        let mut map = HashMap::with_capacity(sys.entries.len());
        for (id, h) in &sys.entries {
            if map.insert(id.as_str(), h).is_some() {
                return Err(Error::Structure(format!("system {}: duplicate utterance {id}", s + 1)));
            }
        }
        indexed.push(map);
    }
    let ids: HashSet<&str> = indexed[0].keys().copied().collect();
    for (s, map) in indexed.iter().enumerate().skip(1) {
        if let Some((id, _)) = first.entries.iter().find(|(id, _)| !map.contains_key(id.as_str())) {
            return Err(Error::Structure(format!(
                "system {} has no hypothesis for utterance {id}",
                s + 1
            )));
        }
        if let Some(id) = systems[s]
            .entries
            .iter()
            .map(|(id, _)| id.as_str())
            .find(|id| !ids.contains(id))
        {
            return Err(Error::Structure(format!(
                "system 1 has no hypothesis for utterance {id}"
            )));
        }
    }
    Ok(first
        .entries
        .par_iter()
        .map(|(id, _)| {
            let hyps: Vec<&SystemHypothesis> = indexed.iter().map(|m| m[id.as_str()]).collect();
            (id.clone(), combine(&hyps, alpha, null_confidence))
        })
        .collect())
}

/// Splits `word:0.83` into word and confidence. A suffix that is not a
/// number in `[0, 1]` is part of the word (`12:30` stays one token).
fn split_confidence(token: &str) -> (&str, Option<f64>) {
    match token.rsplit_once(':') {
        Some((w, c)) if !w.is_empty() => match c.parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => (w, Some(v)),
            _ => (token, None),
        },
        _ => (token, None),
    }
}

/// Parses `utt_id\ttoken[:conf] token[:conf] ...` lines.
pub fn parse_hypotheses<R: Read>(reader: R) -> Result<HypothesisFile> {
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(reader).split(b'\n').enumerate() {
        let line_no = i + 1;
        let raw = line.map_err(|e| Error::io("<hypotheses>", e))?;
        let line = std::str::from_utf8(&raw).map_err(|_| Error::Decode { line: line_no })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line.split_once('\t').unwrap_or((line, ""));
        if id.is_empty() {
            return Err(Error::parse(line_no, "empty utterance id"));
        }
        let mut tokens = Vec::new();
        let mut confs = Vec::new();
        for tok in text.split_whitespace() {
            let (w, c) = split_confidence(tok);
            tokens.push(w.to_owned());
            confs.extend(c);
        }
        let hyp = if confs.is_empty() {
            SystemHypothesis::new(tokens)
        } else if confs.len() == tokens.len() {
            SystemHypothesis {
                tokens,
                confidences: Some(confs),
            }
        } else {
            return Err(Error::parse(
                line_no,
                "confidences must be given for all tokens or none",
            ));
        };
        entries.push((id.to_owned(), hyp));
    }
    Ok(HypothesisFile { entries })
}

pub fn read_hypotheses(path: impl AsRef<Path>) -> Result<HypothesisFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_hypotheses(file)
}

pub fn format_hypotheses(rows: &[(String, Vec<String>)]) -> String {
    let mut out = String::new();
    for (id, tokens) in rows {
        let _ = writeln!(out, "{id}\t{}", tokens.join(" "));
    }
    out
}
