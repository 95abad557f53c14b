use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::Sentence;
use crate::error::{Error, Result};

pub const NBEST_HEADER: &str = "utt_id\trank\tacoustic\tlm\ttotal\tconfidence\ttext";

/// One ASR hypothesis with its decoder scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub utt_id: String,
    /// 1-based position in the N-best list.
    pub rank: u32,
    /// Acoustic log-likelihood.
    pub acoustic: f64,
    /// Language model log10 probability.
    pub lm: f64,
    pub total: f64,
    pub confidence: f64,
    pub tokens: Sentence,
}

/// Ranked hypotheses for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    utt_id: String,
    hypotheses: Vec<Hypothesis>,
}

impl NBestList {
    /// Validates rank contiguity, shared id and score order.
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        let first = hypotheses
            .first()
            .ok_or_else(|| Error::Structure("empty N-best list".into()))?;
        let utt_id = first.utt_id.clone();
        for (i, h) in hypotheses.iter().enumerate() {
            if h.utt_id != utt_id {
                return Err(Error::Structure(format!(
                    "utterance {utt_id}: hypothesis belongs to {}",
                    h.utt_id
                )));
            }
            if h.rank as usize != i + 1 {
                return Err(Error::Structure(format!(
                    "utterance {utt_id}: expected rank {}, found {}",
                    i + 1,
                    h.rank
                )));
            }
            if !(0.0..=1.0).contains(&h.confidence) {
                return Err(Error::Structure(format!(
                    "utterance {utt_id}: confidence {} outside [0,1]",
                    h.confidence
                )));
            }
            if i > 0 && h.total > hypotheses[i - 1].total {
                return Err(Error::Structure(format!(
                    "utterance {utt_id}: rank {} scores above rank {}",
                    h.rank,
                    h.rank - 1
                )));
            }
        }
        Ok(NBestList { utt_id, hypotheses })
    }

    pub fn utt_id(&self) -> &str {
        &self.utt_id
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn best(&self) -> &Hypothesis {
        &self.hypotheses[0]
    }

    /// Hypothesis at 1-based `rank`.
    pub fn at_rank(&self, rank: u32) -> Option<&Hypothesis> {
        self.hypotheses.get((rank as usize).checked_sub(1)?)
    }

    /// Keeps at most `depth` hypotheses.
    pub fn truncated(&self, depth: usize) -> NBestList {
        NBestList {
            utt_id: self.utt_id.clone(),
            hypotheses: self.hypotheses.iter().take(depth.max(1)).cloned().collect(),
        }
    }
}

/// Streaming N-best TSV reader; groups consecutive rows by utterance.
pub struct NBestReader<R> {
    lines: std::iter::Enumerate<std::io::Split<R>>,
    pending: Option<Hypothesis>,
    finished: HashSet<String>,
    header_checked: bool,
    done: bool,
}

impl<R: BufRead> NBestReader<R> {
    pub fn new(inner: R) -> Self {
        NBestReader {
            lines: inner.split(b'\n').enumerate(),
            pending: None,
            finished: HashSet::new(),
            header_checked: false,
            done: false,
        }
    }

    fn next_row(&mut self) -> Option<Result<Hypothesis>> {
        loop {
            let (i, raw) = self.lines.next()?;
            let line_no = i + 1;
            let raw = match raw {
                Ok(r) => r,
                Err(e) => return Some(Err(Error::io("<nbest>", e))),
            };
            let Ok(line) = std::str::from_utf8(&raw) else {
                return Some(Err(Error::Decode { line: line_no }));
            };
            let line = line.trim_end_matches('\r');
            if !self.header_checked {
                self.header_checked = true;
                if line != NBEST_HEADER {
                    return Some(Err(Error::parse(line_no, "missing N-best header")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            return Some(parse_row(line, line_no));
        }
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<Hypothesis> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 7 {
        return Err(Error::parse(
            line_no,
            format!("expected 7 fields, found {}", fields.len()),
        ));
    }
    let num = |idx: usize, name: &str| -> Result<f64> {
        let v: f64 = fields[idx]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("{name} is not a number: {:?}", fields[idx])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::parse(line_no, format!("{name} is not finite")))
        }
    };
    if fields[0].is_empty() {
        return Err(Error::parse(line_no, "empty utterance id"));
    }
    let rank: u32 = fields[1]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("rank is not a positive integer: {:?}", fields[1])))?;
    let confidence = num(5, "confidence")?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::parse(line_no, format!("confidence {confidence} outside [0,1]")));
    }
    Ok(Hypothesis {
        utt_id: fields[0].to_owned(),
        rank,
        acoustic: num(2, "acoustic")?,
        lm: num(3, "lm")?,
        total: num(4, "total")?,
        confidence,
        tokens: Sentence::parse(fields[6]),
    })
}

impl<R: BufRead> Iterator for NBestReader<R> {
    type Item = Result<NBestList>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut group: Vec<Hypothesis> = self.pending.take().into_iter().collect();
        loop {
            match self.next_row() {
                None => break,
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok(h)) => {
                    if group.first().is_some_and(|g| g.utt_id != h.utt_id) {
                        self.pending = Some(h);
                        break;
                    }
                    group.push(h);
                }
            }
        }
        if let Some(first) = group.first() {
            if self.finished.contains(&first.utt_id) {
                self.done = true;
                return Some(Err(Error::Structure(format!(
                    "utterance {}: rows are not consecutive",
                    first.utt_id
                ))));
            }
        } else {
            self.done = true;
            if !self.header_checked {
                return Some(Err(Error::parse(1, "missing N-best header")));
            }
            return None;
        }
        self.finished.insert(group[0].utt_id.clone());
        let list = NBestList::new(group);
        if list.is_err() {
            self.done = true;
        }
        Some(list)
    }
}

pub fn parse_nbest<R: Read>(reader: R) -> Result<Vec<NBestList>> {
    NBestReader::new(BufReader::new(reader)).collect()
}

pub fn read_nbest(path: impl AsRef<Path>) -> Result<NBestReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(NBestReader::new(BufReader::new(file)))
}

pub fn format_nbest(lists: &[NBestList]) -> String {
    let mut out = String::from(NBEST_HEADER);
    out.push('\n');
    for list in lists {
        for h in list.hypotheses() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                h.utt_id,
                h.rank,
                h.acoustic,
                h.lm,
                h.total,
                h.confidence,
                h.tokens.to_line()
            ));
        }
    }
    out
}

pub fn write_nbest(path: impl AsRef<Path>, lists: &[NBestList]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_nbest(lists)).map_err(|e| Error::io(path, e))
}
