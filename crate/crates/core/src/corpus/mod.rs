//! Corpora, vocabularies, N-best lists and pronunciation lexicons.

mod nbest;
mod pron;
mod vocab;

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};

pub use nbest::{format_nbest, parse_nbest, read_nbest, write_nbest, Hypothesis, NBestList, NBestReader, NBEST_HEADER};
pub use pron::{
    estimate_pronunciation_probs, parse_decode_lexicon, parse_pron_counts, write_pron_lexicon, PronLexicon,
    PronunciationCounts, DEFAULT_PRON_FLOOR,
};
pub use vocab::{build_vocabulary, Vocabulary, WordId, DEFAULT_MAX_VOCAB, SENTENCE_END, SENTENCE_START, UNKNOWN};

/// A whitespace-tokenized, NFC-normalized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Sentence {
            tokens: tokens.into_iter().flat_map(|t| split_token(t.as_ref())).collect(),
        }
    }

    /// Tokenizes one line on whitespace.
    pub fn parse(line: &str) -> Self {
        Sentence {
            tokens: line.split_whitespace().map(nfc).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn to_line(&self) -> String {
        self.tokens.join(" ")
    }
}

impl std::fmt::Display for Sentence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_line())
    }
}

fn split_token(t: &str) -> Vec<String> {
    t.split_whitespace().map(nfc).collect()
}

fn nfc(s: &str) -> String {
    if is_nfc(s) {
        s.to_owned()
    } else {
        s.nfc().collect()
    }
}

/// How tokens outside a closed vocabulary are treated while reading.
#[derive(Debug, Clone, Default)]
pub enum VocabPolicy {
    #[default]
    Open,
    /// Out-of-vocabulary tokens are replaced by the unknown symbol.
    MapUnknown(Arc<Vocabulary>),
}

impl VocabPolicy {
    fn apply(&self, sentence: Sentence) -> Sentence {
        match self {
            VocabPolicy::Open => sentence,
            VocabPolicy::MapUnknown(vocab) => Sentence {
                tokens: sentence
                    .tokens
                    .into_iter()
                    .map(|t| if vocab.contains(&t) { t } else { UNKNOWN.to_owned() })
                    .collect(),
            },
        }
    }
}

/// Streaming line reader yielding one [`Sentence`] per input line.
pub struct CorpusReader<R> {
    inner: R,
    policy: VocabPolicy,
    lines: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(inner: R, policy: VocabPolicy) -> Self {
        CorpusReader {
            inner,
            policy,
            lines: 0,
            buf: Vec::new(),
        }
    }

    /// Number of lines consumed so far.
    pub fn lines_read(&self) -> usize {
        self.lines
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Sentence>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.inner.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.lines += 1;
                let line = match std::str::from_utf8(&self.buf) {
                    Ok(s) => s,
                    Err(_) => return Some(Err(Error::Decode { line: self.lines })),
                };
                Some(Ok(self.policy.apply(Sentence::parse(line))))
            }
            Err(e) => Some(Err(Error::io("<corpus>", e))),
        }
    }
}

pub fn read_corpus(path: impl AsRef<Path>, policy: VocabPolicy) -> Result<CorpusReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader::new(BufReader::new(file), policy))
}

/// Reads a whole corpus file into memory.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    read_corpus(path, VocabPolicy::Open)?.collect()
}

pub fn parse_corpus<R: Read>(reader: R) -> Result<Vec<Sentence>> {
    CorpusReader::new(BufReader::new(reader), VocabPolicy::Open).collect()
}

/// Reads a file of raw lines (no tokenization), as used for line-aligned target corpora.
pub fn load_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix(b"\n").unwrap_or(&text);
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, l)| {
            std::str::from_utf8(l)
                .map(|s| s.trim_end_matches('\r').to_owned())
                .map_err(|_| Error::Decode { line: i + 1 })
        })
        .collect()
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &[Sentence]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in corpus {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let c = parse_corpus("a b c\n".as_bytes()).unwrap();
        assert_eq!(c, vec![Sentence::new(["a", "b", "c"])]);
    }

    #[test]
    fn empty_file_is_empty_stream() {
        assert!(parse_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn blank_line_yields_empty_sentence() {
        let mut reader = CorpusReader::new("x y\n\nz\n".as_bytes(), VocabPolicy::Open);
        let all: Vec<_> = reader.by_ref().map(|s| s.unwrap()).collect();
        assert_eq!(all.len(), 3);
        assert_eq!(all.iter().map(Sentence::len).collect::<Vec<_>>(), vec![2, 0, 1]);
        assert_eq!(reader.lines_read(), 3);
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let bytes: &[u8] = b"ok\nbad \xff\n";
        let err = parse_corpus(bytes).unwrap_err();
        assert!(matches!(err, Error::Decode { line: 2 }), "{err}");
    }

    #[test]
    fn nfc_normalizes_tokens() {
        let decomposed = Sentence::parse("cafe\u{301}");
        let composed = Sentence::parse("caf\u{e9}");
        assert_eq!(decomposed, composed);
    }

    #[test]
    fn closed_vocab_maps_unknown() {
        let corpus = vec![Sentence::parse("a a b")];
        let vocab = Arc::new(build_vocabulary(&corpus, 10, 2));
        let reader = CorpusReader::new("a b\n".as_bytes(), VocabPolicy::MapUnknown(vocab));
        let s: Vec<_> = reader.map(|s| s.unwrap()).collect();
        assert_eq!(s[0], Sentence::new(["a", UNKNOWN]));
    }

    #[test]
    fn load_lines_keeps_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        std::fs::write(&p, "one\n\nthree\n").unwrap();
        assert_eq!(load_lines(&p).unwrap(), vec!["one", "", "three"]);
    }
}
