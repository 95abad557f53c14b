use std::collections::HashMap;
use std::f64::consts::LN_10;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::counts::NGram;
use super::model::{NGramEntry, NGramModel};
use crate::corpus::{Vocabulary, WordId};
use crate::error::{Error, Result};

const SIGNIFICANT_DIGITS: usize = 9;

/// Formats a log10 value with nine significant digits in plain decimal notation.
fn format_log10(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn format_arpa(model: &NGramModel) -> String {
    let vocab = model.vocab();
    let order = super::LanguageModel::order(model);
    let mut out = String::from("\\data\\\n");
    for n in 1..=order {
        let _ = writeln!(out, "ngram {n}={}", model.table(n).len());
    }
    for n in 1..=order {
        let _ = write!(out, "\n\\{n}-grams:\n");
        let mut entries: Vec<(&NGram, &NGramEntry)> = model.table(n).iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        for (gram, e) in entries {
            out.push_str(&format_log10(e.ln_prob / LN_10));
            out.push('\t');
            for (i, w) in gram.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(vocab.word(*w));
            }
            if let Some(b) = e.ln_backoff {
                out.push('\t');
                out.push_str(&format_log10(b / LN_10));
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn write_arpa(model: &NGramModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_arpa(model)).map_err(|e| Error::io(path, e))
}

pub fn read_arpa(path: impl AsRef<Path>) -> Result<NGramModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_arpa(file)
}

enum State {
    Preamble,
    Header,
    Section(usize),
    End,
}

fn parse_log10(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} is not a number: {field:?}")))?;
    if v.is_nan() {
        return Err(Error::parse(line, format!("{what} is NaN")));
    }
    Ok(v * LN_10)
}

pub fn parse_arpa<R: Read>(reader: R) -> Result<NGramModel> {
    let mut state = State::Preamble;
    let mut declared: Vec<usize> = Vec::new();
    // Per order: (words, entry) in file order; unigrams define the vocabulary.
    let mut rows: Vec<Vec<(Vec<String>, NGramEntry, usize)>> = Vec::new();
    let mut last_line = 0;

    let check_section = |rows: &Vec<Vec<_>>, declared: &Vec<usize>, n: usize| -> Result<()> {
        let found = rows[n - 1].len();
        if found != declared[n - 1] {
            return Err(Error::Structure(format!(
                "\\{n}-grams: declared {} entries, found {found}",
                declared[n - 1]
            )));
        }
        Ok(())
    };

    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = line.map_err(|_| Error::Decode { line: line_no })?;
        let text = line.trim();
        match state {
            State::Preamble => {
                if text == "\\data\\" {
                    state = State::Header;
                }
            }
            State::Header => {
                if text.is_empty() {
                    continue;
                }
                if let Some(spec) = text.strip_prefix("ngram ") {
                    let (n, c) = spec
                        .split_once('=')
                        .ok_or_else(|| Error::parse(line_no, "expected `ngram N=count`"))?;
                    let n: usize = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(line_no, "bad n-gram order"))?;
                    let c: usize = c
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(line_no, "bad n-gram count"))?;
                    if n != declared.len() + 1 {
                        return Err(Error::parse(line_no, format!("ngram orders out of sequence at {n}")));
                    }
                    declared.push(c);
                    rows.push(Vec::new());
                } else if text == "\\1-grams:" {
                    if declared.is_empty() {
                        return Err(Error::parse(line_no, "no `ngram N=count` lines"));
                    }
                    state = State::Section(1);
                } else {
                    return Err(Error::parse(line_no, format!("unexpected header line {text:?}")));
                }
            }
            State::Section(n) => {
                if text.is_empty() {
                    continue;
                }
                if text == "\\end\\" {
                    check_section(&rows, &declared, n)?;
                    if n != declared.len() {
                        return Err(Error::Structure(format!(
                            "missing sections: found {n} of {} orders",
                            declared.len()
                        )));
                    }
                    state = State::End;
                    continue;
                }
                if text.starts_with('\\') {
                    check_section(&rows, &declared, n)?;
                    let expected = format!("\\{}-grams:", n + 1);
                    if text != expected || n + 1 > declared.len() {
                        return Err(Error::parse(line_no, format!("unexpected section {text:?}")));
                    }
                    state = State::Section(n + 1);
                    continue;
                }
                let fields: Vec<&str> = text.split_whitespace().collect();
                if fields.len() != n + 1 && fields.len() != n + 2 {
                    return Err(Error::parse(
                        line_no,
                        format!(
                            "expected {} or {} fields in {n}-gram line, found {}",
                            n + 1,
                            n + 2,
                            fields.len()
                        ),
                    ));
                }
                let ln_prob = parse_log10(fields[0], line_no, "log probability")?;
                let ln_backoff = match fields.get(n + 1) {
                    Some(b) => Some(parse_log10(b, line_no, "back-off")?),
                    None => None,
                };
                let words = fields[1..=n].iter().map(|w| w.to_string()).collect();
                rows[n - 1].push((words, NGramEntry { ln_prob, ln_backoff }, line_no));
            }
            State::End => {
                if !text.is_empty() {
                    return Err(Error::parse(line_no, "content after \\end\\"));
                }
            }
        }
    }
    match state {
        State::Preamble => return Err(Error::parse(last_line.max(1), "missing \\data\\ header")),
        State::End => {}
        _ => return Err(Error::parse(last_line.max(1), "missing \\end\\ marker")),
    }

    let vocab = Vocabulary::from_words(rows[0].iter().map(|(w, _, _)| w[0].as_str()));
    let mut tables: Vec<HashMap<NGram, NGramEntry>> = Vec::with_capacity(rows.len());
    for (k, section) in rows.into_iter().enumerate() {
        let mut table = HashMap::with_capacity(section.len());
        for (words, entry, line_no) in section {
            let ids = words
                .iter()
                .map(|w| {
                    vocab
                        .id(w)
                        .ok_or_else(|| Error::parse(line_no, format!("word {w:?} missing from unigrams")))
                })
                .collect::<Result<Vec<WordId>>>()?;
            if table.insert(ids.into_boxed_slice(), entry).is_some() {
                return Err(Error::parse(line_no, format!("duplicate {}-gram", k + 1)));
            }
        }
        tables.push(table);
    }
    Ok(NGramModel::from_tables(tables.len(), vocab, tables))
}
