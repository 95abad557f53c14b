//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use cascade_slt::corpus::Sentence;
use rand::Rng;

/// Straight-from-the-definition interpolated modified Kneser-Ney, computed
/// recursively over string n-grams with no back-off tables.
#[allow(clippy::type_complexity)]
pub struct ReferenceMkn {
    order: usize,
    /// adjusted counts per order (index n-1)
    counts: Vec<HashMap<Vec<String>, u64>>,
    /// per order: context -> (sum of adjusted counts, [#ext with count 1, 2, 3+])
    contexts: Vec<HashMap<Vec<String>, (u64, [u64; 3])>>,
    discounts: Vec<[f64; 3]>,
    outcomes: f64,
}

fn discounts(adjusted: &HashMap<Vec<String>, u64>) -> [f64; 3] {
    let mut n = [0f64; 5];
    for &c in adjusted.values() {
        if (1..=4).contains(&c) {
            n[c as usize] += 1.0;
        }
    }
    let y = if n[1] + 2.0 * n[2] > 0.0 {
        n[1] / (n[1] + 2.0 * n[2])
    } else {
        0.0
    };
    if n[1..].iter().all(|&v| v > 0.0) {
        let d = [
            1.0 - 2.0 * y * n[2] / n[1],
            2.0 - 3.0 * y * n[3] / n[2],
            3.0 - 4.0 * y * n[4] / n[3],
        ];
        if d.iter().all(|&v| v >= 0.0) {
            return d;
        }
    }
    // no singletons: Y is zero, use a fixed 0.5 so unseen events keep mass
    let single = if n[1] == 0.0 { 0.5 } else { y.clamp(0.0, 0.999) };
    [single; 3]
}

impl ReferenceMkn {
    pub fn new(corpus: &[Sentence], order: usize) -> Self {
        let mut raw: Vec<HashMap<Vec<String>, u64>> = vec![HashMap::new(); order];
        let mut words = HashSet::new();
        for s in corpus {
            let mut padded = vec!["<s>".to_string()];
            padded.extend(s.tokens().iter().cloned());
            padded.push("</s>".into());
            words.extend(s.tokens().iter().cloned());
            for n in 1..=order {
                for start in 0..padded.len() {
                    if start + n > padded.len() || (n == 1 && start == 0) {
                        continue;
                    }
                    *raw[n - 1].entry(padded[start..start + n].to_vec()).or_default() += 1;
                }
            }
        }
        let mut counts = Vec::with_capacity(order);
        for n in 1..=order {
            let adjusted: HashMap<Vec<String>, u64> = if n == order {
                raw[n - 1].clone()
            } else {
                let mut left: HashMap<Vec<String>, HashSet<String>> = HashMap::new();
                for g in raw[n].keys() {
                    left.entry(g[1..].to_vec()).or_default().insert(g[0].clone());
                }
                raw[n - 1]
                    .iter()
                    .map(|(g, &c)| {
                        let a = if g[0] == "<s>" {
                            c
                        } else {
                            left.get(g).map_or(0, |s| s.len() as u64)
                        };
                        (g.clone(), a)
                    })
                    .collect()
            };
            counts.push(adjusted);
        }
        let discounts = counts.iter().map(discounts).collect();
        let contexts = counts
            .iter()
            .map(|table| {
                let mut m: HashMap<Vec<String>, (u64, [u64; 3])> = HashMap::new();
                for (g, &c) in table {
                    if c == 0 {
                        continue;
                    }
                    let e = m.entry(g[..g.len() - 1].to_vec()).or_default();
                    e.0 += c;
                    e.1[(c.min(3) - 1) as usize] += 1;
                }
                m
            })
            .collect();
        // predicted outcomes: every word, </s> and <unk>
        let outcomes = (words.len() + 2) as f64;
        ReferenceMkn {
            order,
            counts,
            contexts,
            discounts,
            outcomes,
        }
    }

    /// P(word | history), using at most `order - 1` history words.
    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let keep = history.len().min(self.order - 1);
        let h: Vec<String> = history[history.len() - keep..].iter().map(|s| s.to_string()).collect();
        self.prob_at(&h, word)
    }

    fn prob_at(&self, h: &[String], word: &str) -> f64 {
        let n = h.len() + 1;
        let lower = if n == 1 {
            1.0 / self.outcomes
        } else {
            self.prob_at(&h[1..], word)
        };
        let Some(&(total, bins)) = self.contexts[n - 1].get(h) else {
            return lower;
        };
        let d = self.discounts[n - 1];
        let mut gram = h.to_vec();
        gram.push(word.to_string());
        let c = self.counts[n - 1].get(&gram).copied().unwrap_or(0);
        let dc = match c {
            0 => 0.0,
            1 => d[0],
            2 => d[1],
            _ => d[2],
        };
        let total = total as f64;
        let gamma = (d[0] * bins[0] as f64 + d[1] * bins[1] as f64 + d[2] * bins[2] as f64) / total;
        (c as f64 - dc).max(0.0) / total + gamma * lower
    }
}

/// A random corpus with a skewed word distribution so that counts of
/// counts are populated at every order.
pub fn random_corpus<R: Rng>(rng: &mut R, sentences: usize, vocab: usize, max_len: usize) -> Vec<Sentence> {
    (0..sentences)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            Sentence::new((0..len).map(|_| {
                let u: f64 = rng.gen();
                format!("w{}", ((u * u) * vocab as f64) as usize)
            }))
        })
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for v in m[col].iter_mut() {
            *v /= p;
        }
        let pivot_row = m[col].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != col {
                let f = row[col];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Levenshtein distance by memoized recursion over suffix pairs.
pub fn recursive_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut [Vec<Option<usize>>]) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

/// All sequences of length `0..=max_len` over `alphabet`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for a in alphabet {
                let mut t = s.clone();
                t.push(a.to_string());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
