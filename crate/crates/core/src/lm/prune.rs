use std::collections::{HashMap, HashSet};

use super::model::NGramModel;
use super::LanguageModel;
use crate::corpus::WordId;
use crate::error::{Error, Result};

/// Marginal probability of a history under the model, by the chain rule.
/// Histories starting with `<s>` are conditioned on the sentence start.
fn history_prob(model: &NGramModel, history: &[WordId]) -> f64 {
    let first = usize::from(history.first() == Some(&WordId::START));
    (first..history.len())
        .map(|i| model.ln_prob_ids(&history[..i], history[i]))
        .sum::<f64>()
        .exp()
}

/// Relative-entropy pruning.
///
/// For every n-gram `h w` with `n >= 2`, the weighted KL divergence caused by
/// dropping it and re-deriving the back-off weight of `h` is
///
/// ```text
/// -P(h) * ( p(w|h) * [ln p'(w|h) - ln p(w|h)] + (1 - sum_seen p(.|h)) * [ln bow'(h) - ln bow(h)] )
/// ```
///
/// with `p'(w|h) = bow'(h) p(w|h')`. Entries whose divergence is at most
/// `threshold` are removed, highest order first; an n-gram that prefixes a
/// surviving higher-order entry is kept. Afterwards the back-off weight of
/// every context whose conditional distribution changed is recomputed, so
/// every context stays normalized.
pub fn prune(model: &NGramModel, threshold: f64) -> Result<NGramModel> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "pruning threshold must be >= 0, got {threshold}"
        )));
    }
    let mut pruned = model.clone();
    let order = pruned.order();
    let mut lost: HashSet<Box<[WordId]>> = HashSet::new();
    for n in (2..=order).rev() {
        let protected: HashSet<&[WordId]> = if n < order {
            pruned.table(n + 1).keys().map(|g| &g[..n]).collect()
        } else {
            HashSet::new()
        };
        let mut groups: HashMap<&[WordId], Vec<WordId>> = HashMap::new();
        for gram in pruned.table(n).keys() {
            groups.entry(&gram[..n - 1]).or_default().push(gram[n - 1]);
        }

        let mut removals: Vec<Box<[WordId]>> = Vec::new();
        for (ctx, words) in &groups {
            let lower_ctx = &ctx[1..];
            let mut seen_mass = 0.0;
            let mut seen_lower = 0.0;
            let mut rows = Vec::with_capacity(words.len());
            for &w in words {
                let mut key = ctx.to_vec();
                key.push(w);
                let p = pruned.table(n)[key.as_slice()].ln_prob.exp();
                let q = pruned.ln_prob_ids(lower_ctx, w).exp();
                seen_mass += p;
                seen_lower += q;
                let keep = protected.contains(key.as_slice());
                rows.push((key, p, q, keep));
            }
            let numerator = 1.0 - seen_mass;
            let denominator = 1.0 - seen_lower;
            let ln_bow = pruned.ln_backoff(ctx);
            let p_hist = history_prob(&pruned, ctx);

            for (key, p, q, keep) in rows {
                if keep {
                    continue;
                }
                let ln_bow_new = ((numerator + p) / (denominator + q)).ln();
                let delta = -p_hist * (p * (ln_bow_new + q.ln() - p.ln()) + numerator * (ln_bow_new - ln_bow));
                if delta <= threshold {
                    removals.push(key.into_boxed_slice());
                }
            }
        }

        let table = &mut pruned.tables_mut()[n - 1];
        for key in removals {
            table.remove(&key);
            lost.insert(key[..n - 1].into());
        }
    }
    recompute_backoffs(&mut pruned, &lost);
    Ok(pruned)
}

/// Re-derives `bow(h) = (1 - sum_seen p(w|h)) / (1 - sum_seen p(w|h'))` for
/// contexts that lost extensions or whose shorter context changed, shortest
/// contexts first.
fn recompute_backoffs(model: &mut NGramModel, lost: &HashSet<Box<[WordId]>>) {
    let order = model.order();
    let mut dirty: HashSet<Box<[WordId]>> = HashSet::new();
    for k in 1..order {
        let mut extensions: HashMap<&[WordId], Vec<WordId>> = HashMap::new();
        for gram in model.table(k + 1).keys() {
            extensions.entry(&gram[..k]).or_default().push(gram[k]);
        }
        let mut updates: Vec<(Box<[WordId]>, f64)> = Vec::new();
        for (ctx, entry) in model.table(k) {
            if entry.ln_backoff.is_none() && !lost.contains(ctx) {
                continue;
            }
            let changed = lost.contains(ctx) || (k >= 2 && dirty.contains(&ctx[1..]));
            if !changed {
                continue;
            }
            let ln_bow = match extensions.get(&ctx[..]) {
                None => 0.0,
                Some(words) => {
                    let mut seen = 0.0;
                    let mut seen_lower = 0.0;
                    let mut key = ctx.to_vec();
                    for &w in words {
                        key.truncate(k);
                        key.push(w);
                        seen += model.table(k + 1)[key.as_slice()].ln_prob.exp();
                        seen_lower += model.ln_prob_ids(&ctx[1..], w).exp();
                    }
                    let (num, den) = (1.0 - seen, 1.0 - seen_lower);
                    if num > 0.0 && den > 0.0 {
                        (num / den).ln()
                    } else {
                        0.0
                    }
                }
            };
            updates.push((ctx.clone(), ln_bow));
        }
        let table = &mut model.tables_mut()[k - 1];
        for (ctx, ln_bow) in updates {
            if let Some(e) = table.get_mut(&ctx) {
                e.ln_backoff = Some(ln_bow);
            }
            dirty.insert(ctx);
        }
    }
}
