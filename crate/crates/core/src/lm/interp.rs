use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LanguageModel, NGramModel};
use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Mixture weights, one per component, in component order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationWeights(Vec<f64>);

impl InterpolationWeights {
    pub fn uniform(k: usize) -> Self {
        InterpolationWeights(vec![1.0 / k as f64; k])
    }

    /// Validates non-negativity and unit sum (within 1e-12).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(
                "interpolation weights must be non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("interpolation weights sum to {sum}")));
        }
        Ok(InterpolationWeights(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, component: usize) -> f64 {
        self.0[component]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EmConfig {
    /// Stop once the largest weight change falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// EM run summary.
#[derive(Debug, Clone)]
pub struct EmTrace {
    /// Dev log-likelihood (natural log) before the first update and after each one.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Linear mixture `sum_i lambda_i p_i(w | h)` of back-off models.
#[derive(Debug, Clone)]
pub struct InterpolatedModel {
    components: Vec<NGramModel>,
    weights: InterpolationWeights,
}

impl InterpolatedModel {
    pub fn new(components: Vec<NGramModel>, weights: InterpolationWeights) -> Result<Self> {
        if components.len() != weights.0.len() {
            return Err(Error::InvalidArgument(format!(
                "{} components but {} weights",
                components.len(),
                weights.0.len()
            )));
        }
        check_shared_vocabulary(&components)?;
        Ok(InterpolatedModel { components, weights })
    }

    pub fn weights(&self) -> &InterpolationWeights {
        &self.weights
    }

    pub fn components(&self) -> &[NGramModel] {
        &self.components
    }

    /// log10 of the mixture probability.
    pub fn score<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        self.components
            .iter()
            .zip(&self.weights.0)
            .map(|(m, &l)| l * 10f64.powf(m.score(context, word)))
            .sum::<f64>()
            .log10()
    }
}

impl LanguageModel for InterpolatedModel {
    fn order(&self) -> usize {
        self.components.iter().map(LanguageModel::order).max().unwrap_or(1)
    }

    fn sentence_ln_probs(&self, sentence: &Sentence) -> Vec<f64> {
        let per_component: Vec<Vec<f64>> = self.components.iter().map(|m| m.sentence_ln_probs(sentence)).collect();
        (0..sentence.len() + 1)
            .map(|t| {
                per_component
                    .iter()
                    .zip(&self.weights.0)
                    .map(|(lps, &l)| l * lps[t].exp())
                    .sum::<f64>()
                    .ln()
            })
            .collect()
    }
}

fn check_shared_vocabulary(components: &[NGramModel]) -> Result<()> {
    let Some(first) = components.first() else {
        return Ok(());
    };
    let reference: BTreeSet<&str> = first.vocab().words().collect();
    for (i, m) in components.iter().enumerate().skip(1) {
        if m.vocab().len() != reference.len() || m.vocab().words().any(|w| !reference.contains(w)) {
            return Err(Error::InvalidArgument(format!(
                "component {i} does not share the vocabulary of component 0"
            )));
        }
    }
    Ok(())
}

/// Tunes mixture weights on `dev` by EM, starting from uniform weights.
///
/// Each iteration sets `lambda_i = (1/T) sum_t lambda_i p_i(t) / sum_j lambda_j p_j(t)`
/// over all `T` dev events; iteration stops when no weight moves by more than
/// `config.tolerance` or after `config.max_iterations` updates.
pub fn interpolate(
    components: Vec<NGramModel>,
    dev: &[Sentence],
    config: &EmConfig,
) -> Result<(InterpolatedModel, EmTrace)> {
    if components.len() < 2 {
        return Err(Error::InvalidArgument(
            "interpolation needs at least two components".into(),
        ));
    }
    check_shared_vocabulary(&components)?;
    if dev.is_empty() {
        return Err(Error::InvalidArgument("dev corpus is empty".into()));
    }
    let k = components.len();
    // probs[t][i] = p_i(event t)
    let probs: Vec<Vec<f64>> = dev
        .par_iter()
        .map(|s| {
            let per: Vec<Vec<f64>> = components.iter().map(|m| m.sentence_ln_probs(s)).collect();
            (0..s.len() + 1)
                .map(|t| per.iter().map(|lps| lps[t].exp()).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let events = probs.len() as f64;
    let log_likelihood = |lambda: &[f64]| -> f64 {
        probs
            .iter()
            .map(|p| p.iter().zip(lambda).map(|(p, l)| p * l).sum::<f64>().ln())
            .sum()
    };

    let mut lambda = vec![1.0 / k as f64; k];
    let mut trace = EmTrace {
        log_likelihoods: vec![log_likelihood(&lambda)],
        iterations: 0,
        converged: false,
    };
    while trace.iterations < config.max_iterations {
        let mut next = vec![0.0; k];
        for p in &probs {
            let mix: f64 = p.iter().zip(&lambda).map(|(p, l)| p * l).sum();
            for i in 0..k {
                next[i] += lambda[i] * p[i] / mix;
            }
        }
        for w in &mut next {
            *w /= events;
        }
        let z: f64 = next.iter().sum();
        for w in &mut next {
            *w /= z;
        }
        let delta = next.iter().zip(&lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        lambda = next;
        trace.iterations += 1;
        trace.log_likelihoods.push(log_likelihood(&lambda));
        if delta < config.tolerance {
            trace.converged = true;
            break;
        }
    }
    let model = InterpolatedModel {
        components,
        weights: InterpolationWeights(lambda),
    };
    Ok((model, trace))
}
