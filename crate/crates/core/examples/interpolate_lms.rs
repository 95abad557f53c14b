//! Mixes an in-domain and an out-of-domain model with EM-tuned weights.
//!
//! cargo run --example interpolate_lms

use cascade_slt::corpus::{build_vocabulary, Sentence};
use cascade_slt::lm::{interpolate, perplexity, EmConfig, NGramModel};
use cascade_slt::synth::mixed_domain;

fn main() -> cascade_slt::Result<()> {
    // both corpora hold different in-domain sentences, so each model helps
    let data = mixed_domain(3, 300, 2000);
    let general = &data.pool;
    let specific = &data.in_domain_train;

    // components must share one vocabulary
    let all: Vec<Sentence> = specific.iter().chain(general).cloned().collect();
    let vocab = build_vocabulary(&all, 60_000, 1);
    let in_lm = NGramModel::train(specific, 3, &vocab);
    let out_lm = NGramModel::train(general, 3, &vocab);

    let (tune, test) = data.dev.split_at(data.dev.len() / 2);
    println!("in-domain alone  {:.2}", perplexity(&in_lm, test));
    println!("general alone    {:.2}", perplexity(&out_lm, test));

    let (mixed, trace) = interpolate(vec![in_lm, out_lm], tune, &EmConfig::default())?;
    println!(
        "EM: {} iterations, converged {}, weights {:?}",
        trace.iterations,
        trace.converged,
        mixed.weights().as_slice()
    );
    println!("interpolated     {:.2}", perplexity(&mixed, test));
    Ok(())
}
