//! Relative-entropy pruning at increasing thresholds.
//!
//! cargo run --example prune_lm

use cascade_slt::corpus::build_vocabulary;
use cascade_slt::lm::{perplexity, prune, NGramModel};
use cascade_slt::synth::MarkovSource;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cascade_slt::Result<()> {
    let source = MarkovSource::new("w", 150, 6, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let train = source.corpus(3000, &mut rng);
    let test = source.corpus(300, &mut rng);
    let vocab = build_vocabulary(&train, 60_000, 1);
    let full = NGramModel::train(&train, 3, &vocab);

    println!("{:>10} {:>8} {:>10}", "threshold", "entries", "perplexity");
    println!(
        "{:>10} {:>8} {:>10.2}",
        "none",
        full.num_entries(),
        perplexity(&full, &test)
    );
    for threshold in [1e-8, 1e-7, 1e-6, 1e-5, 1e-4] {
        let pruned = prune(&full, threshold)?;
        println!(
            "{:>10.0e} {:>8} {:>10.2}",
            threshold,
            pruned.num_entries(),
            perplexity(&pruned, &test)
        );
    }
    Ok(())
}
