//! Trains a trigram modified Kneser-Ney model on synthetic text, writes it as
//! ARPA, reads it back and reports perplexity on held-out sentences.
//!
//! cargo run --example train_lm

use cascade_slt::corpus::build_vocabulary;
use cascade_slt::lm::{perplexity, read_arpa, write_arpa, NGramModel};
use cascade_slt::synth::MarkovSource;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = MarkovSource::new("w", 120, 5, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let train = source.corpus(2000, &mut rng);
    let heldout = source.corpus(200, &mut rng);

    let vocab = build_vocabulary(&train, 60_000, 1);
    let model = NGramModel::train(&train, 3, &vocab);
    println!("vocabulary {} words, {} n-grams", vocab.len(), model.num_entries());
    println!("p(w3 | w1 w2) = {:.4}", model.score(&["w1", "w2"], "w3").exp());

    let dir = std::env::temp_dir().join("cascade-train-lm");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.arpa");
    write_arpa(&model, &path)?;
    let reloaded = read_arpa(&path)?;
    println!("wrote {}", path.display());
    println!("train perplexity    {:.2}", perplexity(&reloaded, &train));
    println!("held-out perplexity {:.2}", perplexity(&reloaded, &heldout));
    Ok(())
}
