//! ROVER over three systems whose errors fall on disjoint word positions.
//!
//! cargo run --example rover_combine

use cascade_slt::corpus::Sentence;
use cascade_slt::metrics::corpus_wer;
use cascade_slt::rover::{combine, rover_combine, HypothesisFile, SystemHypothesis};
use cascade_slt::synth::disjoint_corruption;

fn main() -> cascade_slt::Result<()> {
    let words = |line: &str| line.split_whitespace().map(str::to_owned).collect::<Vec<_>>();
    let a = SystemHypothesis::with_confidences(words("the cat sat down"), vec![0.9, 0.9, 0.8, 0.4])?;
    let b = SystemHypothesis::with_confidences(words("a cat sat"), vec![0.3, 0.9, 0.9])?;
    let c = SystemHypothesis::with_confidences(words("the cat sat on"), vec![0.8, 0.7, 0.9, 0.6])?;
    println!("single utterance: {:?}", combine(&[&a, &b, &c], 0.5, 0.7));

    let data = disjoint_corruption(1, 300, 3, 0.1);
    let files: Vec<HypothesisFile> = data
        .systems
        .iter()
        .map(|sys| HypothesisFile {
            entries: sys
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("utt{i:04}"), SystemHypothesis::new(s.tokens().to_vec())))
                .collect(),
        })
        .collect();
    for (k, sys) in data.systems.iter().enumerate() {
        println!(
            "system {k} WER {:.2}%",
            100.0 * corpus_wer(&data.references, sys)?.wer()
        );
    }
    let combined: Vec<Sentence> = rover_combine(&files, 1.0, 0.7)?
        .into_iter()
        .map(|(_, words)| Sentence::new(words))
        .collect();
    println!(
        "ROVER    WER {:.2}%",
        100.0 * corpus_wer(&data.references, &combined)?.wer()
    );
    Ok(())
}
