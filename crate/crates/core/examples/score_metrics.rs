//! WER with its edit breakdown, and corpus and sentence BLEU.
//!
//! cargo run --example score_metrics

use cascade_slt::corpus::Sentence;
use cascade_slt::metrics::{bleu_with_sentences, corpus_wer, wer};

fn main() -> cascade_slt::Result<()> {
    let refs: Vec<Sentence> = ["the cat sat on the mat", "it was a sunny day", "good morning"]
        .iter()
        .map(|l| Sentence::parse(l))
        .collect();
    let hyps: Vec<Sentence> = ["the cat sat on a mat", "it was sunny day today", "good morning"]
        .iter()
        .map(|l| Sentence::parse(l))
        .collect();

    for (r, h) in refs.iter().zip(&hyps) {
        let w = wer(r.tokens(), h.tokens());
        println!(
            "{:<24} S={} D={} I={}  WER {:.2}%",
            h.to_line(),
            w.substitutions,
            w.deletions,
            w.insertions,
            100.0 * w.wer()
        );
    }
    println!("corpus WER {:.2}%", 100.0 * corpus_wer(&refs, &hyps)?.wer());

    let report = bleu_with_sentences(&refs, &hyps, 4)?;
    println!(
        "BLEU {:.2} (BP {:.3}, precisions {:.3?})",
        report.percent(),
        report.brevity_penalty,
        report.precisions
    );
    for (h, s) in hyps.iter().zip(report.sentence_scores.as_deref().unwrap_or_default()) {
        println!("  {:<24} sentence BLEU {s:.2}", h.to_line());
    }
    Ok(())
}
