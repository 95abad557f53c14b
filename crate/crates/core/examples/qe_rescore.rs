//! Quality estimation and confidence-gated N-best rescoring end to end:
//! extract features, train the GP on sentence-BLEU targets, predict, rescore
//! the least confident lists and compare BLEU with the 1-best and the oracle.
//!
//! cargo run --release --example qe_rescore

use std::collections::HashMap;

use cascade_slt::corpus::{build_vocabulary, Sentence};
use cascade_slt::lm::count_ngrams;
use cascade_slt::lm::estimate_mkn;
use cascade_slt::metrics::{bleu, sentence_bleu};
use cascade_slt::qe::{FeatureExtractor, GpConfig, GpModel, FEATURE_NAMES};
use cascade_slt::rescore::{gate_and_rescore, oracle_select, qe_predictions, OracleMetric, RescoreConfig};
use cascade_slt::synth::{synthetic_nbest, MarkovSource, NBestConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cascade_slt::Result<()> {
    let source = MarkovSource::new("w", 300, 6, 99)
        .with_homophones(0.4, 0)
        .with_surprise(0.08);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let lm_text = source.corpus(4000, &mut rng);
    let vocab = build_vocabulary(&lm_text, 60_000, 1);
    let counts = count_ngrams(&lm_text, 3, &vocab);
    let lm = estimate_mkn(&counts);

    // text-side features only
    let extractor = FeatureExtractor::new(&lm, &counts).with_features(&FEATURE_NAMES[..15])?;
    let nbest = |seed| {
        synthetic_nbest(
            &source,
            &NBestConfig {
                seed,
                ..Default::default()
            },
        )
    };
    let train = nbest(1);
    let test = nbest(2);

    let features = extractor.extract_nbest(&train.lists);
    let targets: Vec<f64> = train
        .lists
        .iter()
        .zip(&train.references)
        .flat_map(|(l, r)| {
            l.hypotheses()
                .iter()
                .map(move |h| sentence_bleu(r.tokens(), h.tokens.tokens(), 4))
        })
        .collect();
    let config = GpConfig {
        max_rows: Some(400),
        ..Default::default()
    };
    let gp = GpModel::train(&features.rows, &targets, &features.names, &config)?;
    println!("most relevant features:");
    for (name, relevance) in gp.ranking().entries.iter().take(5) {
        println!("  {name:<20} {relevance:.3}");
    }

    let predictions = qe_predictions(&gp, &extractor.extract_nbest(&test.lists), &test.lists, 10)?;
    let one_best: Vec<Sentence> = test.lists.iter().map(|l| l.best().tokens.clone()).collect();
    println!("1-best BLEU {:.2}", bleu(&test.references, &one_best, 4)?.percent());
    for q in [0.25, 0.55, 0.8, 1.0] {
        let out = gate_and_rescore(
            &test.lists,
            &predictions,
            &RescoreConfig {
                gate_quantile: q,
                ..Default::default()
            },
        )?;
        let changed = out.decisions.iter().filter(|d| d.chosen_rank != 1).count();
        println!(
            "gate {q:.2}: BLEU {:.2}, {changed} hypotheses replaced",
            bleu(&test.references, &out.hypotheses, 4)?.percent()
        );
    }

    let refs: HashMap<String, Sentence> = test
        .lists
        .iter()
        .map(|l| l.utt_id().to_owned())
        .zip(test.references.iter().cloned())
        .collect();
    let ranks = oracle_select(&test.lists, &refs, OracleMetric::SentenceBleu)?;
    let oracle: Vec<Sentence> = test
        .lists
        .iter()
        .zip(&ranks)
        .map(|(l, &r)| l.at_rank(r).expect("rank from list").tokens.clone())
        .collect();
    println!("oracle BLEU {:.2}", bleu(&test.references, &oracle, 4)?.percent());
    Ok(())
}
