mod common;

use cascade_slt::corpus::{build_vocabulary, Sentence, Vocabulary, DEFAULT_MAX_VOCAB};
use cascade_slt::lm::{
    count_ngrams, cross_entropy, interpolate, parse_arpa, perplexity, prune, EmConfig, LanguageModel, NGramModel,
};
use cascade_slt::synth::MarkovSource;
use common::{random_corpus, ReferenceMkn};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(lines: &[&str]) -> Vec<Sentence> {
    lines.iter().map(|l| Sentence::parse(l)).collect()
}

fn trained(c: &[Sentence], order: usize) -> NGramModel {
    NGramModel::train(c, order, &build_vocabulary(c, DEFAULT_MAX_VOCAB, 1))
}

fn uniform_unigram() -> NGramModel {
    let mut arpa = String::from("\\data\\\nngram 1=11\n\n\\1-grams:\n-99\t<s>\n-1\t</s>\n-1\t<unk>\n");
    for i in 0..8 {
        arpa += &format!("-1\tw{i}\n");
    }
    arpa += "\n\\end\\\n";
    parse_arpa(arpa.as_bytes()).unwrap()
}

#[test]
fn count_examples() {
    let c = corpus(&["a"]);
    let v = build_vocabulary(&c, 10, 1);
    let t = count_ngrams(&c, 1, &v);
    let id = |w: &str| v.id(w).unwrap();
    assert_eq!(t.raw_count(&[id("a")]), 1);
    assert_eq!(t.raw_count(&[id("</s>")]), 1);
    assert_eq!(t.raw_count(&[id("<s>")]), 0);

    let c = corpus(&["a b", "a b"]);
    let v = build_vocabulary(&c, 10, 1);
    let t = count_ngrams(&c, 2, &v);
    assert_eq!(t.raw_count(&[v.id("a").unwrap(), v.id("b").unwrap()]), 2);

    let c = corpus(&["a b", "c b"]);
    let v = build_vocabulary(&c, 10, 1);
    let t = count_ngrams(&c, 2, &v);
    assert_eq!(t.adjusted_count(&[v.id("b").unwrap()]), 2);
}

#[test]
fn fifty_sentence_trigram_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let c = random_corpus(&mut rng, 50, 15, 9);
    let model = trained(&c, 3);
    let reference = ReferenceMkn::new(&c, 3);
    let words: Vec<&str> = model.vocab().words().filter(|w| *w != "<s>").collect();
    for h1 in std::iter::once("<s>").chain(words.iter().copied()) {
        for h2 in &words {
            for w in &words {
                let got = 10f64.powf(model.score(&[h1, h2], w));
                assert!((got - reference.prob(&[h1, h2], w)).abs() <= 1e-9, "{h1} {h2} {w}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mkn_matches_reference_and_normalizes(seed in 0u64..10_000, order in 1usize..=4, n in 1usize..120, v in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_corpus(&mut rng, n, v, 8);
        let model = trained(&c, order);
        let reference = ReferenceMkn::new(&c, order);
        for s in &c {
            let mut history = vec!["<s>"];
            for w in s.iter().chain(std::iter::once("</s>")) {
                let got = 10f64.powf(model.score(&history, w));
                prop_assert!((got - reference.prob(&history, w)).abs() <= 1e-9);
                history.push(w);
            }
        }
        let predictable: Vec<_> = model.vocab().predictable().collect();
        for ctx in model.contexts().chain(std::iter::once(&[][..])) {
            let mass: f64 = predictable.iter().map(|&w| model.ln_prob_ids(ctx, w).exp()).sum();
            prop_assert!((mass - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn perplexity_ignores_line_order(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = random_corpus(&mut rng, 80, 12, 8);
        let model = trained(&train, 3);
        let mut dev = random_corpus(&mut rng, 30, 14, 8);
        let before = perplexity(&model, &dev);
        dev.reverse();
        dev.rotate_left(seed as usize % 30);
        let after = perplexity(&model, &dev);
        prop_assert!((after - before).abs() <= 1e-9 * before, "{} {}", before, after);
    }
}

#[test]
fn single_sentence_unigram_by_hand() {
    // continuation counts a=1, b=1, </s>=1; n1=3, n2=0 -> single discount 0.999
    let model = trained(&corpus(&["a b"]), 2);
    let d = 0.999;
    let seen = (1.0 - d) / 3.0 + d / 4.0;
    for w in ["a", "b", "</s>"] {
        assert!((10f64.powf(model.score::<&str>(&[], w)) - seen).abs() < 1e-12);
    }
    assert!((10f64.powf(model.score::<&str>(&[], "<unk>")) - d / 4.0).abs() < 1e-12);
}

#[test]
fn stored_entry_and_backoff_by_hand() {
    let arpa = "\\data\\\nngram 1=4\nngram 2=1\n\n\\1-grams:\n-99\t<s>\t-0.3\n-0.5\t</s>\n-0.7\t<unk>\n-0.4\ta\t-0.2\n\n\\2-grams:\n-0.1\t<s>\ta\n\n\\end\\\n";
    let model = parse_arpa(arpa.as_bytes()).unwrap();
    assert_eq!(model.score(&["<s>"], "a"), -0.1);
    assert!((model.score(&["a"], "</s>") - (-0.2 - 0.5)).abs() < 1e-12);
    assert!((model.score(&["<s>"], "</s>") - (-0.3 - 0.5)).abs() < 1e-12);
    assert!((model.score(&["<s>"], "never-seen") - (-0.3 - 0.7)).abs() < 1e-12);
}

#[test]
fn uniform_model_limits() {
    let model = uniform_unigram();
    assert!((model.score::<&str>(&[], "w3") + 1.0).abs() < 1e-12);
    assert!((cross_entropy(&model, &Sentence::parse("w5")) - 10f64.log2()).abs() < 1e-9);
    let dev = corpus(&["w1 w2 w3", "w0", "", "w7 w7"]);
    assert!((perplexity(&model, &dev) - 10.0).abs() < 1e-9);
}

#[test]
fn deterministic_model_has_zero_cross_entropy() {
    let arpa = "\\data\\\nngram 1=3\n\n\\1-grams:\n-99\t<s>\n0\t</s>\n-99\t<unk>\n\n\\end\\\n";
    let model = parse_arpa(arpa.as_bytes()).unwrap();
    assert_eq!(cross_entropy(&model, &Sentence::default()), 0.0);
}

#[test]
fn bigram_cross_entropy_by_hand() {
    let arpa = "\\data\\\nngram 1=5\nngram 2=3\n\n\\1-grams:\n-99\t<s>\t0\n-1\t</s>\n-1\t<unk>\n-0.5\ta\t0\n-0.5\tb\t0\n\n\\2-grams:\n-0.2\t<s>\ta\n-0.3\ta\tb\n-0.1\tb\t</s>\n\n\\end\\\n";
    let model = parse_arpa(arpa.as_bytes()).unwrap();
    let bits = -(-0.2 - 0.3 - 0.1) * 10f64.log2() / 3.0;
    assert!((cross_entropy(&model, &Sentence::parse("a b")) - bits).abs() < 1e-12);
}

#[test]
fn training_text_is_less_perplexing_than_held_out() {
    let src = MarkovSource::new("t", 120, 5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let train = src.corpus(800, &mut rng);
    let held_out = src.corpus(200, &mut rng);
    let model = trained(&train, 3);
    assert!(perplexity(&model, &train) <= perplexity(&model, &held_out));
}

#[test]
fn more_matched_text_lowers_held_out_perplexity() {
    let src = MarkovSource::new("t", 150, 6, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let big = src.corpus(2000, &mut rng);
    let held_out = src.corpus(300, &mut rng);
    let vocab = build_vocabulary(&big, DEFAULT_MAX_VOCAB, 1);
    let small = NGramModel::train(&big[..200], 3, &vocab);
    let large = NGramModel::train(&big, 3, &vocab);
    assert!(perplexity(&large, &held_out) < perplexity(&small, &held_out));
}

fn shared_pair(seed: u64) -> (NGramModel, NGramModel, Vocabulary, Vec<Sentence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_corpus(&mut rng, 200, 20, 8);
    let b = random_corpus(&mut rng, 200, 30, 8);
    let all: Vec<Sentence> = a.iter().chain(&b).cloned().collect();
    let vocab = build_vocabulary(&all, DEFAULT_MAX_VOCAB, 1);
    let dev = random_corpus(&mut rng, 50, 25, 8);
    (
        NGramModel::train(&a, 3, &vocab),
        NGramModel::train(&b, 3, &vocab),
        vocab,
        dev,
    )
}

#[test]
fn identical_components_keep_uniform_weights() {
    let (m, _, _, dev) = shared_pair(7);
    let (mix, trace) = interpolate(vec![m.clone(), m.clone(), m], &dev, &EmConfig::default()).unwrap();
    for i in 0..3 {
        assert!((mix.weights().get(i) - 1.0 / 3.0).abs() < 1e-12, "{:?}", mix.weights());
    }
    assert!(trace.converged);
}

#[test]
fn em_weights_sum_to_one_and_likelihood_rises() {
    let (m1, m2, _, dev) = shared_pair(8);
    let (mix, trace) = interpolate(vec![m1, m2], &dev, &EmConfig::default()).unwrap();
    let sum: f64 = mix.weights().as_slice().iter().sum();
    assert!((sum - 1.0).abs() <= 1e-12);
    assert!(trace.log_likelihoods.windows(2).all(|w| w[1] >= w[0]));
    assert!(trace.iterations <= 200);
}

#[test]
fn interpolation_errors() {
    let (m1, m2, _, _) = shared_pair(9);
    assert!(interpolate(vec![m1.clone(), m2], &[], &EmConfig::default()).is_err());
    assert!(interpolate(vec![m1], &corpus(&["w1"]), &EmConfig::default()).is_err());
}

#[test]
fn infinite_threshold_keeps_only_unigrams() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let model = trained(&random_corpus(&mut rng, 300, 20, 10), 3);
    let pruned = prune(&model, f64::INFINITY).unwrap();
    assert_eq!(pruned.table(1).len(), model.table(1).len());
    assert!(pruned.table(2).is_empty() && pruned.table(3).is_empty());
    let mass: f64 = pruned
        .vocab()
        .predictable()
        .map(|w| pruned.ln_prob_ids(&[], w).exp())
        .sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn tiny_threshold_barely_moves_perplexity() {
    let src = MarkovSource::new("p", 200, 6, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let train = src.corpus(3000, &mut rng);
    let dev = src.corpus(300, &mut rng);
    let model = trained(&train, 4);
    let pruned = prune(&model, 1e-10).unwrap();
    let (a, b) = (perplexity(&model, &dev), perplexity(&pruned, &dev));
    assert!(((b - a) / a).abs() < 0.005, "{a} -> {b}");
    let heavy = prune(&model, 1e-5).unwrap();
    assert!(heavy.num_entries() < model.num_entries());
    for ctx in heavy.contexts() {
        let mass: f64 = heavy
            .vocab()
            .predictable()
            .map(|w| heavy.ln_prob_ids(ctx, w).exp())
            .sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}

#[test]
fn negative_threshold_is_rejected() {
    let model = trained(&corpus(&["a b c"]), 2);
    assert!(prune(&model, -1.0).is_err());
    assert!(prune(&model, f64::NAN).is_err());
}

#[test]
fn model_order_reported() {
    assert_eq!(trained(&corpus(&["a b c"]), 4).order(), 4);
}
