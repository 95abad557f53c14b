mod common;

use cascade_slt::corpus::{build_vocabulary, Sentence};
use cascade_slt::lm::{count_ngrams, parse_arpa, NGramModel};
use cascade_slt::qe::{
    hypothesis_from_sentence, kernel_matrix, FeatureExtractor, FeatureTable, GpConfig, GpModel, Hyperparameters,
    Standardizer, FEATURE_NAMES,
};
use common::dense_inverse;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn feature(extractor: &FeatureExtractor, line: &str, name: &str) -> f64 {
    let i = FEATURE_NAMES.iter().position(|f| *f == name).unwrap();
    extractor.extract(&hypothesis_from_sentence("u", Sentence::parse(line)), 0.0)[i]
}

#[test]
fn token_and_oov_features() {
    let corpus = vec![Sentence::parse("a")];
    let vocab = build_vocabulary(&corpus, 10, 1);
    let lm = NGramModel::train(&corpus, 2, &vocab);
    let counts = count_ngrams(&corpus, 2, &vocab);
    let ex = FeatureExtractor::new(&lm, &counts);
    assert_eq!(feature(&ex, "a b c", "token_count"), 3.0);
    assert_eq!(feature(&ex, "a qqq", "oov_fraction"), 0.5);
    assert_eq!(feature(&ex, "ab cdef", "mean_token_length"), 3.0);
    assert_eq!(feature(&ex, "a a a b", "type_token_ratio"), 0.5);
    assert_eq!(feature(&ex, "x , 12 .", "punctuation_fraction"), 0.5);
    assert_eq!(feature(&ex, "x , 12 3.5", "numeric_fraction"), 0.5);
}

#[test]
fn uniform_lm_gives_minus_one_per_word() {
    let mut arpa = String::from("\\data\\\nngram 1=11\n\n\\1-grams:\n-99\t<s>\n-1\t</s>\n-1\t<unk>\n");
    for i in 0..8 {
        arpa += &format!("-1\tw{i}\n");
    }
    arpa += "\n\\end\\\n";
    let lm = parse_arpa(arpa.as_bytes()).unwrap();
    let corpus = vec![Sentence::parse("w0 w1")];
    let counts = count_ngrams(&corpus, 1, lm.vocab());
    let ex = FeatureExtractor::new(&lm, &counts);
    assert!((feature(&ex, "w3 w4 w5", "lm_log10_prob_per_word") + 1.0).abs() < 1e-12);
    assert!((feature(&ex, "w3 w4 w5", "lm_log10_prob") + 4.0).abs() < 1e-12);
    assert!((feature(&ex, "w3", "lm_perplexity") - 10.0).abs() < 1e-9);
}

#[test]
fn feature_subset_and_unknown_name() {
    let corpus = vec![Sentence::parse("a b")];
    let vocab = build_vocabulary(&corpus, 10, 1);
    let lm = NGramModel::train(&corpus, 2, &vocab);
    let counts = count_ngrams(&corpus, 2, &vocab);
    let ex = FeatureExtractor::new(&lm, &counts)
        .with_features(&["oov_fraction", "token_count"])
        .unwrap();
    assert_eq!(ex.names(), ["oov_fraction", "token_count"]);
    assert_eq!(
        ex.extract(&hypothesis_from_sentence("u", Sentence::parse("a z")), 0.0),
        [0.5, 2.0]
    );
    let ex = FeatureExtractor::new(&lm, &counts);
    assert!(ex.with_features(&["no_such_feature"]).is_err());
}

#[test]
fn feature_table_round_trip() {
    let table = FeatureTable {
        names: vec!["f1".into(), "f2".into()],
        keys: vec!["u1:1".into(), "u1:2".into()],
        rows: vec![vec![0.1, -3.0], vec![1e-300, 2.5]],
    };
    let back = FeatureTable::parse(table.to_tsv().as_bytes()).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.row("u1:2"), Some(&[1e-300, 2.5][..]));
}

fn names(f: usize) -> Vec<String> {
    (1..=f).map(|i| format!("x{i}")).collect()
}

fn planted(rng: &mut ChaCha8Rng, n: usize, f: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..f).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| r[0] + (1.5 * r[1]).sin() - 0.5 * r[2] * r[2] + 0.05 * rng.gen_range(-1.0..1.0))
        .collect();
    (x, y)
}

#[test]
fn constant_target_predicts_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let model = GpModel::train(&x, &[4.2; 20], &names(2), &GpConfig::default()).unwrap();
    for q in [[0.0, 0.0], [0.5, 0.1], [9.0, -3.0]] {
        assert!((model.predict(&q).unwrap().0 - 4.2).abs() < 1e-9);
    }
}

#[test]
fn linear_signal_gets_shortest_lengthscale() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
    let model = GpModel::train(&x, &y, &names(4), &GpConfig::default()).unwrap();
    assert_eq!(model.ranking().entries[0].0, "x1");
    let l = &model.hyperparameters().lengthscales;
    assert!(l[1..].iter().all(|&v| v > l[0]));
}

#[test]
fn two_point_closed_form() {
    let x = vec![vec![0.0], vec![1.0]];
    let y = vec![3.0, 5.0];
    let hyper = Hyperparameters {
        signal_variance: 1.3,
        lengthscales: vec![0.8],
        noise_variance: 0.2,
    };
    let model = GpModel::fit(&x, &y, &names(1), hyper).unwrap();
    // standardized inputs are -1 and +1, targets -1 and +1
    let (s, l, noise) = (1.3, 0.8, 0.2);
    let k = |a: f64, b: f64| s * (-0.5 * (a - b) * (a - b) / (l * l)).exp();
    let weight = 1.0 / (s + noise - k(-1.0, 1.0));
    for q in [-0.5, 0.25, 2.0] {
        let z = (q - 0.5) / 0.5;
        let mean = 4.0 + (k(z, 1.0) - k(z, -1.0)) * weight;
        assert!((model.predict(&[q]).unwrap().0 - mean).abs() < 1e-12);
    }
}

#[test]
fn single_point_is_rejected() {
    assert!(GpModel::train(&[vec![1.0]], &[1.0], &names(1), &GpConfig::default()).is_err());
    assert!(GpModel::train(&[vec![1.0], vec![2.0]], &[1.0], &names(1), &GpConfig::default()).is_err());
    assert!(GpModel::train(
        &[vec![1.0], vec![f64::NAN]],
        &[1.0, 2.0],
        &names(1),
        &GpConfig::default()
    )
    .is_err());
}

#[test]
fn predictions_match_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = planted(&mut rng, 30, 3);
    let hyper = Hyperparameters {
        signal_variance: 0.9,
        lengthscales: vec![0.7, 1.4, 2.0],
        noise_variance: 0.05,
    };
    let model = GpModel::fit(&x, &y, &names(3), hyper.clone()).unwrap();
    let xs: Vec<Standardizer> = (0..3)
        .map(|d| Standardizer::fit(&x.iter().map(|r| r[d]).collect::<Vec<_>>()))
        .collect();
    let ys = Standardizer::fit(&y);
    let std = |r: &[f64]| -> Vec<f64> { r.iter().zip(&xs).map(|(v, s)| s.apply(*v)).collect() };
    let train = DMatrix::from_fn(30, 3, |i, d| std(&x[i])[d]);
    let mut k: Vec<Vec<f64>> = (0..30)
        .map(|i| kernel_matrix(&train, &train, &hyper).row(i).iter().copied().collect())
        .collect();
    for (i, row) in k.iter_mut().enumerate() {
        row[i] += hyper.noise_variance;
    }
    let inv = dense_inverse(&k);
    let yz: Vec<f64> = y.iter().map(|v| ys.apply(*v)).collect();
    for _ in 0..10 {
        let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let qm = DMatrix::from_row_slice(1, 3, &std(&q));
        let ks: Vec<f64> = kernel_matrix(&train, &qm, &hyper).column(0).iter().copied().collect();
        let w: Vec<f64> = (0..30).map(|i| (0..30).map(|j| inv[i][j] * ks[j]).sum()).collect();
        let mean = ys.invert(w.iter().zip(&yz).map(|(a, b)| a * b).sum());
        let var = (hyper.signal_variance - w.iter().zip(&ks).map(|(a, b)| a * b).sum::<f64>() + hyper.noise_variance)
            * ys.sd
            * ys.sd;
        let (m, v) = model.predict(&q).unwrap();
        assert!((m - mean).abs() < 1e-8 * mean.abs().max(1.0));
        assert!((v - var).abs() < 1e-8 * var.max(1.0));
    }
}

#[test]
fn interpolates_training_points_as_noise_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, y) = planted(&mut rng, 12, 3);
    let hyper = Hyperparameters {
        signal_variance: 1.0,
        lengthscales: vec![0.5; 3],
        noise_variance: 1e-10,
    };
    let model = GpModel::fit(&x, &y, &names(3), hyper).unwrap();
    for (r, t) in x.iter().zip(&y) {
        let (m, v) = model.predict(r).unwrap();
        assert!((m - t).abs() < 1e-6 && v < 1e-6, "{m} {t} {v}");
    }
}

fn rmse(model: &GpModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let se: f64 = x
        .iter()
        .zip(y)
        .map(|(r, t)| (model.predict(r).unwrap().0 - t).powi(2))
        .sum();
    (se / y.len() as f64).sqrt()
}

#[test]
fn selection_then_retraining_keeps_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, y) = planted(&mut rng, 150, 8);
    let (hx, hy) = planted(&mut rng, 100, 8);
    let full = GpModel::train(&x, &y, &names(8), &GpConfig::default()).unwrap();
    let top = full.select_features(3).unwrap();
    let mut chosen = top.names();
    chosen.sort();
    assert_eq!(chosen, ["x1", "x2", "x3"]);

    let cols: Vec<usize> = top
        .names()
        .iter()
        .map(|n| n[1..].parse::<usize>().unwrap() - 1)
        .collect();
    let pick =
        |rows: &[Vec<f64>]| -> Vec<Vec<f64>> { rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect() };
    let reduced = GpModel::train(&pick(&x), &y, &top.names(), &GpConfig::default()).unwrap();
    let (before, after) = (rmse(&full, &hx, &hy), rmse(&reduced, &pick(&hx), &hy));
    assert!(after <= 1.1 * before, "{before} -> {after}");

    assert_eq!(full.select_features(8).unwrap().entries.len(), 8);
    assert!(full.select_features(0).is_err() && full.select_features(9).is_err());
}

#[test]
fn json_round_trip_preserves_predictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (x, y) = planted(&mut rng, 40, 3);
    let model = GpModel::train(&x, &y, &names(3), &GpConfig::default()).unwrap();
    let back = GpModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back.feature_names(), model.feature_names());
    for r in &x[..10] {
        assert_eq!(back.predict(r).unwrap(), model.predict(r).unwrap());
    }
    assert!(GpModel::from_json("{\"version\": 99}").is_err());
}

#[test]
fn wrong_dimension_rejected() {
    let model = GpModel::fit(
        &[vec![0.0, 1.0], vec![1.0, 0.0]],
        &[0.0, 1.0],
        &names(2),
        Hyperparameters {
            signal_variance: 1.0,
            lengthscales: vec![1.0, 1.0],
            noise_variance: 0.1,
        },
    )
    .unwrap();
    assert!(model.predict(&[1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardizer_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
        let s = Standardizer::fit(&values);
        for v in values {
            prop_assert!((s.invert(s.apply(v)) - v).abs() <= 1e-12 * v.abs().max(1.0) * 1e3);
        }
    }

    #[test]
    fn kernel_symmetric(seed in 0u64..1000, n in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-3.0..3.0));
        let hyper = Hyperparameters {
            signal_variance: rng.gen_range(0.1..4.0),
            lengthscales: (0..3).map(|_| rng.gen_range(0.1..5.0)).collect(),
            noise_variance: 0.1,
        };
        let k = kernel_matrix(&x, &x, &hyper);
        prop_assert!((&k - k.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn prediction_is_deterministic(seed in 0u64..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = planted(&mut rng, 10, 3);
        let cfg = GpConfig { seed, ..GpConfig::default() };
        let a = GpModel::train(&x, &y, &names(3), &cfg).unwrap();
        let b = GpModel::train(&x, &y, &names(3), &cfg).unwrap();
        prop_assert_eq!(a.predict(&[0.3, -0.7, 1.1]).unwrap(), b.predict(&[0.3, -0.7, 1.1]).unwrap());
    }
}
