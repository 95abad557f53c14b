use cascade_slt::corpus::Sentence;
use cascade_slt::lm::parse_arpa;
use cascade_slt::select::{
    extract_parallel, line_search_batch, rank, score_ced, select_fraction, train_selection_models, LineSearchConfig,
    ScoredSentence,
};
use cascade_slt::synth::mixed_domain;
use proptest::prelude::*;

fn unigram(a: f64, b: f64, end: f64) -> cascade_slt::lm::NGramModel {
    let arpa = format!(
        "\\data\\\nngram 1=5\n\n\\1-grams:\n-99\t<s>\n{}\t</s>\n-99\t<unk>\n{}\ta\n{}\tb\n\n\\end\\\n",
        end.log10(),
        a.log10(),
        b.log10()
    );
    parse_arpa(arpa.as_bytes()).unwrap()
}

fn scored(ceds: &[f64]) -> Vec<ScoredSentence> {
    ceds.iter()
        .enumerate()
        .map(|(index, &ced)| ScoredSentence {
            sentence: Sentence::parse(&format!("line{index}")),
            index,
            h_in: ced,
            h_out: 0.0,
            ced,
        })
        .collect()
}

#[test]
fn ced_of_one_word_by_hand() {
    // a:b is 0.8:0.2 in-domain and 0.2:0.8 out, sentence end 0.5 under both
    let id = unigram(0.4, 0.1, 0.5);
    let ood = unigram(0.1, 0.4, 0.5);
    let s = score_ced(&id, &ood, &[Sentence::parse("a")]);
    let h_in = -(0.4f64.log2() + 0.5f64.log2()) / 2.0;
    let h_out = -(0.1f64.log2() + 0.5f64.log2()) / 2.0;
    assert!((s[0].h_in - h_in).abs() < 1e-12);
    assert!((s[0].h_out - h_out).abs() < 1e-12);
    // the word term alone is -2 bits, spread over two events
    assert!((s[0].ced + 1.0).abs() < 1e-12);
    assert_eq!(s[0].ced, s[0].h_in - s[0].h_out);
}

#[test]
fn identical_models_score_zero() {
    let data = mixed_domain(1, 50, 50);
    let (m, _) = train_selection_models(&data.pool, &data.pool, 3);
    assert!(score_ced(&m, &m, &data.pool).iter().all(|s| s.ced == 0.0));
}

#[test]
fn swapping_models_negates_scores() {
    let data = mixed_domain(2, 100, 100);
    let (a, b) = train_selection_models(&data.in_domain_train, &data.pool, 2);
    let forward = score_ced(&a, &b, &data.pool);
    let backward = score_ced(&b, &a, &data.pool);
    assert!(forward.iter().zip(&backward).all(|(f, r)| f.ced == -r.ced));
}

#[test]
fn fraction_examples() {
    let s = scored(&[-1.0, 0.0, 2.0, 5.0]);
    assert_eq!(select_fraction(&s, 0.5).unwrap().selected(), [0, 1]);
    let s = scored(&[5.0, 2.0, -1.0, 0.0]);
    assert_eq!(select_fraction(&s, 0.5).unwrap().selected(), [2, 3]);
    assert_eq!(select_fraction(&s, 1.0).unwrap().selected(), [2, 3, 1, 0]);
    assert_eq!(select_fraction(&s, 0.25).unwrap().chosen, 1);
}

#[test]
fn fraction_out_of_range_is_rejected() {
    let s = scored(&[0.0, 1.0]);
    for f in [0.0, -0.1, 1.01, f64::NAN] {
        assert!(select_fraction(&s, f).is_err(), "{f}");
    }
}

proptest! {
    #[test]
    fn ranking_sorted_and_stable(ceds in proptest::collection::vec(-3i32..3, 0..60), fraction in 0.01f64..=1.0) {
        let s = scored(&ceds.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let r = select_fraction(&s, fraction).unwrap();
        prop_assert_eq!(r.ranking.len(), s.len());
        for w in r.ranking.windows(2) {
            let (a, b) = (&s[w[0]], &s[w[1]]);
            prop_assert!(a.ced < b.ced || (a.ced == b.ced && a.index < b.index));
        }
        prop_assert_eq!(r.chosen, (fraction * s.len() as f64 - 1e-9).ceil().max(0.0) as usize);
        prop_assert_eq!(rank(&s), r.ranking.clone());
        let mask = r.mask();
        prop_assert_eq!(mask.iter().filter(|&&m| m).count(), r.chosen);
    }
}

#[test]
fn enrichment_on_disjoint_domains() {
    let data = mixed_domain(5, 400, 400);
    let (lm_in, lm_out) = train_selection_models(&data.in_domain_train, &data.pool, 3);
    let s = score_ced(&lm_in, &lm_out, &data.pool);
    let r = select_fraction(&s, 0.25).unwrap();
    let hits = r.selected().iter().filter(|&&i| data.in_domain[i]).count();
    assert!(hits as f64 > 0.9 * r.chosen as f64, "{hits}/{}", r.chosen);
}

#[test]
fn line_search_excludes_noise_tail() {
    let data = mixed_domain(6, 500, 500);
    let (lm_in, lm_out) = train_selection_models(&data.in_domain_train, &data.pool, 3);
    let s = score_ced(&lm_in, &lm_out, &data.pool);
    let grid = [50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];
    let r = line_search_batch(&s, &data.dev, &grid, &LineSearchConfig::default()).unwrap();
    assert!(r.chosen <= 600, "chose {}", r.chosen);
    assert_ne!(r.chosen, grid[0]);
    assert_ne!(r.chosen, grid[grid.len() - 1]);
    assert_eq!(r.batch_values.iter().map(|b| b.0).collect::<Vec<_>>(), grid);
    let best = r.batch_values.iter().find(|b| b.0 == r.chosen).unwrap().1;
    assert!(r.batch_values.iter().all(|b| b.1 >= best));
}

#[test]
fn single_candidate_is_returned() {
    let data = mixed_domain(7, 30, 30);
    let (a, b) = train_selection_models(&data.in_domain_train, &data.pool, 2);
    let s = score_ced(&a, &b, &data.pool);
    let r = line_search_batch(&s, &data.dev, &[17], &LineSearchConfig::default()).unwrap();
    assert_eq!(r.chosen, 17);
    assert_eq!(r.batch_values.len(), 1);
    assert!(r.batch_values[0].1.is_finite());
}

#[test]
fn empty_dev_is_an_error() {
    let s = scored(&[0.0, 1.0]);
    assert!(line_search_batch(&s, &[], &[1], &LineSearchConfig::default()).is_err());
}

#[test]
fn parallel_extraction() {
    let s = scored(&[3.0, 9.0, -4.0]);
    let r = select_fraction(&s, 0.6).unwrap();
    let target = ["zero", "one", "two"];
    assert_eq!(extract_parallel(&r, &target).unwrap(), ["two", "zero"]);
    assert!(extract_parallel(&r, &target[..2]).is_err());

    let all = select_fraction(&s, 1.0).unwrap();
    let mut back = extract_parallel(&all, &target).unwrap();
    back.sort();
    let mut expected = target.to_vec();
    expected.sort();
    assert_eq!(back, expected);

    let identity: Vec<Sentence> = s.iter().map(|x| x.sentence.clone()).collect();
    let selected: Vec<Sentence> = r.selected().iter().map(|&i| s[i].sentence.clone()).collect();
    assert_eq!(extract_parallel(&r, &identity).unwrap(), selected);
}
