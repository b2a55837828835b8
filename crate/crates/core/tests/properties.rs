//! Randomized invariants across the metric stack.

use proptest::prelude::*;
use wrdscore::embedding::{compute_idf, embed_sequence, EmbeddingTable, OovPolicy, WeightScheme};
use wrdscore::eval::{score_dataset, EvalPair, Metric, ScoreConfig};
use wrdscore::metrics::{
    greedy_match_score, one_hot_reduction_check, wmd_baseline, wrd_precision, wrd_recall, wrdscore,
};
use wrdscore::{TokenSequence, WeightedEmbeddingSequence};

const VOCAB: usize = 12;
const DIM: usize = 4;

fn table_strategy() -> impl Strategy<Value = EmbeddingTable> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, DIM), VOCAB).prop_filter_map("zero vector", |rows| {
        if rows.iter().any(|r| r.iter().all(|x| x.abs() < 1e-3)) {
            return None;
        }
        EmbeddingTable::from_entries(DIM, rows.into_iter().enumerate().map(|(i, v)| (format!("w{i}"), v))).ok()
    })
}

fn tokens_strategy() -> impl Strategy<Value = TokenSequence> {
    prop::collection::vec(0..VOCAB, 1..7)
        .prop_map(|ids| TokenSequence::from_tokens(ids.iter().map(|i| format!("w{i}"))).unwrap())
}

fn scheme_strategy() -> impl Strategy<Value = WeightScheme> {
    prop_oneof![
        Just(WeightScheme::Uniform),
        Just(WeightScheme::Norm),
        Just(WeightScheme::Tfidf),
        Just(WeightScheme::NormTfidf),
    ]
}

fn embed_pair(
    table: &EmbeddingTable,
    r: &TokenSequence,
    p: &TokenSequence,
    scheme: WeightScheme,
) -> (WeightedEmbeddingSequence, WeightedEmbeddingSequence) {
    let idf = compute_idf(&[r.clone(), p.clone()]).unwrap();
    let embed = |s| embed_sequence(table, s, scheme, Some(&idf), OovPolicy::Error).unwrap();
    (embed(r), embed(p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scores_in_unit_interval(table in table_strategy(), r in tokens_strategy(), p in tokens_strategy(), scheme in scheme_strategy()) {
        let (re, pe) = embed_pair(&table, &r, &p, scheme);
        for s in [wrdscore(&re, &pe).unwrap(), greedy_match_score(&re, &pe, true).unwrap(), greedy_match_score(&re, &pe, false).unwrap()] {
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v), "{s:?}");
            }
            prop_assert!(s.f1 >= s.precision.min(s.recall) - 1e-12);
            prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
        }
    }

    #[test]
    fn self_score_is_one(table in table_strategy(), r in tokens_strategy(), scheme in scheme_strategy()) {
        let (re, _) = embed_pair(&table, &r, &r, scheme);
        let s = wrdscore(&re, &re).unwrap();
        prop_assert!((s.precision - 1.0).abs() <= 1e-9);
        prop_assert!((s.recall - 1.0).abs() <= 1e-9);
        prop_assert!((s.f1 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn precision_coincides_and_recall_dominated(table in table_strategy(), r in tokens_strategy(), p in tokens_strategy(), scheme in scheme_strategy()) {
        let (re, pe) = embed_pair(&table, &r, &p, scheme);
        let greedy = greedy_match_score(&re, &pe, true).unwrap();
        prop_assert_eq!(wrd_precision(&re, &pe).unwrap(), greedy.precision);
        prop_assert!(wrd_recall(&re, &pe).unwrap() <= greedy.recall + 1e-9);
    }

    #[test]
    fn permutation_invariant(table in table_strategy(), r in tokens_strategy(), p in tokens_strategy(), seed in any::<u64>()) {
        let (re, pe) = embed_pair(&table, &r, &p, WeightScheme::Norm);
        let mut order: Vec<usize> = (0..re.len()).collect();
        // simple deterministic shuffle driven by the seed
        let mut state = seed;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled = re.permuted(&order);
        prop_assert!((wrd_precision(&re, &pe).unwrap() - wrd_precision(&shuffled, &pe).unwrap()).abs() <= 1e-9);
        prop_assert!((wrd_recall(&re, &pe).unwrap() - wrd_recall(&shuffled, &pe).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn wmd_symmetric(table in table_strategy(), r in tokens_strategy(), p in tokens_strategy()) {
        let (re, pe) = embed_pair(&table, &r, &p, WeightScheme::Norm);
        let (rv, pv) = (re.raw_vectors(), pe.raw_vectors());
        let forward = wmd_baseline(&rv, re.weights(), &pv, pe.weights()).unwrap();
        let backward = wmd_baseline(&pv, pe.weights(), &rv, re.weights()).unwrap();
        prop_assert!((forward - backward).abs() <= 1e-9);
        prop_assert!(forward >= 0.0);
    }

    #[test]
    fn one_hot_reduction(r in prop::sample::subsequence((0..10).collect::<Vec<_>>(), 1..10),
                         p in prop::sample::subsequence((0..10).collect::<Vec<_>>(), 1..10)) {
        let seq = |ids: &[i32]| TokenSequence::from_tokens(ids.iter().map(|i| format!("t{i}"))).unwrap();
        let out = one_hot_reduction_check(&seq(&r), &seq(&p)).unwrap();
        prop_assert_eq!(out.set_based, out.one_hot);
    }
}

#[test]
fn score_dataset_is_order_independent() {
    let table = EmbeddingTable::from_entries(
        2,
        [
            ("get", vec![1.0, 0.1]),
            ("count", vec![0.2, 1.0]),
            ("size", vec![0.3, 0.8]),
            ("set", vec![0.9, -0.4]),
            ("name", vec![-0.5, 0.5]),
        ],
    )
    .unwrap();
    let raw = [
        ("getCount", "size"),
        ("setName", "getName"),
        ("size", "count"),
        ("getName", "name"),
        ("count", "setCount"),
    ];
    let pairs: Vec<EvalPair> = raw
        .iter()
        .enumerate()
        .map(|(i, (r, p))| EvalPair {
            id: format!("{i}"),
            reference: r.to_string(),
            prediction: p.to_string(),
            human_score: None,
        })
        .collect();
    let config = ScoreConfig {
        metrics: vec![Metric::Rouge1, Metric::Greedy, Metric::Wrdscore, Metric::Wmd],
        ..ScoreConfig::default()
    };
    let forward = score_dataset(&pairs, Some(&table), None, &config).unwrap();
    let reversed_pairs: Vec<EvalPair> = pairs.iter().rev().cloned().collect();
    let backward = score_dataset(&reversed_pairs, Some(&table), None, &config).unwrap();
    for (name, column) in &forward.metric_columns {
        let mut other = backward.metric_columns[name].clone();
        other.reverse();
        assert_eq!(column, &other, "{name}");
    }
}
