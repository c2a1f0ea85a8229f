use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use tf4ctr::data::{
    batches, build_vocabs, read_csv, split_indices, synth_generate, write_csv, BatchOrder, CsvOptions, RawTable,
    SplitStrategy, SynthParams, OOV_ID,
};
use tf4ctr::metrics::auc;

fn raw(rows: Vec<Vec<String>>) -> RawTable {
    let f = rows.first().map_or(0, Vec::len);
    RawTable {
        field_names: (0..f).map(|i| format!("c{i}")).collect(),
        labels: (0..rows.len()).map(|i| (i % 2) as f64).collect(),
        rows,
        groups: None,
    }
}

fn token_rows() -> impl Strategy<Value = Vec<Vec<String>>> {
    (1usize..4).prop_flat_map(|f| proptest::collection::vec(proptest::collection::vec("[a-e]{1,2}", f..=f), 1..40))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_never_leaves_the_vocabulary(train in token_rows(), min_freq in 1usize..4, unseen in "[f-z]{1,3}") {
        let table = raw(train.clone());
        let vocabs = Arc::new(build_vocabs(&table.field_names, &table.rows, min_freq).unwrap());
        let ds = table.encode(&vocabs).unwrap();
        for i in 0..ds.len() {
            for (id, v) in ds.row(i).iter().zip(vocabs.iter()) {
                prop_assert!((*id as usize) < v.size());
            }
        }
        let f = table.field_names.len();
        let test = RawTable { rows: vec![vec![unseen; f]], labels: vec![1.0], ..table };
        let enc = test.encode(&vocabs).unwrap();
        prop_assert!(enc.row(0).iter().all(|&id| id == OOV_ID));
    }

    #[test]
    fn re_encoding_is_the_identity(train in token_rows(), min_freq in 1usize..4) {
        let dir = tempfile::tempdir().unwrap();
        let table = raw(train);
        let vocabs = Arc::new(build_vocabs(&table.field_names, &table.rows, min_freq).unwrap());
        let ds = table.encode(&vocabs).unwrap();
        let path = dir.path().join("enc.csv");
        write_csv(&path, &ds).unwrap();
        let again = read_csv(&path, &CsvOptions::default()).unwrap().encode(&vocabs).unwrap();
        prop_assert_eq!(ds, again);
    }

    #[test]
    fn random_split_partitions_and_reproduces(n in 3usize..300, a in 0.1f64..0.8, seed in 0u64..1000) {
        let b = (1.0 - a) / 2.0;
        let ratios = [a, b, 1.0 - a - b];
        let s1 = split_indices(n, ratios, SplitStrategy::Random, seed).unwrap();
        let s2 = split_indices(n, ratios, SplitStrategy::Random, seed).unwrap();
        prop_assert_eq!(&s1, &s2);
        let all: HashSet<usize> = s1.iter().flatten().copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(s1.iter().map(Vec::len).sum::<usize>(), n);
    }

    #[test]
    fn time_ordered_split_is_contiguous(n in 3usize..300) {
        let [tr, va, te] = split_indices(n, [0.8, 0.1, 0.1], SplitStrategy::TimeOrdered, 0).unwrap();
        let joined: Vec<usize> = tr.into_iter().chain(va).chain(te).collect();
        prop_assert_eq!(joined, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn min_frequency_ten_folds_the_rarer_token() {
    let mut rows = vec![vec!["a".to_string()]; 9];
    rows.extend(vec![vec!["b".to_string()]; 10]);
    let table = raw(rows);
    let v = &build_vocabs(&table.field_names, &table.rows, 10).unwrap()[0];
    assert_eq!(v.encode("a"), OOV_ID);
    assert_ne!(v.encode("b"), OOV_ID);
    assert_eq!(v.size(), 2);
}

#[test]
fn batches_cover_rows_and_shuffles_differ_per_epoch() {
    let (ds, _) = synth_generate(&SynthParams {
        n: 25,
        num_fields: 2,
        ..SynthParams::default()
    })
    .unwrap();
    let sizes: Vec<usize> = batches(&ds, 10, BatchOrder::Sequential)
        .unwrap()
        .map(|b| b.len())
        .collect();
    assert_eq!(sizes, [10, 10, 5]);

    let seq: Vec<u32> = batches(&ds, 10, BatchOrder::Sequential)
        .unwrap()
        .flat_map(|b| b.ids)
        .collect();
    let flat: Vec<u32> = (0..ds.len()).flat_map(|i| ds.row(i).to_vec()).collect();
    assert_eq!(seq, flat);

    let rows_of = |epoch| {
        let mut rows: Vec<Vec<u32>> = batches(&ds, 10, BatchOrder::Shuffled { seed: 3, epoch })
            .unwrap()
            .flat_map(|b| b.ids.chunks(2).map(<[u32]>::to_vec).collect::<Vec<_>>())
            .collect();
        let order = rows.clone();
        rows.sort();
        (order, rows)
    };
    let (o1, m1) = rows_of(1);
    let (o2, m2) = rows_of(2);
    assert_ne!(o1, o2);
    assert_eq!(m1, m2);
    assert_eq!(rows_of(1).0, o1);
}

/// AUC of the planted logit itself, the best any scorer can do on this data.
fn oracle_auc(hard_fraction: f64, seed: u64) -> f64 {
    let (ds, truth) = synth_generate(&SynthParams {
        hard_fraction,
        seed,
        ..SynthParams::default()
    })
    .unwrap();
    let scores: Vec<f64> = (0..ds.len()).map(|i| truth.logit(ds.row(i))).collect();
    auc(&scores, ds.labels()).unwrap()
}

#[test]
fn planted_logit_separates_clean_data() {
    for seed in 0..3 {
        let a = oracle_auc(0.0, seed);
        assert!(a >= 0.95, "seed {seed}: oracle AUC {a}");
    }
}

#[test]
fn fully_flipped_data_is_anti_predictive() {
    for seed in 0..3 {
        let clean = oracle_auc(0.0, seed);
        let flipped = oracle_auc(1.0, seed);
        // flipping every logit mirrors the clean oracle, so the clean floor of
        // 0.95 puts this at or below 0.05
        assert!(flipped <= 0.15, "seed {seed}: flipped AUC {flipped}");
        assert!(
            (clean + flipped - 1.0).abs() < 0.02,
            "seed {seed}: {clean} vs {flipped}"
        );
    }
}

#[test]
fn hard_rows_match_the_requested_fraction() {
    let (ds, truth) = synth_generate(&SynthParams {
        n: 1001,
        hard_fraction: 0.2,
        ..SynthParams::default()
    })
    .unwrap();
    assert_eq!(truth.hard_rows.len(), 200);
    assert!(truth.hard_rows.iter().all(|&r| r < ds.len()));
}
