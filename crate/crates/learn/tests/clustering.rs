use proptest::prelude::*;
use rhm_core::dataset::{enumerate_dataset, sample_train_test};
use rhm_core::rng::task_rng;
use rhm_core::{ModelParams, RhmInstance};
use rhm_learn::{kmeans, layerwise_solve, synonym_recovery_score, KMeansConfig, LayerwiseConfig};

/// Canonical form of a partition: each point labeled by the first point of its cluster.
fn canonical(labels: &[usize]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| labels.iter().position(|x| x == l).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_survives_reordering(
        centers in prop::collection::vec(-1000i32..1000, 2..5),
        per in 1usize..5,
        seed in any::<u64>(),
        shuffle_seed in any::<u64>(),
    ) {
        let mut cs: Vec<f64> = centers.iter().map(|&c| c as f64 * 100.0).collect();
        cs.sort_by(f64::total_cmp);
        cs.dedup();
        let k = cs.len();
        prop_assume!(k >= 2);
        let points: Vec<Vec<f64>> = cs
            .iter()
            .flat_map(|&c| (0..per).map(move |i| vec![c + i as f64, c - i as f64]))
            .collect();
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = task_rng(shuffle_seed, 0);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();

        let cfg = KMeansConfig { seed, ..Default::default() };
        let a = kmeans(&points, k, &cfg).unwrap();
        let b = kmeans(&permuted, k, &cfg).unwrap();
        let mut b_back = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            b_back[i] = b.labels[pos];
        }
        prop_assert_eq!(canonical(&a.labels), canonical(&b_back));
        prop_assert!((a.inertia - b.inertia).abs() < 1e-6 * (1.0 + a.inertia));
    }

    #[test]
    fn inertia_never_negative_and_labels_in_range(
        xs in prop::collection::vec(-50.0f64..50.0, 3..30),
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let a = kmeans(&points, k, &KMeansConfig { seed, ..Default::default() }).unwrap();
        prop_assert!(a.inertia >= 0.0);
        prop_assert!(a.labels.iter().all(|&l| l < k));
        prop_assert_eq!(a.labels.len(), points.len());
    }
}

#[test]
fn full_dataset_recovers_every_level() {
    let inst = RhmInstance::build(ModelParams::symmetric(4, 2, 2, 8)).unwrap();
    let all = enumerate_dataset(&inst, 1 << 20).unwrap();
    let out = layerwise_solve(&inst, &all, &LayerwiseConfig::default()).unwrap();
    assert_eq!(out.train_error, 0.0);
    let score = synonym_recovery_score(&out.model.levels[0].cluster_of, &inst, 1).unwrap();
    assert_eq!(score, 1.0);
}

#[test]
fn tiny_training_set_is_near_chance() {
    let inst = RhmInstance::build(ModelParams::symmetric(8, 2, 2, 1)).unwrap();
    let (train, test) = sample_train_test(&inst, 45, 1000, &mut task_rng(1, 0)).unwrap();
    let out = layerwise_solve(&inst, &train, &LayerwiseConfig::default()).unwrap();
    assert!(out.model.error(&test) > 0.5 * 7.0 / 8.0);
}

#[test]
fn cluster_csv_has_one_row_per_tuple() {
    let inst = RhmInstance::build(ModelParams::symmetric(3, 2, 2, 0)).unwrap();
    let all = enumerate_dataset(&inst, 1000).unwrap();
    let out = layerwise_solve(&inst, &all, &LayerwiseConfig::default()).unwrap();
    let level = &out.model.levels[0];
    let truth: Vec<Option<usize>> = level.observed.iter().map(|&c| inst.rule(1).symbol_of(c)).collect();
    let mut buf = Vec::new();
    level.assignment.write_csv(&mut buf, &level.observed, Some(&truth)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + level.observed.len());
    assert!(text.starts_with("tuple,cluster,true_symbol"));
}
