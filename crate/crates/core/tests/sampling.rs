//! Distributional checks of rule sampling and training-set sampling.

use std::collections::HashMap;

use rhm_core::dataset::{enumerate_dataset, path_index, decode_path, sample_training_set};
use rhm_core::rng::substream;
use rhm_core::stats::{empirical_counts, exact_tuple_counts};
use rhm_core::{CompositionRule, ModelParams, RhmInstance};

/// Upper 0.999 quantile of chi-square with `df` degrees of freedom
/// (Wilson-Hilferty approximation).
fn chi2_crit(df: f64) -> f64 {
    let z = 3.09;
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + z * a.sqrt()).powi(3)
}

#[test]
fn sampled_rules_are_uniform_over_assignments() {
    // v = 2, s = 2, m = 1, two symbols: 4 * 3 = 12 ordered assignments.
    let p = ModelParams::new(2, 1, 2, 1, 2, 0);
    let mut rng = substream(123, 0);
    let mut freq: HashMap<Vec<Vec<usize>>, u32> = HashMap::new();
    let n = 10_000;
    for _ in 0..n {
        let r = CompositionRule::sample(&p, 1, &mut rng).unwrap();
        *freq.entry(r.forward().to_vec()).or_default() += 1;
    }
    assert_eq!(freq.len(), 12);
    let expected = n as f64 / 12.0;
    let chi2: f64 = freq.values().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < chi2_crit(11.0), "chi2 = {chi2}");
}

#[test]
fn training_sets_are_uniform_over_data() {
    let inst = RhmInstance::build(ModelParams::new(3, 2, 2, 2, 3, 4)).unwrap();
    let total = inst.params().p_max().as_u64().unwrap() as usize;
    let mut hits = vec![0u32; total];
    let mut rng = substream(77, 0);
    let draws = 4000;
    for _ in 0..draws {
        for d in &sample_training_set(&inst, 5, &mut rng).unwrap() {
            let path = decode_path(&inst, &d.features).unwrap();
            hits[path_index(&inst, &path).unwrap() as usize] += 1;
        }
    }
    let expected = draws as f64 * 5.0 / total as f64;
    let chi2: f64 = hits.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < chi2_crit(total as f64 - 1.0), "chi2 = {chi2}");
}

#[test]
fn empirical_counts_are_unbiased() {
    let inst = RhmInstance::build(ModelParams::new(3, 3, 2, 2, 3, 2)).unwrap();
    let exact = exact_tuple_counts(&inst).unwrap();
    let p_max = exact.total as f64;
    let size = 60u64;
    let reps = 400;
    let mut sum = vec![0.0; exact.counts.len()];
    let mut sum_sq = vec![0.0; exact.counts.len()];
    let mut rng = substream(31, 0);
    for _ in 0..reps {
        let t = empirical_counts(&sample_training_set(&inst, size, &mut rng).unwrap(), &inst);
        for (i, &c) in t.counts.iter().enumerate() {
            sum[i] += c as f64;
            sum_sq[i] += (c * c) as f64;
        }
    }
    for (i, &n) in exact.counts.iter().enumerate() {
        let mean = sum[i] / reps as f64;
        let var = (sum_sq[i] / reps as f64 - mean * mean) * reps as f64 / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        let target = size as f64 * n as f64 / p_max;
        if n == 0 {
            assert_eq!(mean, 0.0);
        } else {
            assert!((mean - target).abs() <= 4.0 * se + 1e-12, "entry {i}: {mean} vs {target} (se {se})");
        }
    }
}

#[test]
fn full_enumeration_is_in_index_order() {
    let inst = RhmInstance::build(ModelParams::new(2, 2, 2, 2, 2, 9)).unwrap();
    for (i, d) in enumerate_dataset(&inst, 100).unwrap().iter().enumerate() {
        let path = decode_path(&inst, &d.features).unwrap();
        assert_eq!(path_index(&inst, &path), Some(i as u64));
    }
}
