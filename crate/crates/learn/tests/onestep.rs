use rhm_core::dataset::{enumerate_dataset, sample_training_set};
use rhm_core::rng::substream;
use rhm_core::stats::empirical_counts;
use rhm_core::{Dataset, ModelParams, RhmInstance};
use rhm_learn::{g_vectors, onestep_update, tuple_distances};

/// ĝ straight from the data, without the occurrence table.
fn g_by_hand(train: &Dataset, v: usize, s: usize, nc: usize, pooled: bool) -> Vec<Vec<f64>> {
    let n_tuples = v.pow(s as u32);
    let mut g = vec![vec![0.0; nc]; n_tuples];
    let patches = if pooled { train.data[0].features.len() / s } else { 1 };
    let p = train.len() as f64;
    for d in train {
        for j in 0..patches {
            let code = d.features[j * s..(j + 1) * s].iter().fold(0, |a, &x| a * v + x as usize);
            for (a, x) in g[code].iter_mut().enumerate() {
                let hit = if a == d.label { 1.0 } else { 0.0 };
                *x += (hit - 1.0 / nc as f64) / (p * patches as f64);
            }
        }
    }
    g
}

#[test]
fn matches_direct_computation() {
    let inst = RhmInstance::build(ModelParams::new(5, 3, 2, 3, 4, 2)).unwrap();
    let train = sample_training_set(&inst, 300, &mut substream(1, 0)).unwrap();
    let counts = empirical_counts(&train, &inst);
    for pooled in [false, true] {
        let g = g_vectors(&counts, pooled).unwrap();
        let oracle = g_by_hand(&train, 5, 2, 4, pooled);
        for (mu, row) in oracle.iter().enumerate() {
            for (a, x) in row.iter().enumerate() {
                assert!((g.get(mu)[a] - x).abs() < 1e-14, "pooled={pooled} μ={mu} α={a}");
            }
        }
    }
}

#[test]
fn update_rows_are_readout_products() {
    let inst = RhmInstance::build(ModelParams::new(4, 2, 2, 2, 3, 5)).unwrap();
    let train = sample_training_set(&inst, 20, &mut substream(2, 0)).unwrap();
    let g = g_vectors(&empirical_counts(&train, &inst), false).unwrap();
    let upd = onestep_update(&g, 7, &mut substream(2, 1)).unwrap();
    for h in 0..7 {
        for mu in 0..16 {
            let a = &upd.readout[h * 3..(h + 1) * 3];
            let want: f64 = (0..3).map(|c| a[c] * g.get(mu)[c]).sum();
            assert_eq!(upd.delta_row(h)[mu], want);
        }
    }
}

#[test]
fn wide_kernel_approaches_g_inner_product() {
    let inst = RhmInstance::build(ModelParams::symmetric(4, 2, 2, 3)).unwrap();
    let all = enumerate_dataset(&inst, 10_000).unwrap();
    let g = g_vectors(&empirical_counts(&all, &inst), false).unwrap();
    let upd = onestep_update(&g, 10_000, &mut substream(4, 0)).unwrap();
    let mut checked = 0;
    for mu in 0..16 {
        let want: f64 = g.get(mu).iter().map(|x| x * x).sum();
        if want == 0.0 {
            continue;
        }
        let got = upd.kernel(mu, mu);
        assert!((got / want - 1.0).abs() < 0.05, "μ={mu}: {got} vs {want}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn synonyms_separate_from_non_synonyms_at_large_p() {
    let inst = RhmInstance::build(ModelParams::symmetric(8, 2, 2, 11)).unwrap();
    // 4 p_c out of p_max = 8^3.
    let train = sample_training_set(&inst, 2048, &mut substream(11, 0)).unwrap();
    let g = g_vectors(&empirical_counts(&train, &inst), false).unwrap();
    let d = tuple_distances(&g);
    let rule = inst.rule(1);
    let (mut same, mut ns, mut diff, mut nd) = (0.0, 0.0, 0.0, 0.0);
    for a in 0..64 {
        for b in a + 1..64 {
            if rule.symbol_of(a) == rule.symbol_of(b) {
                same += d[a * 64 + b];
                ns += 1.0;
            } else {
                diff += d[a * 64 + b];
                nd += 1.0;
            }
        }
    }
    assert!(same / ns < 0.5 * diff / nd, "{} vs {}", same / ns, diff / nd);
}

#[test]
fn distance_matrix_is_a_squared_metric() {
    let inst = RhmInstance::build(ModelParams::new(3, 2, 2, 2, 3, 0)).unwrap();
    let train = sample_training_set(&inst, 20, &mut substream(0, 3)).unwrap();
    let g = g_vectors(&empirical_counts(&train, &inst), true).unwrap();
    let d = tuple_distances(&g);
    for a in 0..9 {
        assert_eq!(d[a * 9 + a], 0.0);
        for b in 0..9 {
            assert!(d[a * 9 + b] >= 0.0);
            assert_eq!(d[a * 9 + b], d[b * 9 + a]);
        }
    }
}
