//! Closed-form first gradient step of a wide one-hidden-layer network on
//! one-hot s-tuples.
//!
//! With unit inner weights, ReLU units and a readout drawn once and frozen,
//! the update of hidden unit `h` on tuple `μ` after one step of gradient
//! descent on the cross-entropy is `Σ_α a_hα ĝ_α(μ)` with
//! `ĝ_α(μ) = (N̂(μ; α) - N̂(μ)/n_c) / P`.

use rand_distr::{Distribution, StandardNormal};
use rhm_core::rng::Rng;
use rhm_core::stats::{empirical_counts, OccurrenceTable, Resolution};
use rhm_core::{synonymic_sensitivity, Dataset, Datum, Result, RhmError, RhmInstance, Sensitivity, SensitivityConfig};

/// Centered class-frequency vector of every tuple, row-major `[μ][α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    pub n_tuples: usize,
    pub n_classes: usize,
    pub g: Vec<f64>,
}

impl GTable {
    pub fn zeros(n_tuples: usize, n_classes: usize) -> Self {
        Self { n_tuples, n_classes, g: vec![0.0; n_tuples * n_classes] }
    }

    #[inline]
    pub fn get(&self, tuple: usize) -> &[f64] {
        &self.g[tuple * self.n_classes..(tuple + 1) * self.n_classes]
    }

    /// The H → ∞ hidden representation of a datum: ĝ of its first patch.
    pub fn represent_first_patch(&self, d: &Datum, v: usize, s: usize) -> Vec<f64> {
        let code = d.features[..s].iter().fold(0usize, |a, &x| a * v + x as usize);
        self.get(code).to_vec()
    }
}

/// ĝ from tuple occurrences: first patch only, or averaged over all patches.
pub fn g_vectors(counts: &OccurrenceTable, pooled: bool) -> Result<GTable> {
    if counts.resolution != Resolution::Tuple {
        return Err(RhmError::OutOfRange("ĝ needs tuple-resolution counts".into()));
    }
    let nc = counts.n_classes;
    let mut out = GTable::zeros(counts.n_keys, nc);
    if counts.total == 0 {
        return Ok(out);
    }
    let patches = if pooled { counts.n_positions } else { 1 };
    let scale = 1.0 / (counts.total as f64 * patches as f64);
    for j in 0..patches {
        for mu in 0..counts.n_keys {
            let row = counts.row(j, mu);
            let marginal: u128 = row.iter().sum();
            if marginal == 0 {
                continue;
            }
            let mean = marginal as f64 / nc as f64;
            for (a, &c) in row.iter().enumerate() {
                out.g[mu * nc + a] += (c as f64 - mean) * scale;
            }
        }
    }
    Ok(out)
}

/// One-step change of the hidden representation, `delta[h][μ]`, and the
/// frozen readout `readout[h][α]` that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenUpdate {
    pub hidden: usize,
    pub n_tuples: usize,
    pub n_classes: usize,
    pub delta: Vec<f64>,
    pub readout: Vec<f64>,
}

impl HiddenUpdate {
    pub fn delta_row(&self, h: usize) -> &[f64] {
        &self.delta[h * self.n_tuples..(h + 1) * self.n_tuples]
    }

    /// `(1/H) Σ_h delta[h][μ] delta[h][ν]`.
    pub fn kernel(&self, mu: usize, nu: usize) -> f64 {
        (0..self.hidden)
            .map(|h| self.delta[h * self.n_tuples + mu] * self.delta[h * self.n_tuples + nu])
            .sum::<f64>()
            / self.hidden as f64
    }
}

/// Draws a standard-normal readout and applies the closed-form update.
pub fn onestep_update(g: &GTable, hidden: usize, rng: &mut Rng) -> Result<HiddenUpdate> {
    if hidden == 0 {
        return Err(RhmError::OutOfRange("hidden width must be at least 1".into()));
    }
    let nc = g.n_classes;
    let readout: Vec<f64> = (0..hidden * nc).map(|_| StandardNormal.sample(rng)).collect();
    let mut delta = vec![0.0; hidden * g.n_tuples];
    for h in 0..hidden {
        let a = &readout[h * nc..(h + 1) * nc];
        for mu in 0..g.n_tuples {
            delta[h * g.n_tuples + mu] = a.iter().zip(g.get(mu)).map(|(x, y)| x * y).sum();
        }
    }
    Ok(HiddenUpdate { hidden, n_tuples: g.n_tuples, n_classes: nc, delta, readout })
}

/// Squared distances `‖ĝ(μ) - ĝ(ν)‖²`, row-major over tuples.
pub fn tuple_distances(g: &GTable) -> Vec<f64> {
    let n = g.n_tuples;
    let mut out = vec![0.0; n * n];
    for mu in 0..n {
        for nu in mu + 1..n {
            let d: f64 = g.get(mu).iter().zip(g.get(nu)).map(|(a, b)| (a - b) * (a - b)).sum();
            out[mu * n + nu] = d;
            out[nu * n + mu] = d;
        }
    }
    out
}

/// Level-1 synonymic sensitivity of the infinitely wide one-step
/// representation trained on `train`: each probe datum is mapped to ĝ of its
/// first patch.
pub fn onestep_sensitivity(
    instance: &RhmInstance,
    train: &Dataset,
    probe: &Dataset,
    config: &SensitivityConfig,
    rng: &mut Rng,
) -> Result<Sensitivity> {
    let g = g_vectors(&empirical_counts(train, instance), false)?;
    let (v, s) = (instance.params().v, instance.params().s);
    synonymic_sensitivity(|d| g.represent_first_patch(d, v, s), instance, 1, probe, config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rhm_core::dataset::{enumerate_dataset, sample_training_set};
    use rhm_core::rng::substream;
    use rhm_core::stats::empirical_counts;
    use rhm_core::{ModelParams, RhmInstance};

    #[test]
    fn centered_and_zero_on_unseen() {
        let inst = RhmInstance::build(ModelParams::new(4, 2, 2, 2, 3, 0)).unwrap();
        let train = sample_training_set(&inst, 10, &mut substream(0, 0)).unwrap();
        let counts = empirical_counts(&train, &inst);
        for pooled in [false, true] {
            let g = g_vectors(&counts, pooled).unwrap();
            for mu in 0..16 {
                assert!(g.get(mu).iter().sum::<f64>().abs() < 1e-15);
                let seen = (0..counts.n_positions).any(|j| counts.marginal(j, mu) > 0);
                if !seen {
                    assert!(g.get(mu).iter().all(|&x| x == 0.0));
                }
            }
        }
    }

    #[test]
    fn full_data_gives_synonym_invariant_g() {
        let inst = RhmInstance::build(ModelParams::new(3, 3, 2, 2, 3, 1)).unwrap();
        let all = enumerate_dataset(&inst, 1000).unwrap();
        let g = g_vectors(&empirical_counts(&all, &inst), false).unwrap();
        let dist = tuple_distances(&g);
        let upd = onestep_update(&g, 16, &mut substream(3, 0)).unwrap();
        for group in inst.rule(1).forward() {
            for &a in group {
                for &b in group {
                    assert_eq!(dist[a * 9 + b], 0.0);
                    for h in 0..16 {
                        assert_eq!(upd.delta_row(h)[a], upd.delta_row(h)[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn full_data_is_invariant() {
        let inst = RhmInstance::build(ModelParams::symmetric(4, 2, 2, 2)).unwrap();
        let all = enumerate_dataset(&inst, 1000).unwrap();
        let s = onestep_sensitivity(&inst, &all, &all, &SensitivityConfig::default(), &mut substream(0, 0)).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn zero_table_gives_zero_update() {
        let upd = onestep_update(&GTable::zeros(4, 2), 8, &mut substream(0, 0)).unwrap();
        assert!(upd.delta.iter().all(|&x| x == 0.0));
        assert!(onestep_update(&GTable::zeros(4, 2), 0, &mut substream(0, 0)).is_err());
    }
}
