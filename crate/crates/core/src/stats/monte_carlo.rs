//! Monte Carlo estimates of the rule and signal moments over random instances.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RhmError};
use crate::hfm::build_hfm_instance;
use crate::instance::RhmInstance;
use crate::params::ModelParams;
use crate::rng::mix_seed;
use crate::stats::counts::{conditional_frequencies, exact_feature_counts};
use crate::stats::moments::RuleMoments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    #[default]
    Rhm,
    Hfm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMoments {
    pub n_instances: usize,
    pub rule: RuleMoments,
    pub rule_se: RuleMoments,
    /// Mean over instances of the average of `(f(α|μ) - 1/n_c)²` at input position 0.
    pub signal_var: f64,
    pub signal_var_se: f64,
}

/// Running mean and standard error.
#[derive(Default)]
struct Acc {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Acc {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }
    fn mean(&self) -> f64 {
        self.sum / self.n
    }
    fn se(&self) -> f64 {
        let mean = self.mean();
        let var = (self.sum_sq - self.n * mean * mean).max(0.0) / (self.n - 1.0);
        (var / self.n).sqrt()
    }
}

/// Samples `n_instances` instances (seeded from `seed`) and measures, on each,
/// single-rule occurrence products on the input rule and the spread of the
/// exact single-feature conditional frequencies at the first input position.
///
/// The rule statistics use the entries `(μ, α) ∈ {0, 1}²` at every tuple
/// position, centred on the exact mean `m/v`, so that each estimator is
/// unbiased and varies from instance to instance.
pub fn monte_carlo_moments(
    params: &ModelParams,
    n_instances: usize,
    seed: u64,
    ensemble: Ensemble,
) -> Result<MonteCarloMoments> {
    params.validate()?;
    if n_instances < 2 {
        return Err(RhmError::NotEnoughSamples(format!(
            "need at least 2 instances to estimate a variance, got {n_instances}"
        )));
    }
    let mean = params.m as f64 / params.v as f64;
    let inv_nc = 1.0 / params.n_classes as f64;
    let [mut a_mean, mut a_var, mut a_hi, mut a_lo, mut a_none, mut a_sig] =
        std::array::from_fn(|_| Acc::default());
    for k in 0..n_instances {
        let p = params.with_seed(mix_seed(&[seed, k as u64]));
        let inst = match ensemble {
            Ensemble::Rhm => RhmInstance::build(p)?,
            Ensemble::Hfm => build_hfm_instance(p)?,
        };
        let rule = inst.rule(1);
        let (mut x0, mut xx, mut xy, mut xz, mut xw) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for pos in 0..params.s {
            let c = rule.position_counts(pos);
            let d = |hi: usize, lo: usize| c[hi][lo] as f64 - mean;
            x0 += c[0][0] as f64;
            xx += d(0, 0) * d(0, 0);
            xy += d(0, 0) * d(0, 1);
            xz += d(0, 0) * d(1, 0);
            xw += d(0, 0) * d(1, 1);
        }
        let s = params.s as f64;
        a_mean.push(x0 / s);
        a_var.push(xx / s);
        a_hi.push(xy / s);
        a_lo.push(xz / s);
        a_none.push(xw / s);

        let f = conditional_frequencies(&exact_feature_counts(&inst)?);
        let (mut sum, mut n) = (0.0, 0usize);
        for (pos, _, _, x) in f.defined() {
            if pos == 0 {
                sum += (x - inv_nc) * (x - inv_nc);
                n += 1;
            }
        }
        a_sig.push(if n == 0 { 0.0 } else { sum / n as f64 });
    }
    Ok(MonteCarloMoments {
        n_instances,
        rule: RuleMoments {
            mean: a_mean.mean(),
            var: a_var.mean(),
            cov_same_hi: a_hi.mean(),
            cov_same_lo: a_lo.mean(),
            cov_none: a_none.mean(),
        },
        rule_se: RuleMoments {
            mean: a_mean.se(),
            var: a_var.se(),
            cov_same_hi: a_hi.se(),
            cov_same_lo: a_lo.se(),
            cov_none: a_none.se(),
        },
        signal_var: a_sig.mean(),
        signal_var_se: a_sig.se(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_instance_is_rejected() {
        let p = ModelParams::new(4, 2, 2, 2, 4, 0);
        assert!(matches!(
            monte_carlo_moments(&p, 1, 0, Ensemble::Rhm),
            Err(RhmError::NotEnoughSamples(_))
        ));
    }

    #[test]
    fn hfm_ensemble_has_no_signal() {
        let p = ModelParams::new(3, 3, 2, 2, 3, 0);
        let mc = monte_carlo_moments(&p, 10, 4, Ensemble::Hfm).unwrap();
        assert!(mc.signal_var.abs() < 1e-20);
    }
}
