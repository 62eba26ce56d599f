//! Sampling noise of empirical conditional frequencies as a function of the
//! training-set size.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_datum, path_from_index, sample_training_set, Dataset};
use crate::error::{Result, RhmError};
use crate::instance::RhmInstance;
use crate::rng::{mix_seed, task_rng};
use crate::stats::counts::{conditional_frequencies, empirical_feature_counts, exact_feature_counts};
use crate::stats::moments::level_moments;

/// How training sets are drawn from the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Distinct data, as in every training pipeline.
    #[default]
    WithoutReplacement,
    /// Independent uniform draws. Its count fluctuations are binomial and do
    /// not vanish at P = p_max.
    WithReplacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub p: u64,
    /// Variance of `f̂(α|μ)` over resamplings, averaged over (μ, α).
    pub variance: f64,
    /// Jackknife standard error over resamplings.
    pub se: f64,
    /// `(1/n_c²)(v n_c / P)`.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProbe {
    pub scheme: SamplingScheme,
    pub resamples: usize,
    pub points: Vec<NoisePoint>,
    /// Least-squares slope of ln(variance) against ln(P) over points with
    /// positive variance; `None` with fewer than two such points.
    pub slope: Option<f64>,
}

/// For each `P` in the grid, draws `resamples` training sets and measures the
/// variance of the single-feature frequency `f̂(α | μ)` at the first input
/// position, for every `(μ, α)` whose feature occurs in the dataset.
/// Resamplings in which `μ` is absent leave `f̂(·|μ)` undefined and are skipped
/// for that entry.
pub fn noise_scaling_probe(
    instance: &RhmInstance,
    grid: &[u64],
    resamples: usize,
    seed: u64,
    scheme: SamplingScheme,
) -> Result<NoiseProbe> {
    if resamples < 2 {
        return Err(RhmError::NotEnoughSamples(format!(
            "need at least 2 resamplings, got {resamples}"
        )));
    }
    let params = instance.params();
    let p_max = params.p_max();
    let exact = conditional_frequencies(&exact_feature_counts(instance)?);
    let (v, nc) = (params.v, params.n_classes);
    let defined: Vec<usize> = (0..v).filter(|&mu| exact.get(0, mu, 0).is_some()).collect();
    let lm = level_moments(params);

    let mut points = Vec::with_capacity(grid.len());
    for &p in grid {
        if p == 0 {
            return Err(RhmError::OutOfRange("training-set size 0".into()));
        }
        if scheme == SamplingScheme::WithoutReplacement && p_max.as_u64().is_some_and(|t| p > t) {
            return Err(RhmError::TooManySamples {
                requested: p,
                available: p_max.to_string(),
            });
        }
        // samples[e][r]: f̂ for entry e in resample r, if defined.
        let mut samples: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(resamples); defined.len() * nc];
        for r in 0..resamples {
            let mut rng = task_rng(mix_seed(&[seed, p]), r as u64);
            let train = match scheme {
                SamplingScheme::WithoutReplacement => sample_training_set(instance, p, &mut rng)?,
                SamplingScheme::WithReplacement => {
                    let total = p_max.as_u64().ok_or_else(|| {
                        RhmError::OutOfRange("dataset too large to index".into())
                    })?;
                    (0..p)
                        .map(|_| {
                            generate_datum(instance, &path_from_index(instance, rng.random_range(0..total)))
                        })
                        .collect::<Result<Dataset>>()?
                }
            };
            let f = conditional_frequencies(&empirical_feature_counts(&train, instance));
            for (k, &mu) in defined.iter().enumerate() {
                for a in 0..nc {
                    samples[k * nc + a].push(f.get(0, mu, a));
                }
            }
        }
        let (variance, se) = jackknife_mean_variance(&samples, resamples);
        points.push(NoisePoint {
            p,
            variance,
            se,
            predicted: lm.noise_var(p as f64),
        });
    }
    let slope = log_log_slope(&points);
    Ok(NoiseProbe {
        scheme,
        resamples,
        points,
        slope,
    })
}

/// Mean over entries of the per-entry sample variance, with a
/// leave-one-resample-out jackknife standard error.
fn jackknife_mean_variance(samples: &[Vec<Option<f64>>], resamples: usize) -> (f64, f64) {
    // Sums are taken about the first defined value of each entry so that
    // constant entries give exactly zero.
    struct Entry {
        shift: f64,
        n: f64,
        s: f64,
        q: f64,
    }
    let entries: Vec<Entry> = samples
        .iter()
        .map(|xs| {
            let shift = xs.iter().flatten().next().copied().unwrap_or(0.0);
            let (mut n, mut s, mut q) = (0.0, 0.0, 0.0);
            for x in xs.iter().flatten() {
                let d = x - shift;
                n += 1.0;
                s += d;
                q += d * d;
            }
            Entry { shift, n, s, q }
        })
        .collect();
    let var = |n: f64, s: f64, q: f64| if n < 2.0 { None } else { Some(((q - s * s / n) / (n - 1.0)).max(0.0)) };
    let stat = |skip: Option<usize>| {
        let (mut total, mut count) = (0.0, 0.0);
        for (e, xs) in entries.iter().zip(samples) {
            let (mut n, mut s, mut q) = (e.n, e.s, e.q);
            if let Some(Some(x)) = skip.map(|r| xs[r]) {
                let x = x - e.shift;
                n -= 1.0;
                s -= x;
                q -= x * x;
            }
            if let Some(v) = var(n, s, q) {
                total += v;
                count += 1.0;
            }
        }
        if count == 0.0 { 0.0 } else { total / count }
    };
    let full = stat(None);
    let loo: Vec<f64> = (0..resamples).map(|r| stat(Some(r))).collect();
    let r = resamples as f64;
    let mean_loo = loo.iter().sum::<f64>() / r;
    let se = ((r - 1.0) / r * loo.iter().map(|x| (x - mean_loo).powi(2)).sum::<f64>()).sqrt();
    (full, se)
}

fn log_log_slope(points: &[NoisePoint]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.variance > 0.0)
        .map(|p| ((p.p as f64).ln(), p.variance.ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    #[test]
    fn full_dataset_has_no_noise() {
        let inst = RhmInstance::build(ModelParams::new(3, 3, 2, 2, 3, 0)).unwrap();
        let p_max = inst.params().p_max().as_u64().unwrap();
        let probe =
            noise_scaling_probe(&inst, &[p_max], 5, 1, SamplingScheme::WithoutReplacement).unwrap();
        assert!(probe.points[0].variance < 1e-24);
        assert!(probe.slope.is_none());
    }

    #[test]
    fn grid_beyond_p_max_needs_replacement() {
        let inst = RhmInstance::build(ModelParams::new(2, 2, 2, 2, 2, 0)).unwrap();
        assert!(noise_scaling_probe(&inst, &[32], 3, 0, SamplingScheme::WithoutReplacement).is_err());
        assert!(noise_scaling_probe(&inst, &[32], 3, 0, SamplingScheme::WithReplacement).is_ok());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<NoisePoint> = [1u64, 2, 4, 8]
            .iter()
            .map(|&p| NoisePoint { p, variance: 3.0 / p as f64, se: 0.0, predicted: 0.0 })
            .collect();
        assert!((log_log_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
    }
}
