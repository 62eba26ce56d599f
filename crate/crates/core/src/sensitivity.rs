//! Synonymic sensitivity of representations.
//!
//! For a representation `f` and a level `l`, the sensitivity is the mean
//! squared change of `f` when every level-`l` choice of a datum is redrawn,
//! divided by the mean squared distance between representations of two
//! distinct probe data. It is 0 for a representation invariant to synonym
//! exchanges at that level and close to 1 for one that is not.

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{synonym_perturb, Dataset, Datum};
use crate::error::{Result, RhmError};
use crate::instance::RhmInstance;
use crate::rng::Rng;

/// Pairs used in the denominator before switching to a uniform subsample.
pub const DEFAULT_MAX_PAIRS: usize = 1_000_000;
pub const DEFAULT_REPLACEMENTS: usize = 4;
pub const DEFAULT_PROBE_SIZE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    /// Synonym perturbations drawn per probe datum.
    pub replacements: usize,
    pub max_pairs: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            replacements: DEFAULT_REPLACEMENTS,
            max_pairs: DEFAULT_MAX_PAIRS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub value: f64,
    /// Leave-one-datum-out jackknife standard error.
    pub se: f64,
}

/// Sensitivities of several layers to synonym exchanges at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// `values[k][l - 1]`: layer `k` (0 is the raw input), level `l`.
    pub values: Vec<Vec<Sensitivity>>,
    pub probe_size: usize,
    pub replacements: usize,
}

impl SensitivityReport {
    /// `level` is 1-based, as in the CSV output.
    pub fn get(&self, layer: usize, level: usize) -> Sensitivity {
        assert!(level >= 1, "sensitivity levels start at 1");
        self.values[layer][level - 1]
    }

    pub fn n_layers(&self) -> usize {
        self.values.len()
    }

    pub fn n_levels(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Writes `k,l,S,SE,probe_size,R` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "l", "S", "SE", "probe_size", "R"])?;
        for (k, row) in self.values.iter().enumerate() {
            for (l, s) in row.iter().enumerate() {
                w.write_record([
                    k.to_string(),
                    (l + 1).to_string(),
                    s.value.to_string(),
                    s.se.to_string(),
                    self.probe_size.to_string(),
                    self.replacements.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-layer representations of a batch: `out[k][i]` is the flattened
/// activation of layer `k` on datum `i`.
pub type LayerActivations = Vec<Vec<Vec<f64>>>;

/// Sensitivity of a single representation to synonym exchanges at `level`.
pub fn synonymic_sensitivity<F>(
    mut repr: F,
    instance: &RhmInstance,
    level: usize,
    probe: &Dataset,
    config: &SensitivityConfig,
    rng: &mut Rng,
) -> Result<Sensitivity>
where
    F: FnMut(&Datum) -> Vec<f64>,
{
    let layers = |batch: &[Datum]| vec![batch.iter().map(&mut repr).collect()];
    let report = sensitivity_matrix(layers, instance, &[level], probe, config, rng)?;
    Ok(report.values[0][0])
}

/// Sensitivities of every layer returned by `layers` at each of `levels`.
/// The returned report indexes levels by position in `levels`, so pass
/// `1..=L` to obtain the conventional layout.
pub fn sensitivity_matrix<F>(
    mut layers: F,
    instance: &RhmInstance,
    levels: &[usize],
    probe: &Dataset,
    config: &SensitivityConfig,
    rng: &mut Rng,
) -> Result<SensitivityReport>
where
    F: FnMut(&[Datum]) -> LayerActivations,
{
    let n = probe.len();
    if n < 2 {
        return Err(RhmError::NotEnoughSamples(format!(
            "sensitivity needs at least 2 probe data, got {n}"
        )));
    }
    if config.replacements == 0 {
        return Err(RhmError::OutOfRange("replacements per datum must be at least 1".into()));
    }
    if instance.params().m == 1 {
        return Err(RhmError::Degenerate(
            "m = 1: synonym exchange is the identity".into(),
        ));
    }
    let r = config.replacements;
    let base = layers(&probe.data);
    let pairs = choose_pairs(n, config.max_pairs, rng);
    let denominators: Vec<PairSums> = base
        .iter()
        .enumerate()
        .map(|(k, acts)| {
            let d = PairSums::new(acts, &pairs, n);
            if d.total <= 0.0 {
                Err(RhmError::Degenerate(format!(
                    "layer {k} is constant on the probe set"
                )))
            } else {
                Ok(d)
            }
        })
        .collect::<Result<_>>()?;

    let mut values = vec![Vec::with_capacity(levels.len()); base.len()];
    for &level in levels {
        let mut perturbed = Vec::with_capacity(n * r);
        for d in &probe.data {
            for _ in 0..r {
                perturbed.push(synonym_perturb(instance, d, level, rng)?);
            }
        }
        let moved = layers(&perturbed);
        for (k, (acts, acts_p)) in base.iter().zip(&moved).enumerate() {
            let per_datum: Vec<f64> = (0..n)
                .map(|i| {
                    (0..r).map(|t| sq_dist(&acts[i], &acts_p[i * r + t])).sum::<f64>() / r as f64
                })
                .collect();
            values[k].push(ratio_with_jackknife(&per_datum, &denominators[k]));
        }
    }
    Ok(SensitivityReport {
        values,
        probe_size: n,
        replacements: r,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All unordered pairs of distinct indices, or `max_pairs` uniform draws of them.
fn choose_pairs(n: usize, max_pairs: usize, rng: &mut Rng) -> Vec<(u32, u32)> {
    let all = n * (n - 1) / 2;
    if all <= max_pairs {
        let mut out = Vec::with_capacity(all);
        for i in 0..n {
            for j in i + 1..n {
                out.push((i as u32, j as u32));
            }
        }
        out
    } else {
        (0..max_pairs)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i.min(j) as u32, i.max(j) as u32)
            })
            .collect()
    }
}

/// Squared pair distances summed overall and per datum.
struct PairSums {
    total: f64,
    count: f64,
    by_datum: Vec<f64>,
    count_by_datum: Vec<f64>,
}

impl PairSums {
    fn new(acts: &[Vec<f64>], pairs: &[(u32, u32)], n: usize) -> Self {
        let mut by_datum = vec![0.0; n];
        let mut count_by_datum = vec![0.0; n];
        let mut total = 0.0;
        for &(i, j) in pairs {
            let (i, j) = (i as usize, j as usize);
            let d = sq_dist(&acts[i], &acts[j]);
            total += d;
            by_datum[i] += d;
            by_datum[j] += d;
            count_by_datum[i] += 1.0;
            count_by_datum[j] += 1.0;
        }
        Self {
            total,
            count: pairs.len() as f64,
            by_datum,
            count_by_datum,
        }
    }
}

fn ratio_with_jackknife(numerators: &[f64], den: &PairSums) -> Sensitivity {
    let n = numerators.len() as f64;
    let num_total: f64 = numerators.iter().sum();
    let value = (num_total / n) / (den.total / den.count);
    let loo: Vec<f64> = numerators
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let num = (num_total - a) / (n - 1.0);
            let cnt = den.count - den.count_by_datum[i];
            let d = (den.total - den.by_datum[i]) / cnt;
            if cnt > 0.0 && d > 0.0 { num / d } else { value }
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / n;
    let se = ((n - 1.0) / n * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt();
    Sensitivity { value, se }
}
