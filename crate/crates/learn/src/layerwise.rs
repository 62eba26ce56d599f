//! Layerwise clustering solver: at each level, represent every observed
//! s-tuple by its patch-pooled one-step vector ĝ, group the tuples with
//! k-means, and replace each patch by its cluster index before moving one
//! level up. The top-level clusters are mapped to classes by majority vote.
//!
//! Sample-size guarantees for this procedure are only argued for the
//! maximal case `n_c = v`, `m = v^(s-1)`; other parameters run but carry no
//! threshold claim.

use rhm_core::stats::{CountKind, OccurrenceTable, Resolution};
use rhm_core::{Dataset, Datum, Result, RhmError, RhmInstance};
use serde::{Deserialize, Serialize};

use crate::kmeans::{kmeans, ClusterAssignment, KMeansConfig};
use crate::onestep::g_vectors;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerwiseConfig {
    pub kmeans: KMeansConfig,
    /// Average ĝ over all patches of a level instead of using the first only.
    pub pooled: bool,
}

impl Default for LayerwiseConfig {
    fn default() -> Self {
        Self { kmeans: KMeansConfig::default(), pooled: true }
    }
}

/// Tuple-to-cluster map learned at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMap {
    /// Alphabet of the symbols entering this level.
    pub alphabet: usize,
    pub s: usize,
    /// Cluster of every tuple code in `alphabet^s`.
    pub cluster_of: Vec<usize>,
    /// Tuple codes seen in training, in the order given to k-means.
    pub observed: Vec<usize>,
    pub assignment: ClusterAssignment,
}

impl LevelMap {
    fn reduce(&self, seq: &[usize]) -> Vec<usize> {
        seq.chunks(self.s)
            .map(|c| self.cluster_of[c.iter().fold(0, |a, &x| a * self.alphabet + x)])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub observed_tuples: usize,
    pub k: usize,
    /// k was reduced because fewer tuples than requested clusters were observed.
    pub k_clamped: bool,
    pub empty_clusters: usize,
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerwiseModel {
    pub levels: Vec<LevelMap>,
    pub class_of_cluster: Vec<usize>,
}

impl LayerwiseModel {
    pub fn predict(&self, d: &Datum) -> usize {
        let mut seq: Vec<usize> = d.features.iter().map(|&x| x as usize).collect();
        for level in &self.levels {
            seq = level.reduce(&seq);
        }
        self.class_of_cluster[seq[0]]
    }

    /// Fraction of misclassified data.
    pub fn error(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let wrong = data.iter().filter(|d| self.predict(d) != d.label).count();
        wrong as f64 / data.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerwiseOutcome {
    pub model: LayerwiseModel,
    pub train_error: f64,
    pub reports: Vec<LevelReport>,
}

pub fn layerwise_solve(
    instance: &RhmInstance,
    train: &Dataset,
    config: &LayerwiseConfig,
) -> Result<LayerwiseOutcome> {
    let p = instance.params();
    if train.is_empty() {
        return Err(RhmError::NotEnoughSamples("empty training set".into()));
    }
    let mut seqs: Vec<Vec<usize>> = train
        .iter()
        .map(|d| d.features.iter().map(|&x| x as usize).collect())
        .collect();
    let mut alphabet = p.v;
    let mut levels = Vec::with_capacity(p.depth);
    let mut reports = Vec::with_capacity(p.depth);
    for level in 1..=p.depth {
        let n_codes = alphabet.pow(p.s as u32);
        let n_patches = seqs[0].len() / p.s;
        let mut counts = OccurrenceTable {
            kind: CountKind::Empirical,
            resolution: Resolution::Tuple,
            n_positions: n_patches,
            n_keys: n_codes,
            n_classes: p.n_classes,
            counts: vec![0; n_patches * n_codes * p.n_classes],
            total: seqs.len() as u128,
        };
        let mut seen = vec![false; n_codes];
        for (seq, d) in seqs.iter().zip(train) {
            for (j, chunk) in seq.chunks(p.s).enumerate() {
                let code = chunk.iter().fold(0, |a, &x| a * alphabet + x);
                seen[code] = true;
                counts.counts[(j * n_codes + code) * p.n_classes + d.label] += 1;
            }
        }
        let g = g_vectors(&counts, config.pooled)?;
        let observed: Vec<usize> = (0..n_codes).filter(|&c| seen[c]).collect();
        let points: Vec<Vec<f64>> = observed.iter().map(|&c| g.get(c).to_vec()).collect();
        let wanted = if level == p.depth { p.n_classes } else { p.v };
        let k = wanted.min(points.len());
        let kcfg = KMeansConfig {
            seed: rhm_core::rng::mix_seed(&[config.kmeans.seed, level as u64]),
            ..config.kmeans
        };
        let assignment = kmeans(&points, k, &kcfg)?;
        if assignment.empty_clusters > 0 {
            log::warn!("level {level}: {} empty clusters after restarts", assignment.empty_clusters);
        }
        let origin = vec![0.0; p.n_classes];
        let unseen_cluster = assignment.nearest(&origin);
        let mut cluster_of = vec![unseen_cluster; n_codes];
        for (&code, &c) in observed.iter().zip(&assignment.labels) {
            cluster_of[code] = c;
        }
        reports.push(LevelReport {
            level,
            observed_tuples: observed.len(),
            k,
            k_clamped: k < wanted,
            empty_clusters: assignment.empty_clusters,
            inertia: assignment.inertia,
        });
        let map = LevelMap { alphabet, s: p.s, cluster_of, observed, assignment };
        seqs = seqs.iter().map(|s| map.reduce(s)).collect();
        alphabet = k;
        levels.push(map);
    }
    // Majority vote of training labels inside each top-level cluster.
    let mut votes = vec![vec![0usize; p.n_classes]; alphabet];
    for (seq, d) in seqs.iter().zip(train) {
        votes[seq[0]][d.label] += 1;
    }
    let class_of_cluster = votes
        .iter()
        .map(|row| {
            let mut best = 0;
            for (c, &n) in row.iter().enumerate() {
                if n > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let model = LayerwiseModel { levels, class_of_cluster };
    let train_error = model.error(train);
    Ok(LayerwiseOutcome { model, train_error, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rhm_core::dataset::enumerate_dataset;
    use rhm_core::ModelParams;

    #[test]
    fn full_dataset_is_solved() {
        let inst = RhmInstance::build(ModelParams::symmetric(3, 2, 2, 4)).unwrap();
        let all = enumerate_dataset(&inst, 1000).unwrap();
        let out = layerwise_solve(&inst, &all, &LayerwiseConfig::default()).unwrap();
        assert_eq!(out.train_error, 0.0);
        assert!(out.reports.iter().all(|r| !r.k_clamped));
    }

    #[test]
    fn tiny_training_set_clamps_k() {
        let inst = RhmInstance::build(ModelParams::symmetric(4, 2, 2, 4)).unwrap();
        let all = enumerate_dataset(&inst, 1000).unwrap();
        let one = Dataset::new(all.data[..1].to_vec());
        let out = layerwise_solve(&inst, &one, &LayerwiseConfig::default()).unwrap();
        assert!(out.reports[0].k_clamped);
        assert_eq!(out.train_error, 0.0);
    }
}
