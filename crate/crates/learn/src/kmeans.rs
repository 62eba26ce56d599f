//! Lloyd's k-means with k-means++ seeding and restarts.

use std::io::Write;

use rand::Rng as _;
use rhm_core::rng::{substream, Rng};
use rhm_core::{Result, RhmError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iters: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster of each point, in `0..k`.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances of points to their centroids.
    pub inertia: f64,
    /// Clusters left without points in the returned solution.
    pub empty_clusters: usize,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Index of the centroid closest to `x`, lowest index on ties.
    pub fn nearest(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }

    /// Writes `point,cluster[,truth]` rows; `truth` is appended when given.
    pub fn write_csv<W: Write>(&self, out: W, keys: &[usize], truth: Option<&[Option<usize>]>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tuple", "cluster", "true_symbol"])?;
        for (i, (&key, &c)) in keys.iter().zip(&self.labels).enumerate() {
            let t = truth
                .and_then(|t| t.get(i).copied().flatten())
                .map_or(String::new(), |x| x.to_string());
            w.write_record([key.to_string(), c.to_string(), t])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(centroid, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iters: usize) -> ClusterAssignment {
    let k = centroids.len();
    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(&centroids, p).0).collect();
    for _ in 0..max_iters {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            // An empty cluster keeps its previous centroid.
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(&centroids, p).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
    let mut used = vec![false; k];
    for &l in &labels {
        used[l] = true;
    }
    ClusterAssignment {
        labels,
        centroids,
        inertia,
        empty_clusters: used.iter().filter(|u| !**u).count(),
    }
}

/// Best-of-`restarts` k-means by inertia (earliest restart on ties). Each
/// restart draws from its own substream of `config.seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, config: &KMeansConfig) -> Result<ClusterAssignment> {
    if k == 0 || k > points.len() {
        return Err(RhmError::NotEnoughSamples(format!(
            "k-means with k = {k} on {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(RhmError::OutOfRange("points of unequal dimension".into()));
    }
    let mut best: Option<ClusterAssignment> = None;
    for r in 0..config.restarts.max(1) {
        let mut rng = substream(config.seed, r as u64);
        let init = plus_plus_init(points, k, &mut rng);
        let fit = lloyd(points, init, config.max_iters);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_obvious_clusters() {
        let a = kmeans(&pts(&[0.0, 0.0, 10.0, 10.0]), 2, &KMeansConfig::default()).unwrap();
        assert_eq!(a.inertia, 0.0);
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[2], a.labels[3]);
        assert_ne!(a.labels[0], a.labels[2]);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let a = kmeans(&pts(&[1.0, 4.0, 9.0, 2.5]), 4, &KMeansConfig::default()).unwrap();
        assert_eq!(a.inertia, 0.0);
        assert!(kmeans(&pts(&[1.0]), 2, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn duplicates_can_leave_empty_clusters() {
        let a = kmeans(&pts(&[3.0, 3.0, 3.0]), 2, &KMeansConfig::default()).unwrap();
        assert_eq!(a.inertia, 0.0);
        assert_eq!(a.empty_clusters, 1);
    }

    #[test]
    fn inertia_is_the_named_sum() {
        let p = pts(&[0.0, 1.0, 2.0, 10.0, 11.0, 30.0]);
        let a = kmeans(&p, 3, &KMeansConfig::default()).unwrap();
        let s: f64 = p.iter().zip(&a.labels).map(|(x, &l)| sq_dist(x, &a.centroids[l])).sum();
        assert!((s - a.inertia).abs() < 1e-12);
    }
}
