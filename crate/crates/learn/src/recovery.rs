//! Agreement between a clustering of tuples and the true synonym groups.

use rhm_core::{Result, RhmError, RhmInstance};

/// Rand index between `cluster_of` (indexed by tuple code) and the synonym
/// partition of the rule at `level`, over the tuples that rule generates.
pub fn synonym_recovery_score(cluster_of: &[usize], instance: &RhmInstance, level: usize) -> Result<f64> {
    let p = instance.params();
    if level == 0 || level > p.depth {
        return Err(RhmError::OutOfRange(format!("level {level}")));
    }
    if cluster_of.len() < p.n_tuples() {
        return Err(RhmError::OutOfRange(format!(
            "assignment covers {} tuples, expected {}",
            cluster_of.len(),
            p.n_tuples()
        )));
    }
    let rule = instance.rule(level);
    let valid: Vec<(usize, usize)> = (0..p.n_tuples())
        .filter_map(|c| rule.symbol_of(c).map(|sym| (c, sym)))
        .collect();
    let n = valid.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let same_true = valid[i].1 == valid[j].1;
            let same_found = cluster_of[valid[i].0] == cluster_of[valid[j].0];
            agree += u64::from(same_true == same_found);
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

/// Ground-truth cluster map of a level: the owning symbol of each tuple
/// (unused tuples get an extra label).
pub fn true_clusters(instance: &RhmInstance, level: usize) -> Vec<usize> {
    let p = instance.params();
    let rule = instance.rule(level);
    (0..p.n_tuples())
        .map(|c| rule.symbol_of(c).unwrap_or(rule.domain_size()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rhm_core::ModelParams;

    #[test]
    fn ground_truth_scores_one() {
        let inst = RhmInstance::build(ModelParams::new(4, 3, 2, 2, 4, 0)).unwrap();
        assert_eq!(synonym_recovery_score(&true_clusters(&inst, 1), &inst, 1).unwrap(), 1.0);
    }

    #[test]
    fn single_cluster_scores_same_group_fraction() {
        let (v, m) = (4usize, 3usize);
        let inst = RhmInstance::build(ModelParams::new(v, m, 2, 2, 4, 0)).unwrap();
        let n = v * m;
        let same = v * m * (m - 1) / 2;
        let expected = same as f64 / (n * (n - 1) / 2) as f64;
        let score = synonym_recovery_score(&vec![0; 16], &inst, 1).unwrap();
        assert!((score - expected).abs() < 1e-12);
    }
}
