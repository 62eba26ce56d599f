//! Closed-form characteristic sizes of a hierarchy.

use serde::{Deserialize, Serialize};

use crate::count::Count;
use crate::error::Result;
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    /// Total number of distinct data.
    pub p_max: Count,
    /// Log of the number of instances (natural units): the information-theoretic sample size.
    pub p_min_nats: f64,
    /// Predicted sample complexity of deep convolutional networks, n_c m^L.
    pub p_star: Count,
    /// Training-set size at which input-class correlations exceed sampling noise.
    pub p_c: Count,
    /// Chance-level error.
    pub eps_rand: f64,
    /// Log number of rules over `v` high-level symbols.
    pub log_num_rules: f64,
    /// Log number of class rules (over `n_c` symbols).
    pub log_num_top_rules: f64,
    /// Log number of instances, counting internal relabelings once.
    pub log_num_instances: f64,
    /// Log fraction of instances built from shifted-permutation homogeneous
    /// rules; only defined when `m = v^(s-1)`.
    pub log_f_hfm: Option<f64>,
}

pub fn theory_quantities(params: &ModelParams) -> Result<TheoryReport> {
    params.validate()?;
    let n_tuples = params.n_tuples() as u64;
    let depth = params.depth as f64;
    let log_num_rules = log_num_rules(n_tuples, params.m as u64, params.v as u64);
    let log_num_top_rules = log_num_rules_for(n_tuples, params.m as u64, params.n_classes as u64);
    let log_v_fact = ln_factorial(params.v as u64);
    let log_num_instances =
        log_num_top_rules + (depth - 1.0) * (log_num_rules - log_v_fact);
    let per_symbol = n_tuples / params.v as u64;
    let log_f_hfm = (params.m as u64 == per_symbol).then(|| {
        // Homogeneous rules of the shifted-permutation family:
        // ((v^(s-1))!)^(s-1) per rule, normalised by the instance count.
        let homogeneous = (params.s as f64 - 1.0) * ln_factorial(per_symbol);
        depth * (homogeneous - log_num_rules + log_v_fact) - log_v_fact
    });
    Ok(TheoryReport {
        p_max: params.p_max(),
        p_min_nats: log_num_instances,
        p_star: params.p_star(),
        p_c: params.p_star(),
        eps_rand: params.eps_rand(),
        log_num_rules,
        log_num_top_rules,
        log_num_instances,
        log_f_hfm,
    })
}

/// ln of (v^s)! / ((m!)^v (v^s - v m)!).
fn log_num_rules(n_tuples: u64, m: u64, v: u64) -> f64 {
    log_num_rules_for(n_tuples, m, v)
}

fn log_num_rules_for(n_tuples: u64, m: u64, symbols: u64) -> f64 {
    ln_factorial(n_tuples)
        - symbols as f64 * ln_factorial(m)
        - ln_factorial(n_tuples - symbols * m)
}

/// ln(n!), summed exactly for moderate n and by Stirling's series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 4096 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}
