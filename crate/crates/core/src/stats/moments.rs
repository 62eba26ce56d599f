//! Closed-form moments of rule occurrences over the random choice of rules.

use serde::{Deserialize, Serialize};

use crate::count::Count;
use crate::params::ModelParams;

/// Moments of the single-rule occurrence `N(μ; α)`: the number of tuples of
/// high-level symbol `α` carrying low-level symbol `μ` at a fixed position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleMoments {
    pub mean: f64,
    pub var: f64,
    /// Cov[N(μ; α), N(ν; α)], μ ≠ ν.
    pub cov_same_hi: f64,
    /// Cov[N(μ; α), N(μ; β)], α ≠ β.
    pub cov_same_lo: f64,
    /// Cov[N(μ; α), N(ν; β)], μ ≠ ν and α ≠ β.
    pub cov_none: f64,
}

/// Hypergeometric moments: each symbol draws `m` of the `v^s` tuples without
/// replacement, `v^(s-1)` of which carry a given low-level symbol.
pub fn rule_moments(params: &ModelParams) -> RuleMoments {
    let v = params.v as f64;
    let m = params.m as f64;
    let n = params.n_tuples() as f64;
    let mean = m / v;
    let var = mean * (v - 1.0) / v * (n - m) / (n - 1.0);
    let cov_same_lo = -mean * mean * (v - 1.0) / (n - 1.0);
    RuleMoments {
        mean,
        var,
        cov_same_hi: -var / (v - 1.0),
        cov_same_lo,
        cov_none: -cov_same_lo / (v - 1.0),
    }
}

/// Moments of the numerator `U(μ; α)` and denominator `D(μ)` of the
/// single-feature conditional frequency `f(α | μ) = U / D`, and the derived
/// signal and noise scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMoments {
    pub mean_u: f64,
    pub var_u: f64,
    pub mean_d: f64,
    pub var_d: f64,
    /// Variance of `f(α | μ)` over instances from the exact recursions.
    pub signal_var: f64,
    /// Large-v limit `(v/n_c) / (n_c m^L)`.
    pub signal_var_asymptotic: f64,
    /// `Var[f̂] ≈ noise_coeff / P` for the sampling noise of a training set of size P.
    pub noise_coeff: f64,
    pub p_c: Count,
}

impl LevelMoments {
    /// Predicted sampling variance of `f̂` at training-set size `p`.
    pub fn noise_var(&self, p: f64) -> f64 {
        self.noise_coeff / p
    }
}

/// Evaluates the level recursions
/// `σ²(ℓ) = v σ²(ℓ-1) (σ_N² - c_if) + v ⟨X(ℓ-1)⟩² (σ_N² + (v-1) c_if)`
/// for both U and D, starting from a single rule.
pub fn level_moments(params: &ModelParams) -> LevelMoments {
    let r = rule_moments(params);
    let v = params.v as f64;
    let m = params.m as f64;
    let nc = params.n_classes as f64;
    let depth = params.depth as i32;

    let mut mean_u = r.mean;
    let mut var_u = r.var;
    let mut mean_d = nc * r.mean;
    let mut var_d = nc * r.var + nc * (nc - 1.0) * r.cov_same_lo;
    let a = v * (r.var - r.cov_same_lo);
    let b = v * (r.var + (v - 1.0) * r.cov_same_lo);
    for _ in 1..depth {
        var_u = a * var_u + b * mean_u * mean_u;
        var_d = a * var_d + b * mean_d * mean_d;
        mean_u *= m;
        mean_d *= m;
    }
    let m_l = m.powi(depth);
    LevelMoments {
        mean_u,
        var_u,
        mean_d,
        var_d,
        signal_var: v * v * (var_u - var_d / (nc * nc)) / (nc * nc * m_l * m_l),
        signal_var_asymptotic: (v / nc) / (nc * m_l),
        noise_coeff: v / nc,
        p_c: params.p_star(),
    }
}
