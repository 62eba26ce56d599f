use serde::{Deserialize, Serialize};

use crate::count::Count;
use crate::error::{Result, RhmError};

/// Largest tuple alphabet (v^s) we are willing to index densely.
pub const MAX_TUPLES: usize = 1 << 22;
/// Largest input length (s^L).
pub const MAX_INPUT_DIM: usize = 1 << 16;

/// Structural parameters of a Random Hierarchy Model.
///
/// Symbols, classes and choices are 0-based everywhere in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelParams {
    /// Vocabulary size at every level below the root.
    pub v: usize,
    /// Multiplicity: number of tuples each symbol expands into.
    pub m: usize,
    /// Tuple length.
    pub s: usize,
    /// Number of composition levels.
    #[serde(rename = "L")]
    pub depth: usize,
    /// Number of classes.
    #[serde(rename = "nc")]
    pub n_classes: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ModelParams {
    pub fn new(v: usize, m: usize, s: usize, depth: usize, n_classes: usize, seed: u64) -> Self {
        Self {
            v,
            m,
            s,
            depth,
            n_classes,
            seed,
        }
    }

    /// `v = m = n_c` with the given tuple length and depth, the setting of most experiments.
    pub fn symmetric(v: usize, s: usize, depth: usize, seed: u64) -> Self {
        Self::new(v, v, s, depth, v, seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RhmError::InvalidParams(msg));
        if self.v < 2 {
            return bad(format!("v = {} must be at least 2", self.v));
        }
        if self.s < 2 {
            return bad(format!("s = {} must be at least 2", self.s));
        }
        if self.depth < 1 {
            return bad("L must be at least 1".into());
        }
        if self.n_classes < 2 {
            return bad(format!("n_c = {} must be at least 2", self.n_classes));
        }
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        let n_tuples = match checked_pow(self.v, self.s) {
            Some(t) if t <= MAX_TUPLES => t,
            _ => return bad(format!("v^s = {}^{} is too large", self.v, self.s)),
        };
        match checked_pow(self.s, self.depth) {
            Some(d) if d <= MAX_INPUT_DIM => {}
            _ => return bad(format!("s^L = {}^{} is too large", self.s, self.depth)),
        }
        let per_symbol = n_tuples / self.v;
        if self.m > per_symbol {
            return bad(format!(
                "m = {} exceeds v^(s-1) = {}",
                self.m, per_symbol
            ));
        }
        if self.n_classes * self.m > n_tuples {
            return bad(format!(
                "n_c * m = {} exceeds v^s = {}",
                self.n_classes * self.m,
                n_tuples
            ));
        }
        Ok(())
    }

    /// Input length d = s^L.
    pub fn input_dim(&self) -> usize {
        self.s.pow(self.depth as u32)
    }

    /// Number of distinct s-tuples, v^s.
    pub fn n_tuples(&self) -> usize {
        self.v.pow(self.s as u32)
    }

    /// Number of input patches, s^(L-1).
    pub fn n_patches(&self) -> usize {
        self.s.pow(self.depth as u32 - 1)
    }

    /// Number of internal nodes of the generation tree, (s^L - 1)/(s - 1).
    pub fn tree_nodes(&self) -> usize {
        (self.input_dim() - 1) / (self.s - 1)
    }

    /// Number of symbols a level-`level` rule expands (n_c at the top, v below).
    pub fn domain_size(&self, level: usize) -> usize {
        if level == self.depth {
            self.n_classes
        } else {
            self.v
        }
    }

    /// Data per class, m^((s^L-1)/(s-1)).
    pub fn per_class(&self) -> Count {
        Count::pow(self.m as u128, self.tree_nodes() as u32)
    }

    /// Total number of distinct data, n_c · m^((s^L-1)/(s-1)).
    pub fn p_max(&self) -> Count {
        self.per_class().mul(self.n_classes as u128)
    }

    /// n_c · m^L.
    pub fn p_star(&self) -> Count {
        Count::pow(self.m as u128, self.depth as u32).mul(self.n_classes as u128)
    }

    /// Error of a uniformly random guess, 1 - 1/n_c.
    pub fn eps_rand(&self) -> f64 {
        1.0 - 1.0 / self.n_classes as f64
    }

    /// True when every symbol has a single representation and synonyms do not exist.
    pub fn is_degenerate(&self) -> bool {
        self.m == 1
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_multiplicity_above_v_to_s_minus_one() {
        let p = ModelParams::new(4, 5, 2, 2, 4, 0);
        assert!(matches!(p.validate(), Err(RhmError::InvalidParams(_))));
    }

    #[test]
    fn rejects_top_rule_overflow() {
        // n_c * m = 12 > v^s = 9
        let p = ModelParams::new(3, 3, 2, 2, 4, 0);
        assert!(p.validate().is_err());
        assert!(ModelParams::new(3, 3, 2, 2, 3, 0).validate().is_ok());
    }

    #[test]
    fn derived_sizes() {
        let p = ModelParams::new(2, 2, 2, 2, 2, 0);
        assert_eq!(p.input_dim(), 4);
        assert_eq!(p.n_patches(), 2);
        assert_eq!(p.tree_nodes(), 3);
        assert_eq!(p.p_max(), Count::Exact(16));
        let p = ModelParams::symmetric(8, 2, 3, 0);
        assert_eq!(p.p_star(), Count::Exact(4096));
        assert_eq!(p.p_max(), Count::Exact(8u128.pow(8)));
        assert!((p.eps_rand() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn json_field_names() {
        let p = ModelParams::new(3, 2, 2, 1, 2, 9);
        let js = serde_json::to_string(&p).unwrap();
        assert_eq!(js, r#"{"v":3,"m":2,"s":2,"L":1,"nc":2,"seed":9}"#);
    }
}
