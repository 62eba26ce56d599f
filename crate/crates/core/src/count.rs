use std::fmt;

use serde::{Deserialize, Serialize};

/// A non-negative integer that is kept exact while it fits in 128 bits and
/// falls back to its natural logarithm afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Count {
    Exact(u128),
    Log(f64),
}

impl Count {
    pub fn pow(base: u128, exp: u32) -> Count {
        match base.checked_pow(exp) {
            Some(x) => Count::Exact(x),
            None => Count::Log(exp as f64 * (base as f64).ln()),
        }
    }

    pub fn mul(self, k: u128) -> Count {
        match self {
            Count::Exact(x) => match x.checked_mul(k) {
                Some(y) => Count::Exact(y),
                None => Count::Log((x as f64).ln() + (k as f64).ln()),
            },
            Count::Log(l) => Count::Log(l + (k as f64).ln()),
        }
    }

    pub fn exact(&self) -> Option<u128> {
        match *self {
            Count::Exact(x) => Some(x),
            Count::Log(_) => None,
        }
    }

    /// Exact value if it fits a `u64`.
    pub fn as_u64(&self) -> Option<u64> {
        self.exact().and_then(|x| u64::try_from(x).ok())
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Count::Exact(x) => x as f64,
            Count::Log(l) => l.exp(),
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            Count::Exact(x) => (x as f64).ln(),
            Count::Log(l) => l,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Count::Exact(_))
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Count::Exact(x) => write!(f, "{x}"),
            Count::Log(l) => write!(f, "exp({l:.6})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_switches_to_log() {
        assert_eq!(Count::pow(2, 10), Count::Exact(1024));
        let big = Count::pow(10, 60);
        assert!(!big.is_exact());
        assert!((big.ln() - 60.0 * 10f64.ln()).abs() < 1e-9);
        let c = Count::Exact(u128::MAX / 2).mul(4);
        assert!(!c.is_exact());
    }
}
