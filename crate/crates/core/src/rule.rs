use rand::Rng as _;

use crate::error::{Result, RhmError};
use crate::params::ModelParams;
use crate::rng::Rng;
use crate::tuple;

/// One composition rule: each high-level symbol owns an ordered list of `m`
/// distinct s-tuples, and no tuple is shared between symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionRule {
    level: usize,
    v: usize,
    s: usize,
    forward: Vec<Vec<usize>>,
    /// Indexed by tuple code: owning symbol and position in its list.
    inverse: Vec<Option<(u32, u32)>>,
}

impl CompositionRule {
    /// Draws a rule uniformly among all assignments of `m` tuples per symbol
    /// without replacement: a partial Fisher-Yates shuffle of the `v^s` tuple
    /// codes, cut into consecutive groups of `m`.
    pub fn sample(params: &ModelParams, level: usize, rng: &mut Rng) -> Result<Self> {
        params.validate()?;
        if level == 0 || level > params.depth {
            return Err(RhmError::OutOfRange(format!(
                "rule level {level} outside 1..={}",
                params.depth
            )));
        }
        let domain = params.domain_size(level);
        let n = params.n_tuples();
        let take = domain * params.m;
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        let forward = pool[..take]
            .chunks(params.m)
            .map(|c| c.to_vec())
            .collect();
        Self::from_forward(level, params.v, params.s, forward)
    }

    /// Builds a rule from explicit tuple lists, checking every structural invariant.
    pub fn from_forward(level: usize, v: usize, s: usize, forward: Vec<Vec<usize>>) -> Result<Self> {
        let n = v.pow(s as u32);
        let m = forward.first().map(Vec::len).unwrap_or(0);
        if forward.is_empty() || m == 0 {
            return Err(RhmError::InvalidParams(format!(
                "rule at level {level} has no tuples"
            )));
        }
        let mut inverse = vec![None; n];
        for (sym, list) in forward.iter().enumerate() {
            if list.len() != m {
                return Err(RhmError::InvalidParams(format!(
                    "rule at level {level}: symbol {sym} has {} tuples, expected {m}",
                    list.len()
                )));
            }
            for (choice, &code) in list.iter().enumerate() {
                if code >= n {
                    return Err(RhmError::OutOfRange(format!(
                        "rule at level {level}: tuple code {code} >= v^s = {n}"
                    )));
                }
                if inverse[code].is_some() {
                    return Err(RhmError::InvalidParams(format!(
                        "rule at level {level}: tuple {:?} assigned twice",
                        tuple::decode(code, v, s)
                    )));
                }
                inverse[code] = Some((sym as u32, choice as u32));
            }
        }
        Ok(Self {
            level,
            v,
            s,
            forward,
            inverse,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn domain_size(&self) -> usize {
        self.forward.len()
    }

    pub fn multiplicity(&self) -> usize {
        self.forward[0].len()
    }

    pub fn tuple_len(&self) -> usize {
        self.s
    }

    pub fn alphabet(&self) -> usize {
        self.v
    }

    /// Tuple codes owned by each symbol, in sampling order.
    pub fn forward(&self) -> &[Vec<usize>] {
        &self.forward
    }

    /// Tuple code produced by `symbol` under `choice`.
    #[inline]
    pub fn expand(&self, symbol: usize, choice: usize) -> usize {
        self.forward[symbol][choice]
    }

    /// Owning symbol of a tuple code, if the rule generates it.
    #[inline]
    pub fn symbol_of(&self, code: usize) -> Option<usize> {
        self.inverse.get(code).copied().flatten().map(|(s, _)| s as usize)
    }

    /// Owning symbol and choice index of a tuple code.
    #[inline]
    pub fn locate(&self, code: usize) -> Option<(usize, usize)> {
        self.inverse
            .get(code)
            .copied()
            .flatten()
            .map(|(s, c)| (s as usize, c as usize))
    }

    /// Number of tuples the rule generates (domain size times m).
    pub fn support(&self) -> usize {
        self.domain_size() * self.multiplicity()
    }

    /// All tuples sharing the high-level symbol of `code`, including `code`.
    pub fn synonyms_of(&self, code: usize) -> Result<&[usize]> {
        match self.symbol_of(code) {
            Some(sym) => Ok(&self.forward[sym]),
            None => Err(RhmError::UnknownTuple {
                level: self.level,
                tuple: tuple::decode(code.min(self.inverse.len().saturating_sub(1)), self.v, self.s),
            }),
        }
    }

    /// Occurrence counts of low-level symbols at tuple position `pos`:
    /// entry `[hi][lo]` is the number of tuples of `hi` with `lo` at `pos`.
    pub fn position_counts(&self, pos: usize) -> Vec<Vec<u64>> {
        self.forward
            .iter()
            .map(|list| {
                let mut row = vec![0u64; self.v];
                for &code in list {
                    row[tuple::digit(code, self.v, self.s, pos)] += 1;
                }
                row
            })
            .collect()
    }
}
