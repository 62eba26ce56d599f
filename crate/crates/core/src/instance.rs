use crate::error::{Result, RhmError};
use crate::params::ModelParams;
use crate::rng::{substream, RULE_BASE};
use crate::rule::CompositionRule;
use crate::tuple;

/// A sampled hierarchy: parameters plus one composition rule per level.
///
/// `rules[0]` is the input rule (level 1, expanding level-2 symbols into input
/// tuples) and `rules[L-1]` is the class rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhmInstance {
    params: ModelParams,
    rules: Vec<CompositionRule>,
}

impl RhmInstance {
    /// Samples every rule independently; rule `l` uses substream `l` of `params.seed`.
    pub fn build(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let rules = (1..=params.depth)
            .map(|level| {
                let mut rng = substream(params.seed, RULE_BASE + level as u64);
                CompositionRule::sample(&params, level, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, rules })
    }

    /// Assembles an instance from explicit rules, validating their shapes against `params`.
    pub fn from_rules(params: ModelParams, rules: Vec<CompositionRule>) -> Result<Self> {
        params.validate()?;
        if rules.len() != params.depth {
            return Err(RhmError::InvalidParams(format!(
                "expected {} rules, found {}",
                params.depth,
                rules.len()
            )));
        }
        for (i, r) in rules.iter().enumerate() {
            let level = i + 1;
            if r.level() != level
                || r.domain_size() != params.domain_size(level)
                || r.multiplicity() != params.m
                || r.alphabet() != params.v
                || r.tuple_len() != params.s
            {
                return Err(RhmError::InvalidParams(format!(
                    "rule {level} does not match parameters (domain {}, m {})",
                    r.domain_size(),
                    r.multiplicity()
                )));
            }
        }
        Ok(Self { params, rules })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn rules(&self) -> &[CompositionRule] {
        &self.rules
    }

    /// Rule at `level` (1-based; level L is the class rule).
    pub fn rule(&self, level: usize) -> &CompositionRule {
        &self.rules[level - 1]
    }

    /// The synonym group of `tuple` at `level`.
    pub fn synonyms_of(&self, level: usize, symbols: &[usize]) -> Result<Vec<Vec<usize>>> {
        if level == 0 || level > self.params.depth {
            return Err(RhmError::OutOfRange(format!("level {level}")));
        }
        let p = &self.params;
        if symbols.len() != p.s || symbols.iter().any(|&x| x >= p.v) {
            return Err(RhmError::UnknownTuple {
                level,
                tuple: symbols.to_vec(),
            });
        }
        let code = tuple::encode(symbols, p.v);
        let group = self.rule(level).synonyms_of(code).map_err(|_| RhmError::UnknownTuple {
            level,
            tuple: symbols.to_vec(),
        })?;
        Ok(group.iter().map(|&c| tuple::decode(c, p.v, p.s)).collect())
    }
}
