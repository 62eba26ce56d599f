//! Homogeneous Features Model instances: rules in which every low-level
//! symbol appears equally often at every tuple position for every high-level
//! symbol, so single positions carry no information about the class.
//!
//! Only the maximal-multiplicity case `m = v^(s-1)`, `n_c = v` is supported.
//! Symbol `j` receives, for every prefix `(p_1, ..., p_{s-1})`, the tuple
//!
//! ```text
//! (π_1(p_1), ..., π_{s-1}(p_{s-1}), α[(p_1 + ... + p_{s-1} + j) mod v])
//! ```
//!
//! where `α` and the `π_t` are random permutations of the alphabet. The last
//! position of symbol `j` is the sequence of symbol 0 cyclically shifted by
//! `j`, which makes the tuple sets of different symbols disjoint and gives
//! every count `N_i(μ; j) = v^(s-2)`.

use rand::seq::SliceRandom;

use crate::error::{Result, RhmError};
use crate::instance::RhmInstance;
use crate::params::ModelParams;
use crate::rng::{substream, Rng, HFM_BASE};
use crate::rule::CompositionRule;
use crate::tuple;

pub fn build_hfm_instance(params: ModelParams) -> Result<RhmInstance> {
    params.validate()?;
    let per_symbol = params.n_tuples() / params.v;
    if params.m != per_symbol || params.n_classes != params.v {
        return Err(RhmError::UnsupportedConstruction(format!(
            "homogeneous rules need m = v^(s-1) = {per_symbol} and n_c = v = {} (got m = {}, n_c = {})",
            params.v, params.m, params.n_classes
        )));
    }
    let rules = (1..=params.depth)
        .map(|level| {
            let mut rng = substream(params.seed, HFM_BASE + level as u64);
            homogeneous_rule(&params, level, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    RhmInstance::from_rules(params, rules)
}

fn homogeneous_rule(params: &ModelParams, level: usize, rng: &mut Rng) -> Result<CompositionRule> {
    let (v, s) = (params.v, params.s);
    let mut last: Vec<usize> = (0..v).collect();
    last.shuffle(rng);
    let prefix_perms: Vec<Vec<usize>> = (0..s - 1)
        .map(|_| {
            let mut p: Vec<usize> = (0..v).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let n_prefix = v.pow(s as u32 - 1);
    let forward = (0..v)
        .map(|sym| {
            (0..n_prefix)
                .map(|pc| {
                    let prefix = tuple::decode(pc, v, s - 1);
                    let shift = prefix.iter().sum::<usize>() + sym;
                    let mut t: Vec<usize> = prefix
                        .iter()
                        .zip(&prefix_perms)
                        .map(|(&x, perm)| perm[x])
                        .collect();
                    t.push(last[shift % v]);
                    tuple::encode(&t, v)
                })
                .collect()
        })
        .collect();
    CompositionRule::from_forward(level, v, s, forward)
}
