//! Joint occurrences of input patterns and class labels.
//!
//! Exact counts are obtained from the rules alone by chaining single-rule
//! occurrence matrices along the path from the root to the input position,
//! without enumerating the data.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, RhmError};
use crate::instance::RhmInstance;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKind {
    Exact,
    Empirical,
}

/// What a table is indexed by: s-tuples at each input patch, or single
/// symbols at each input position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Tuple,
    Feature,
}

/// Counts indexed by (position, key, class), stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceTable {
    pub kind: CountKind,
    pub resolution: Resolution,
    pub n_positions: usize,
    pub n_keys: usize,
    pub n_classes: usize,
    pub counts: Vec<u128>,
    /// Number of data the counts refer to (p_max or P).
    pub total: u128,
}

impl OccurrenceTable {
    fn zeros(kind: CountKind, resolution: Resolution, params: &ModelParams, total: u128) -> Self {
        let (n_positions, n_keys) = match resolution {
            Resolution::Tuple => (params.n_patches(), params.n_tuples()),
            Resolution::Feature => (params.input_dim(), params.v),
        };
        Self {
            kind,
            resolution,
            n_positions,
            n_keys,
            n_classes: params.n_classes,
            counts: vec![0; n_positions * n_keys * params.n_classes],
            total,
        }
    }

    #[inline]
    fn idx(&self, pos: usize, key: usize, class: usize) -> usize {
        (pos * self.n_keys + key) * self.n_classes + class
    }

    #[inline]
    pub fn get(&self, pos: usize, key: usize, class: usize) -> u128 {
        self.counts[self.idx(pos, key, class)]
    }

    /// Counts of `key` at `pos` for every class.
    pub fn row(&self, pos: usize, key: usize) -> &[u128] {
        let i = self.idx(pos, key, 0);
        &self.counts[i..i + self.n_classes]
    }

    /// Occurrences of `key` at `pos` summed over classes.
    pub fn marginal(&self, pos: usize, key: usize) -> u128 {
        self.row(pos, key).iter().sum()
    }

    /// Writes `position,key,class,count` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["position", "key", "class", "count"])?;
        for pos in 0..self.n_positions {
            for key in 0..self.n_keys {
                for class in 0..self.n_classes {
                    let c = self.get(pos, key, class);
                    if c > 0 {
                        w.write_record([
                            pos.to_string(),
                            key.to_string(),
                            class.to_string(),
                            c.to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Conditional class frequencies `f(α | key)` at each position; `None` where
/// the key never occurs at that position.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub resolution: Resolution,
    pub n_positions: usize,
    pub n_keys: usize,
    pub n_classes: usize,
    pub freqs: Vec<Option<f64>>,
}

impl FrequencyTable {
    #[inline]
    pub fn get(&self, pos: usize, key: usize, class: usize) -> Option<f64> {
        self.freqs[(pos * self.n_keys + key) * self.n_classes + class]
    }

    /// Iterates over the defined entries as `(pos, key, class, f)`.
    pub fn defined(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let (nk, nc) = (self.n_keys, self.n_classes);
        self.freqs.iter().enumerate().filter_map(move |(i, f)| {
            f.map(|f| (i / (nk * nc), (i / nc) % nk, i % nc, f))
        })
    }
}

type Matrix = Vec<Vec<u128>>;

fn checked_matmul(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter().zip(b).try_fold(0u128, |acc, (&x, brow)| {
                        acc.checked_add(x.checked_mul(brow[j])?)
                    })
                })
                .collect()
        })
        .collect()
}

/// Occurrence matrix `[lo][hi]` of a rule at one tuple position.
fn occurrence_matrix(instance: &RhmInstance, level: usize, pos: usize) -> Matrix {
    let rule = instance.rule(level);
    let by_hi = rule.position_counts(pos);
    (0..rule.alphabet())
        .map(|lo| by_hi.iter().map(|row| row[lo] as u128).collect())
        .collect()
}

/// Base-s digits of `index` (most significant first), `len` of them.
fn branch_digits(index: usize, s: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    let mut x = index;
    for slot in d.iter_mut().rev() {
        *slot = x % s;
        x /= s;
    }
    d
}

/// Product of occurrence matrices from `level_lo` up to the class rule, with
/// the branch taken at each level given by `digits` (digits[0] is the branch
/// below the root). Returns a `[symbol at level_lo][class]` matrix.
fn chain(instance: &RhmInstance, level_lo: usize, digits: &[usize]) -> Option<Matrix> {
    let depth = instance.params().depth;
    let mut acc: Option<Matrix> = None;
    for level in level_lo..=depth {
        let m = occurrence_matrix(instance, level, digits[depth - level]);
        acc = Some(match acc {
            None => m,
            Some(a) => checked_matmul(&a, &m)?,
        });
    }
    acc
}

fn prefactor(params: &ModelParams) -> Option<u128> {
    (params.m as u128).checked_pow((params.tree_nodes() - params.depth) as u32)
}

fn overflow(params: &ModelParams) -> RhmError {
    RhmError::OutOfRange(format!(
        "exact counts exceed 128 bits (p_max = {})",
        params.p_max()
    ))
}

/// Exact joint occurrences `N_j(μ; α)` of s-tuples and classes over the whole
/// dataset, for every input patch `j`. Counts exceeding 128 bits are reported
/// as `OutOfRange`.
pub fn exact_tuple_counts(instance: &RhmInstance) -> Result<OccurrenceTable> {
    let params = instance.params();
    let total = params.p_max().exact().ok_or_else(|| overflow(params))?;
    let pref = prefactor(params).ok_or_else(|| overflow(params))?;
    let mut table = OccurrenceTable::zeros(CountKind::Exact, Resolution::Tuple, params, total);
    let rule1 = instance.rule(1);
    let depth = params.depth;
    for j in 0..params.n_patches() {
        let digits = branch_digits(j, params.s, depth - 1);
        // [level-2 symbol][class]; identity on classes when the patch is the root.
        let upper = if depth == 1 {
            None
        } else {
            Some(chain(instance, 2, &digits).ok_or_else(|| overflow(params))?)
        };
        for code in 0..params.n_tuples() {
            let Some(g) = rule1.symbol_of(code) else { continue };
            for class in 0..params.n_classes {
                let c = match &upper {
                    None => u128::from(g == class),
                    Some(t) => t[g][class],
                };
                let i = table.idx(j, code, class);
                table.counts[i] = c.checked_mul(pref).ok_or_else(|| overflow(params))?;
            }
        }
    }
    Ok(table)
}

/// Exact joint occurrences of single input symbols and classes at every
/// input position.
pub fn exact_feature_counts(instance: &RhmInstance) -> Result<OccurrenceTable> {
    let params = instance.params();
    let total = params.p_max().exact().ok_or_else(|| overflow(params))?;
    let pref = prefactor(params).ok_or_else(|| overflow(params))?;
    let mut table = OccurrenceTable::zeros(CountKind::Exact, Resolution::Feature, params, total);
    for x in 0..params.input_dim() {
        let digits = branch_digits(x, params.s, params.depth);
        let t = chain(instance, 1, &digits).ok_or_else(|| overflow(params))?;
        for (mu, row) in t.iter().enumerate() {
            for (class, &c) in row.iter().enumerate() {
                let i = table.idx(x, mu, class);
                table.counts[i] = c.checked_mul(pref).ok_or_else(|| overflow(params))?;
            }
        }
    }
    Ok(table)
}

/// Occurrences of s-tuples per patch and class within a sample.
pub fn empirical_counts(train: &Dataset, instance: &RhmInstance) -> OccurrenceTable {
    empirical(train, instance.params(), Resolution::Tuple)
}

/// Occurrences of single symbols per position and class within a sample.
pub fn empirical_feature_counts(train: &Dataset, instance: &RhmInstance) -> OccurrenceTable {
    empirical(train, instance.params(), Resolution::Feature)
}

fn empirical(train: &Dataset, params: &ModelParams, resolution: Resolution) -> OccurrenceTable {
    let mut table = OccurrenceTable::zeros(
        CountKind::Empirical,
        resolution,
        params,
        train.len() as u128,
    );
    let (v, s) = (params.v, params.s);
    for d in train {
        match resolution {
            Resolution::Tuple => {
                for (j, chunk) in d.features.chunks(s).enumerate() {
                    let code = chunk.iter().fold(0usize, |a, &x| a * v + x as usize);
                    let i = table.idx(j, code, d.label);
                    table.counts[i] += 1;
                }
            }
            Resolution::Feature => {
                for (x, &f) in d.features.iter().enumerate() {
                    let i = table.idx(x, f as usize, d.label);
                    table.counts[i] += 1;
                }
            }
        }
    }
    table
}

/// Row-normalizes a table into conditional class frequencies.
pub fn conditional_frequencies(table: &OccurrenceTable) -> FrequencyTable {
    let mut freqs = Vec::with_capacity(table.counts.len());
    for row in table.counts.chunks(table.n_classes) {
        let total: u128 = row.iter().sum();
        if total == 0 {
            freqs.extend(std::iter::repeat_n(None, row.len()));
        } else {
            let t = total as f64;
            freqs.extend(row.iter().map(|&c| Some(c as f64 / t)));
        }
    }
    FrequencyTable {
        resolution: table.resolution,
        n_positions: table.n_positions,
        n_keys: table.n_keys,
        n_classes: table.n_classes,
        freqs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{enumerate_dataset, sample_training_set};
    use crate::hfm::build_hfm_instance;
    use crate::rng::substream;

    #[test]
    fn tiny_model_matches_enumeration() {
        let inst = RhmInstance::build(ModelParams::new(2, 2, 2, 2, 2, 3)).unwrap();
        let all = enumerate_dataset(&inst, 1 << 20).unwrap();
        assert_eq!(exact_tuple_counts(&inst).unwrap().counts, empirical_counts(&all, &inst).counts);
        assert_eq!(
            exact_feature_counts(&inst).unwrap().counts,
            empirical_feature_counts(&all, &inst).counts
        );
    }

    #[test]
    fn single_datum_has_one_entry_per_patch() {
        let inst = RhmInstance::build(ModelParams::new(3, 2, 2, 3, 3, 1)).unwrap();
        let one = sample_training_set(&inst, 1, &mut substream(1, 0)).unwrap();
        let t = empirical_counts(&one, &inst);
        assert_eq!(t.counts.iter().filter(|&&c| c > 0).count(), 4);
        assert_eq!(t.counts.iter().sum::<u128>(), 4);
        assert_eq!(t.total, 1);
    }

    #[test]
    fn hfm_frequencies_are_uniform() {
        let inst = build_hfm_instance(ModelParams::new(3, 3, 2, 2, 3, 7)).unwrap();
        for table in [exact_tuple_counts(&inst).unwrap(), exact_feature_counts(&inst).unwrap()] {
            let f = conditional_frequencies(&table);
            let mut n = 0;
            for (_, _, _, x) in f.defined() {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
                n += 1;
            }
            assert!(n > 0);
        }
    }

    #[test]
    fn undefined_rows_are_absent() {
        let inst = RhmInstance::build(ModelParams::new(4, 2, 2, 2, 2, 0)).unwrap();
        let f = conditional_frequencies(&exact_tuple_counts(&inst).unwrap());
        let unused = (0..16).find(|&c| inst.rule(1).symbol_of(c).is_none()).unwrap();
        assert!((0..2).all(|a| f.get(0, unused, a).is_none()));
    }

    #[test]
    fn overflow_is_reported() {
        let inst = RhmInstance::build(ModelParams::new(8, 8, 2, 7, 8, 0)).unwrap();
        assert!(matches!(exact_tuple_counts(&inst), Err(RhmError::OutOfRange(_))));
    }
}
