//! Data of an instance: generation from choice paths, enumeration, uniform
//! sampling without replacement, and the synonym-exchange operator.
//!
//! A datum is identified by its label and the choice made at every internal
//! node of the generation tree. Choices are stored breadth-first: the root
//! (class) node first, then the `s` nodes of the next layer, and so on, so
//! layer `t` holds `s^t` choices starting at offset `(s^t - 1)/(s - 1)` and
//! is expanded by the rule at level `L - t`.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RhmError};
use crate::instance::RhmInstance;
use crate::rng::Rng;
use crate::tuple;

/// Default upper bound on the number of data materialized by enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChoicePath {
    pub label: usize,
    pub choices: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Datum {
    pub label: usize,
    pub features: Vec<u32>,
}

/// An ordered collection of data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub data: Vec<Datum>,
}

impl Dataset {
    pub fn new(data: Vec<Datum>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Datum> {
        self.data.iter()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.data.iter().map(|d| d.label).collect()
    }

    /// Per-class counts.
    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut c = vec![0; n_classes];
        for d in &self.data {
            c[d.label] += 1;
        }
        c
    }

    /// Writes `label,f_1,...,f_d` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.data.first().map_or(0, |x| x.features.len());
        let mut header = vec!["label".to_string()];
        header.extend((1..=d).map(|i| format!("f_{i}")));
        w.write_record(&header)?;
        for datum in &self.data {
            let mut row = vec![datum.label.to_string()];
            row.extend(datum.features.iter().map(|f| f.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl FromIterator<Datum> for Dataset {
    fn from_iter<I: IntoIterator<Item = Datum>>(iter: I) -> Self {
        Self {
            data: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Datum;
    type IntoIter = std::slice::Iter<'a, Datum>;
    fn into_iter(self) -> Self::IntoIter {
        self.data.iter()
    }
}

/// Offset and length of tree layer `t` in a breadth-first choice array.
pub fn layer_span(s: usize, t: usize) -> (usize, usize) {
    let len = s.pow(t as u32);
    ((len - 1) / (s - 1), len)
}

/// Expands a choice path top-down into its feature string.
pub fn generate_datum(instance: &RhmInstance, path: &ChoicePath) -> Result<Datum> {
    let p = instance.params();
    if path.label >= p.n_classes {
        return Err(RhmError::OutOfRange(format!(
            "label {} >= n_c = {}",
            path.label, p.n_classes
        )));
    }
    if path.choices.len() != p.tree_nodes() {
        return Err(RhmError::OutOfRange(format!(
            "path has {} choices, expected {}",
            path.choices.len(),
            p.tree_nodes()
        )));
    }
    if let Some(&c) = path.choices.iter().find(|&&c| c as usize >= p.m) {
        return Err(RhmError::OutOfRange(format!("choice {c} >= m = {}", p.m)));
    }
    Ok(expand_unchecked(instance, path))
}

fn expand_unchecked(instance: &RhmInstance, path: &ChoicePath) -> Datum {
    let p = instance.params();
    let mut symbols = vec![path.label as u32];
    let mut node = 0;
    for level in (1..=p.depth).rev() {
        let rule = instance.rule(level);
        let mut next = Vec::with_capacity(symbols.len() * p.s);
        for &sym in &symbols {
            let code = rule.expand(sym as usize, path.choices[node] as usize);
            node += 1;
            let start = next.len();
            next.resize(start + p.s, 0);
            let mut c = code;
            for slot in next[start..].iter_mut().rev() {
                *slot = (c % p.v) as u32;
                c /= p.v;
            }
        }
        symbols = next;
    }
    Datum {
        label: path.label,
        features: symbols,
    }
}

/// Recovers the generation path of a feature string by applying the rule
/// inverses bottom-up, or `None` if the string is not generated by the instance.
pub fn decode_path(instance: &RhmInstance, features: &[u32]) -> Option<ChoicePath> {
    let p = instance.params();
    if features.len() != p.input_dim() {
        return None;
    }
    let mut layers: Vec<Vec<u32>> = Vec::with_capacity(p.depth);
    let mut current: Vec<u32> = features.to_vec();
    for level in 1..=p.depth {
        let rule = instance.rule(level);
        let mut syms = Vec::with_capacity(current.len() / p.s);
        let mut choices = Vec::with_capacity(current.len() / p.s);
        for chunk in current.chunks(p.s) {
            if chunk.iter().any(|&x| x as usize >= p.v) {
                return None;
            }
            let code = chunk.iter().fold(0usize, |acc, &x| acc * p.v + x as usize);
            let (sym, choice) = rule.locate(code)?;
            syms.push(sym as u32);
            choices.push(choice as u32);
        }
        layers.push(choices);
        current = syms;
    }
    let label = current[0] as usize;
    let choices = layers.into_iter().rev().flatten().collect();
    Some(ChoicePath { label, choices })
}

/// Class of a feature string, if the instance generates it.
pub fn decode_label(instance: &RhmInstance, features: &[u32]) -> Option<usize> {
    decode_path(instance, features).map(|p| p.label)
}

/// Position of a path in the canonical (label-major, lexicographic) order.
pub fn path_index(instance: &RhmInstance, path: &ChoicePath) -> Option<u64> {
    let m = instance.params().m as u64;
    let mut idx = path.label as u64;
    for &c in &path.choices {
        idx = idx.checked_mul(m)?.checked_add(c as u64)?;
    }
    Some(idx)
}

/// Inverse of [`path_index`]; the caller guarantees `index < p_max`.
pub fn path_from_index(instance: &RhmInstance, mut index: u64) -> ChoicePath {
    let p = instance.params();
    let m = p.m as u64;
    let mut choices = vec![0u32; p.tree_nodes()];
    for slot in choices.iter_mut().rev() {
        *slot = (index % m) as u32;
        index /= m;
    }
    ChoicePath {
        label: index as usize,
        choices,
    }
}

fn p_max_u64(instance: &RhmInstance) -> Option<u64> {
    instance.params().p_max().as_u64()
}

/// Lazily iterates over every datum in canonical order.
pub fn enumerate_iter(
    instance: &RhmInstance,
    cap: u64,
) -> Result<impl Iterator<Item = Datum> + '_> {
    let total = match p_max_u64(instance) {
        Some(t) if t <= cap => t,
        _ => {
            return Err(RhmError::CapExceeded {
                p_max: instance.params().p_max().to_string(),
                cap,
            })
        }
    };
    Ok((0..total).map(move |i| expand_unchecked(instance, &path_from_index(instance, i))))
}

/// The full dataset in canonical order (label-major, choices lexicographic).
pub fn enumerate_dataset(instance: &RhmInstance, cap: u64) -> Result<Dataset> {
    Ok(enumerate_iter(instance, cap)?.collect())
}

fn random_path(instance: &RhmInstance, rng: &mut Rng) -> ChoicePath {
    let p = instance.params();
    let label = rng.random_range(0..p.n_classes);
    let choices = (0..p.tree_nodes())
        .map(|_| rng.random_range(0..p.m as u32))
        .collect();
    ChoicePath { label, choices }
}

/// `k` distinct paths in uniformly random order.
pub fn sample_distinct_paths(instance: &RhmInstance, k: u64, rng: &mut Rng) -> Result<Vec<ChoicePath>> {
    let p_max = instance.params().p_max();
    match p_max.as_u64() {
        Some(total) => {
            if k > total {
                return Err(RhmError::TooManySamples {
                    requested: k,
                    available: total.to_string(),
                });
            }
            let idx = sample_indices(total, k, rng);
            Ok(idx.into_iter().map(|i| path_from_index(instance, i)).collect())
        }
        None => {
            let mut seen = HashSet::with_capacity(k as usize);
            let mut out = Vec::with_capacity(k as usize);
            while (out.len() as u64) < k {
                let path = random_path(instance, rng);
                if seen.insert(path.clone()) {
                    out.push(path);
                }
            }
            Ok(out)
        }
    }
}

/// `k` distinct integers below `total`, in uniformly random order.
fn sample_indices(total: u64, k: u64, rng: &mut Rng) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    if 2 * k >= total {
        let mut pool: Vec<u64> = (0..total).collect();
        for i in 0..k as usize {
            let j = rng.random_range(i as u64..total) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k as usize);
        pool
    } else {
        let mut seen = HashSet::with_capacity(k as usize);
        let mut out = Vec::with_capacity(k as usize);
        while (out.len() as u64) < k {
            let i = rng.random_range(0..total);
            if seen.insert(i) {
                out.push(i);
            }
        }
        out
    }
}

/// `size` distinct data drawn uniformly without replacement.
pub fn sample_training_set(instance: &RhmInstance, size: u64, rng: &mut Rng) -> Result<Dataset> {
    Ok(sample_distinct_paths(instance, size, rng)?
        .iter()
        .map(|path| expand_unchecked(instance, path))
        .collect())
}

/// A training set of `size` data and a disjoint test set of
/// `min(p_max - size, test_cap)` data, drawn jointly without replacement.
pub fn sample_train_test(
    instance: &RhmInstance,
    size: u64,
    test_cap: u64,
    rng: &mut Rng,
) -> Result<(Dataset, Dataset)> {
    let available = instance.params().p_max();
    let test = match available.as_u64() {
        Some(total) if size <= total => (total - size).min(test_cap),
        Some(total) => {
            return Err(RhmError::TooManySamples {
                requested: size,
                available: total.to_string(),
            })
        }
        None => test_cap,
    };
    let mut all = sample_training_set(instance, size + test, rng)?;
    let test_set = Dataset::new(all.data.split_off(size as usize));
    Ok((all, test_set))
}

/// Resamples, independently and uniformly over all `m` options, the choice at
/// every level-`level` node of the datum's generation tree, keeping every other
/// choice, and re-expands. The label is unchanged.
pub fn synonym_perturb(
    instance: &RhmInstance,
    datum: &Datum,
    level: usize,
    rng: &mut Rng,
) -> Result<Datum> {
    let p = instance.params();
    if level == 0 || level > p.depth {
        return Err(RhmError::OutOfRange(format!(
            "perturbation level {level} outside 1..={}",
            p.depth
        )));
    }
    let mut path = decode_path(instance, &datum.features).ok_or_else(|| {
        RhmError::OutOfRange("datum is not generated by the instance".into())
    })?;
    perturb_path(instance, &mut path, level, rng);
    Ok(expand_unchecked(instance, &path))
}

/// In-place version of [`synonym_perturb`] acting on a path.
pub fn perturb_path(instance: &RhmInstance, path: &mut ChoicePath, level: usize, rng: &mut Rng) {
    let p = instance.params();
    let (start, len) = layer_span(p.s, p.depth - level);
    for c in &mut path.choices[start..start + len] {
        *c = rng.random_range(0..p.m as u32);
    }
}

/// Tuple codes of the `s^(L-1)` input patches of a datum; patch `j` covers
/// positions `j*s .. (j+1)*s`.
pub fn patch_codes(features: &[u32], v: usize, s: usize) -> impl Iterator<Item = usize> + '_ {
    features
        .chunks(s)
        .map(move |c| c.iter().fold(0usize, |acc, &x| acc * v + x as usize))
}

/// Symbols of a datum as `usize`s for tuple helpers.
pub fn as_symbols(features: &[u32]) -> Vec<usize> {
    features.iter().map(|&x| x as usize).collect()
}

#[doc(hidden)]
pub fn tuple_of_patch(features: &[u32], s: usize, j: usize, v: usize) -> usize {
    tuple::encode(&as_symbols(&features[j * s..(j + 1) * s]), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::rng::substream;

    fn small() -> RhmInstance {
        RhmInstance::build(ModelParams::new(2, 2, 2, 2, 2, 0)).unwrap()
    }

    #[test]
    fn depth_one_is_a_single_expansion() {
        let inst = RhmInstance::build(ModelParams::new(3, 2, 2, 1, 3, 4)).unwrap();
        let path = ChoicePath { label: 2, choices: vec![1] };
        let d = generate_datum(&inst, &path).unwrap();
        let code = inst.rule(1).expand(2, 1);
        assert_eq!(as_symbols(&d.features), tuple::decode(code, 3, 2));
    }

    #[test]
    fn enumeration_matches_p_max_and_is_balanced() {
        let inst = small();
        let all = enumerate_dataset(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all.len(), 16);
        assert_eq!(all.class_counts(2), vec![8, 8]);
        let distinct: HashSet<_> = all.iter().map(|d| d.features.clone()).collect();
        assert_eq!(distinct.len(), 16);
        for d in &all {
            assert_eq!(decode_label(&inst, &d.features), Some(d.label));
        }
    }

    #[test]
    fn enumeration_cap() {
        let inst = RhmInstance::build(ModelParams::symmetric(8, 2, 3, 0)).unwrap();
        assert!(matches!(
            enumerate_dataset(&inst, DEFAULT_ENUMERATION_CAP),
            Err(RhmError::CapExceeded { .. })
        ));
    }

    #[test]
    fn out_of_range_choice() {
        let inst = small();
        let bad = ChoicePath { label: 0, choices: vec![0, 2, 0] };
        assert!(matches!(generate_datum(&inst, &bad), Err(RhmError::OutOfRange(_))));
        let bad = ChoicePath { label: 2, choices: vec![0, 0, 0] };
        assert!(generate_datum(&inst, &bad).is_err());
    }

    #[test]
    fn decode_inverts_generation() {
        let inst = RhmInstance::build(ModelParams::new(4, 3, 2, 3, 3, 8)).unwrap();
        let mut rng = substream(1, 99);
        for _ in 0..200 {
            let path = random_path(&inst, &mut rng);
            let d = generate_datum(&inst, &path).unwrap();
            assert_eq!(decode_path(&inst, &d.features), Some(path));
        }
    }

    #[test]
    fn full_sample_is_the_dataset() {
        let inst = small();
        let mut rng = substream(2, 0);
        let s = sample_training_set(&inst, 16, &mut rng).unwrap();
        let a: HashSet<_> = s.iter().cloned().collect();
        let b: HashSet<_> = enumerate_dataset(&inst, 100).unwrap().iter().cloned().collect();
        assert_eq!(a, b);
        assert!(sample_training_set(&inst, 0, &mut rng).unwrap().is_empty());
        assert!(matches!(
            sample_training_set(&inst, 17, &mut rng),
            Err(RhmError::TooManySamples { .. })
        ));
    }

    #[test]
    fn train_test_disjoint() {
        let inst = RhmInstance::build(ModelParams::new(3, 3, 2, 2, 3, 1)).unwrap();
        let mut rng = substream(5, 0);
        let (train, test) = sample_train_test(&inst, 20, 1000, &mut rng).unwrap();
        assert_eq!(train.len(), 20);
        assert_eq!(test.len(), 81 - 20);
        let a: HashSet<_> = train.iter().collect();
        assert!(test.iter().all(|d| !a.contains(d)));
    }

    #[test]
    fn perturbation_keeps_label_and_m1_is_identity() {
        let inst = RhmInstance::build(ModelParams::new(4, 3, 2, 3, 4, 2)).unwrap();
        let mut rng = substream(6, 0);
        let data = sample_training_set(&inst, 50, &mut rng).unwrap();
        for d in &data {
            for level in 1..=3 {
                let q = synonym_perturb(&inst, d, level, &mut rng).unwrap();
                assert_eq!(decode_label(&inst, &q.features), Some(d.label));
            }
        }
        assert!(synonym_perturb(&inst, &data.data[0], 0, &mut rng).is_err());
        assert!(synonym_perturb(&inst, &data.data[0], 4, &mut rng).is_err());

        let inst = RhmInstance::build(ModelParams::new(4, 1, 2, 2, 4, 2)).unwrap();
        let data = sample_training_set(&inst, 4, &mut rng).unwrap();
        for d in &data {
            for level in 1..=2 {
                assert_eq!(&synonym_perturb(&inst, d, level, &mut rng).unwrap(), d);
            }
        }
    }

    #[test]
    fn level_one_perturbation_changes_only_within_patches() {
        let inst = RhmInstance::build(ModelParams::new(5, 4, 2, 3, 5, 2)).unwrap();
        let mut rng = substream(7, 0);
        let data = sample_training_set(&inst, 30, &mut rng).unwrap();
        for d in &data {
            let q = synonym_perturb(&inst, d, 1, &mut rng).unwrap();
            for (a, b) in patch_codes(&d.features, 5, 2).zip(patch_codes(&q.features, 5, 2)) {
                assert_eq!(inst.rule(1).symbol_of(a), inst.rule(1).symbol_of(b));
            }
        }
    }
}
