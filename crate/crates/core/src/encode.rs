//! One-hot input encodings.

use crate::dataset::Datum;

/// One-hot encoding of a symbol string, position-major and symbol-minor
/// (`d·v` values). With `centered`, every entry is shifted by `-1/v` so each
/// position sums to zero.
pub fn one_hot(features: &[u32], v: usize, centered: bool) -> Vec<f64> {
    let mut out = vec![0.0; features.len() * v];
    one_hot_into(features, v, centered, &mut out);
    out
}

/// Writes the encoding of `features` into `out` (length `features.len()·v`).
pub fn one_hot_into(features: &[u32], v: usize, centered: bool, out: &mut [f64]) {
    let shift = if centered { 1.0 / v as f64 } else { 0.0 };
    out.fill(-shift);
    for (i, &x) in features.iter().enumerate() {
        out[i * v + x as usize] += 1.0;
    }
}

/// Row-major batch encoding, one row of `d·v` values per datum.
pub fn encode_batch(data: &[Datum], v: usize, centered: bool) -> Vec<f64> {
    let width = data.first().map_or(0, |d| d.features.len() * v);
    let mut out = vec![0.0; data.len() * width];
    for (d, row) in data.iter().zip(out.chunks_mut(width.max(1))) {
        one_hot_into(&d.features, v, centered, row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_rows_sum_to_zero() {
        let x = one_hot(&[2, 0, 1], 3, true);
        for pos in x.chunks(3) {
            assert!(pos.iter().sum::<f64>().abs() < 1e-15);
        }
        assert_eq!(one_hot(&[1], 2, false), vec![0.0, 1.0]);
    }

    #[test]
    fn batch_layout() {
        let data = vec![
            Datum { label: 0, features: vec![0, 1] },
            Datum { label: 1, features: vec![1, 1] },
        ];
        assert_eq!(encode_batch(&data, 2, false), vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }
}
