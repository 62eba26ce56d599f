//! Dense integer codes for s-tuples.
//!
//! A tuple `(x_1, ..., x_s)` over an alphabet of size `a` is stored as the
//! base-`a` number with `x_1` as the most significant digit.

/// Code of a tuple over an alphabet of size `alphabet`.
pub fn encode(symbols: &[usize], alphabet: usize) -> usize {
    symbols.iter().fold(0, |acc, &x| acc * alphabet + x)
}

/// Inverse of [`encode`].
pub fn decode(mut code: usize, alphabet: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = code % alphabet;
        code /= alphabet;
    }
    out
}

/// Symbol at position `pos` of the tuple with the given code.
pub fn digit(code: usize, alphabet: usize, len: usize, pos: usize) -> usize {
    let shift = len - 1 - pos;
    (code / alphabet.pow(shift as u32)) % alphabet
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn encode_decode_roundtrip(alphabet in 2usize..20, len in 1usize..5, seed in any::<u64>()) {
            let total = alphabet.pow(len as u32);
            let code = (seed % total as u64) as usize;
            let t = decode(code, alphabet, len);
            prop_assert_eq!(encode(&t, alphabet), code);
            for (pos, &x) in t.iter().enumerate() {
                prop_assert_eq!(digit(code, alphabet, len, pos), x);
            }
        }
    }

    #[test]
    fn first_symbol_is_most_significant() {
        assert_eq!(encode(&[1, 0], 3), 3);
        assert_eq!(decode(5, 3, 2), vec![1, 2]);
    }
}
