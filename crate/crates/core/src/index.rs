//! Lexicographic indexing of Σⁿ. Coordinate x₁ is the most significant digit,
//! so the block of indices sharing a prefix of length i is contiguous with
//! length a^(n-i). All modules rely on this layout.

use crate::error::{Error, Result};

/// Hard cap on table sizes: a^n must stay within 2^24 entries.
pub const MAX_TABLE: usize = 1 << 24;

/// a^n with the desk-scale cap enforced.
pub fn table_len(n: usize, a: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..n {
        len = len
            .checked_mul(a)
            .filter(|&l| l <= MAX_TABLE)
            .ok_or(Error::DimensionCap { n, a })?;
    }
    Ok(len)
}

/// a^n without the cap (for small exponents known to fit).
pub fn pow(a: usize, n: usize) -> usize {
    a.pow(n as u32)
}

pub fn pack(digits: &[usize], a: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * a + d)
}

pub fn unpack_into(mut idx: usize, a: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % a;
        idx /= a;
    }
}

pub fn unpack(idx: usize, n: usize, a: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    unpack_into(idx, a, &mut out);
    out
}

/// Digit expansion of every point of Σⁿ, row-major (point index × coordinate).
pub struct DigitTable {
    pub n: usize,
    digits: Vec<usize>,
}

impl DigitTable {
    pub fn new(n: usize, a: usize) -> Result<Self> {
        let len = table_len(n, a)?;
        let mut digits = vec![0; len * n];
        for idx in 0..len {
            unpack_into(idx, a, &mut digits[idx * n..(idx + 1) * n]);
        }
        Ok(DigitTable { n, digits })
    }

    #[inline]
    pub fn row(&self, idx: usize) -> &[usize] {
        &self.digits[idx * self.n..(idx + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        if self.n == 0 {
            1
        } else {
            self.digits.len() / self.n
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_unpack_roundtrip() {
        for idx in 0..27 {
            assert_eq!(pack(&unpack(idx, 3, 3), 3), idx);
        }
    }

    #[test]
    fn lexicographic_order_is_most_significant_first() {
        // (1,0) on {0,1}^2 must map to index 2.
        assert_eq!(pack(&[1, 0], 2), 2);
        assert_eq!(unpack(2, 2, 2), vec![1, 0]);
    }

    #[test]
    fn cap_enforced() {
        assert!(table_len(25, 2).is_err());
        assert!(table_len(24, 2).is_ok());
        assert!(table_len(2, 4096).is_ok());
        assert!(table_len(3, 4096).is_err());
    }
}
