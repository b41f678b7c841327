//! Sobol' sequence in base 2 with Gray-code ordering.
//!
//! Dimension 1 is the van der Corput sequence; dimensions 2..=64 use the
//! Joe-Kuo primitive polynomials and initial direction numbers
//! (`new-joe-kuo-6`), which satisfy Sobol's Property A over that range.

use crate::error::{Error, Result};

/// Binary digits carried by every coordinate.
pub const SOBOL_BITS: usize = 32;

/// Largest dimension covered by the embedded table.
pub const MAX_SOBOL_DIMENSION: usize = DIRECTION_TABLE.len() + 1;

pub(crate) struct Poly {
    pub degree: u32,
    /// Interior polynomial coefficients a_1..a_{s-1}, most significant first.
    pub coeffs: u32,
    pub init: &'static [u32],
}

/// Direction numbers for one dimension, left-aligned in a `u32`
/// (`v[j]` is the j-th direction number times 2^32).
pub type DirectionVector = [u32; SOBOL_BITS];

pub(crate) fn direction_vector(dim: usize) -> Result<DirectionVector> {
    if dim == 0 || dim > MAX_SOBOL_DIMENSION {
        return Err(Error::UnsupportedDimension {
            requested: dim,
            max: MAX_SOBOL_DIMENSION,
        });
    }
    let mut v = [0u32; SOBOL_BITS];
    if dim == 1 {
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = 1u32 << (31 - j);
        }
        return Ok(v);
    }
    let poly = &DIRECTION_TABLE[dim - 2];
    let s = poly.degree as usize;
    for (j, &m) in poly.init.iter().enumerate() {
        v[j] = m << (31 - j);
    }
    for j in s..SOBOL_BITS {
        let mut x = v[j - s] ^ (v[j - s] >> s);
        for k in 1..s {
            if (poly.coeffs >> (s - 1 - k)) & 1 == 1 {
                x ^= v[j - k];
            }
        }
        v[j] = x;
    }
    Ok(v)
}

/// An unscrambled Sobol' generator over a fixed number of dimensions.
///
/// Points are produced by index (no internal state), so a generator can be
/// shared freely between threads.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<DirectionVector>,
}

impl SobolSequence {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("Sobol dimension must be positive".into()));
        }
        let directions = (1..=dimension)
            .map(direction_vector)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { directions })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[DirectionVector] {
        &self.directions
    }

    /// Digit words of the raw point `index` (index 0 is the origin).
    pub fn point_bits(&self, index: u32, out: &mut [u32]) {
        digits_of(&self.directions, index, out);
    }

    /// Raw point `index` as floating-point coordinates in [0, 1).
    pub fn raw_point(&self, index: u32) -> Vec<f64> {
        let mut bits = vec![0u32; self.dimension()];
        self.point_bits(index, &mut bits);
        bits.into_iter().map(bits_to_unit).collect()
    }
}

/// XOR of the direction numbers selected by the Gray code of `index`.
#[inline]
pub(crate) fn digits_of(directions: &[DirectionVector], index: u32, out: &mut [u32]) {
    let gray = index ^ (index >> 1);
    for (o, v) in out.iter_mut().zip(directions) {
        let mut g = gray;
        let mut x = 0u32;
        while g != 0 {
            let j = g.trailing_zeros() as usize;
            x ^= v[j];
            g &= g - 1;
        }
        *o = x;
    }
}

#[inline]
pub(crate) fn bits_to_unit(bits: u32) -> f64 {
    bits as f64 * (1.0 / 4_294_967_296.0)
}

/// The `index`-th point of the unscrambled sequence, skipping the origin:
/// index 0 is (0.5, ..., 0.5).
pub fn sobol_point(index: u32, dimension: usize) -> Result<Vec<f64>> {
    let seq = SobolSequence::new(dimension)?;
    let raw = index
        .checked_add(1)
        .ok_or_else(|| Error::Config("Sobol index overflow".into()))?;
    Ok(seq.raw_point(raw))
}

#[rustfmt::skip]
pub(crate) static DIRECTION_TABLE: [Poly; 63] = [
    Poly { degree: 1, coeffs: 0, init: &[1] },
    Poly { degree: 2, coeffs: 1, init: &[1, 3] },
    Poly { degree: 3, coeffs: 1, init: &[1, 3, 1] },
    Poly { degree: 3, coeffs: 2, init: &[1, 1, 1] },
    Poly { degree: 4, coeffs: 1, init: &[1, 1, 3, 3] },
    Poly { degree: 4, coeffs: 4, init: &[1, 3, 5, 13] },
    Poly { degree: 5, coeffs: 2, init: &[1, 1, 5, 5, 17] },
    Poly { degree: 5, coeffs: 4, init: &[1, 1, 5, 5, 5] },
    Poly { degree: 5, coeffs: 7, init: &[1, 1, 7, 11, 19] },
    Poly { degree: 5, coeffs: 11, init: &[1, 1, 5, 1, 1] },
    Poly { degree: 5, coeffs: 13, init: &[1, 1, 1, 3, 11] },
    Poly { degree: 5, coeffs: 14, init: &[1, 3, 5, 5, 31] },
    Poly { degree: 6, coeffs: 1, init: &[1, 3, 3, 9, 7, 49] },
    Poly { degree: 6, coeffs: 13, init: &[1, 1, 1, 15, 21, 21] },
    Poly { degree: 6, coeffs: 16, init: &[1, 3, 1, 13, 27, 49] },
    Poly { degree: 6, coeffs: 19, init: &[1, 1, 1, 15, 7, 5] },
    Poly { degree: 6, coeffs: 22, init: &[1, 3, 1, 15, 13, 25] },
    Poly { degree: 6, coeffs: 25, init: &[1, 1, 5, 5, 19, 61] },
    Poly { degree: 7, coeffs: 1, init: &[1, 3, 7, 11, 23, 15, 103] },
    Poly { degree: 7, coeffs: 4, init: &[1, 3, 7, 13, 13, 15, 69] },
    Poly { degree: 7, coeffs: 7, init: &[1, 1, 3, 13, 7, 35, 63] },
    Poly { degree: 7, coeffs: 8, init: &[1, 3, 5, 9, 1, 25, 53] },
    Poly { degree: 7, coeffs: 14, init: &[1, 3, 1, 13, 9, 35, 107] },
    Poly { degree: 7, coeffs: 19, init: &[1, 3, 1, 5, 27, 61, 31] },
    Poly { degree: 7, coeffs: 21, init: &[1, 1, 5, 11, 19, 41, 61] },
    Poly { degree: 7, coeffs: 28, init: &[1, 3, 5, 3, 3, 13, 69] },
    Poly { degree: 7, coeffs: 31, init: &[1, 1, 7, 13, 1, 19, 1] },
    Poly { degree: 7, coeffs: 32, init: &[1, 3, 7, 5, 13, 19, 59] },
    Poly { degree: 7, coeffs: 37, init: &[1, 1, 3, 9, 25, 29, 41] },
    Poly { degree: 7, coeffs: 41, init: &[1, 3, 5, 13, 23, 1, 55] },
    Poly { degree: 7, coeffs: 42, init: &[1, 3, 7, 3, 13, 59, 17] },
    Poly { degree: 7, coeffs: 50, init: &[1, 3, 1, 3, 5, 53, 69] },
    Poly { degree: 7, coeffs: 55, init: &[1, 1, 5, 5, 23, 33, 13] },
    Poly { degree: 7, coeffs: 56, init: &[1, 1, 7, 7, 1, 61, 123] },
    Poly { degree: 7, coeffs: 59, init: &[1, 1, 7, 9, 13, 61, 49] },
    Poly { degree: 7, coeffs: 62, init: &[1, 3, 3, 5, 3, 55, 33] },
    Poly { degree: 8, coeffs: 14, init: &[1, 3, 1, 15, 31, 13, 49, 245] },
    Poly { degree: 8, coeffs: 21, init: &[1, 3, 5, 15, 31, 59, 63, 97] },
    Poly { degree: 8, coeffs: 22, init: &[1, 3, 1, 11, 11, 11, 77, 249] },
    Poly { degree: 8, coeffs: 38, init: &[1, 3, 1, 11, 27, 43, 71, 9] },
    Poly { degree: 8, coeffs: 47, init: &[1, 1, 7, 15, 21, 11, 81, 45] },
    Poly { degree: 8, coeffs: 49, init: &[1, 3, 7, 3, 25, 31, 65, 79] },
    Poly { degree: 8, coeffs: 50, init: &[1, 3, 1, 1, 19, 11, 3, 205] },
    Poly { degree: 8, coeffs: 52, init: &[1, 1, 5, 9, 19, 21, 29, 157] },
    Poly { degree: 8, coeffs: 56, init: &[1, 3, 7, 11, 1, 33, 89, 185] },
    Poly { degree: 8, coeffs: 67, init: &[1, 3, 3, 3, 15, 9, 79, 71] },
    Poly { degree: 8, coeffs: 70, init: &[1, 3, 7, 11, 15, 39, 119, 27] },
    Poly { degree: 8, coeffs: 84, init: &[1, 1, 3, 1, 11, 31, 97, 225] },
    Poly { degree: 8, coeffs: 97, init: &[1, 1, 1, 3, 23, 43, 57, 177] },
    Poly { degree: 8, coeffs: 103, init: &[1, 3, 7, 7, 17, 17, 37, 71] },
    Poly { degree: 8, coeffs: 115, init: &[1, 3, 1, 5, 27, 63, 123, 213] },
    Poly { degree: 8, coeffs: 122, init: &[1, 1, 3, 5, 11, 43, 53, 133] },
    Poly { degree: 9, coeffs: 8, init: &[1, 3, 5, 5, 29, 17, 47, 173, 479] },
    Poly { degree: 9, coeffs: 13, init: &[1, 3, 3, 11, 3, 1, 109, 9, 69] },
    Poly { degree: 9, coeffs: 16, init: &[1, 1, 1, 5, 17, 39, 23, 5, 343] },
    Poly { degree: 9, coeffs: 22, init: &[1, 3, 1, 5, 25, 15, 31, 103, 499] },
    Poly { degree: 9, coeffs: 25, init: &[1, 1, 1, 11, 11, 17, 63, 105, 183] },
    Poly { degree: 9, coeffs: 44, init: &[1, 1, 5, 11, 9, 29, 97, 231, 363] },
    Poly { degree: 9, coeffs: 47, init: &[1, 1, 5, 15, 19, 45, 41, 7, 383] },
    Poly { degree: 9, coeffs: 52, init: &[1, 3, 7, 7, 31, 19, 83, 137, 221] },
    Poly { degree: 9, coeffs: 55, init: &[1, 1, 1, 3, 23, 15, 111, 223, 83] },
    Poly { degree: 9, coeffs: 59, init: &[1, 1, 5, 13, 31, 15, 55, 25, 161] },
    Poly { degree: 9, coeffs: 62, init: &[1, 1, 3, 13, 25, 47, 39, 87, 257] },
];

#[cfg(test)]
mod tests {
    use super::*;

    /// Rank over GF(2) of the leading `d` columns of the given bit rows.
    fn gf2_rank(rows: &[u64], d: usize) -> usize {
        let mut rows = rows.to_vec();
        let mut rank = 0;
        for c in 0..d {
            let Some(p) = (rank..rows.len()).find(|&i| (rows[i] >> c) & 1 == 1) else {
                continue;
            };
            rows.swap(rank, p);
            for i in 0..rows.len() {
                if i != rank && (rows[i] >> c) & 1 == 1 {
                    rows[i] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank
    }

    /// Leading digits of the first 64 direction numbers, from the integer
    /// recurrence on m_j (independent of the u32 left-aligned path).
    fn leading_digit_row(dim: usize) -> u64 {
        const J: usize = 64;
        let mut m = [0u128; J];
        if dim == 1 {
            (0..J).for_each(|j| m[j] = 1);
        } else {
            let p = &DIRECTION_TABLE[dim - 2];
            let s = p.degree as usize;
            for (j, &x) in p.init.iter().enumerate() {
                m[j] = x as u128;
            }
            for j in s..J {
                let mut x = m[j - s] ^ (m[j - s] << s);
                for k in 1..s {
                    if (p.coeffs >> (s - 1 - k)) & 1 == 1 {
                        x ^= m[j - k] << k;
                    }
                }
                m[j] = x;
            }
        }
        // m_j < 2^j; its leading binary digit as a fraction is bit j-1.
        (0..J).fold(0u64, |acc, j| acc | ((((m[j] >> j) & 1) as u64) << j))
    }

    #[test]
    fn property_a_holds_up_to_dimension_64() {
        let rows: Vec<u64> = (1..=64).map(leading_digit_row).collect();
        for d in 1..=64 {
            assert_eq!(gf2_rank(&rows[..d], d), d, "Property A fails at dimension {d}");
        }
    }

    #[test]
    fn leading_digits_match_generator() {
        for dim in 1..=MAX_SOBOL_DIMENSION {
            let v = direction_vector(dim).unwrap();
            let row = leading_digit_row(dim);
            for (j, vj) in v.iter().enumerate() {
                assert_eq!((vj >> 31) as u64, (row >> j) & 1, "dim {dim}, digit {j}");
            }
        }
    }

    #[test]
    fn first_dimension_prefix() {
        let pts: Vec<f64> = (0..4).map(|i| sobol_point(i, 1).unwrap()[0]).collect();
        assert_eq!(pts, vec![0.5, 0.75, 0.25, 0.375]);
    }

    #[test]
    fn first_point_is_half_everywhere() {
        let p = sobol_point(0, 64).unwrap();
        assert!(p.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn coordinates_are_dyadic() {
        for i in 0..200 {
            let x = sobol_point(i, 1).unwrap()[0];
            let scaled = x * 4_294_967_296.0;
            assert_eq!(scaled, scaled.trunc());
        }
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(
            sobol_point(0, MAX_SOBOL_DIMENSION + 1).unwrap_err(),
            Error::UnsupportedDimension {
                requested: MAX_SOBOL_DIMENSION + 1,
                max: MAX_SOBOL_DIMENSION
            }
        );
    }

    #[test]
    fn property_a_box_counts_in_low_dimensions() {
        // Directly count: the first 2^d points hit every half-cube box once.
        for d in 1..=12usize {
            let seq = SobolSequence::new(d).unwrap();
            let mut seen = vec![false; 1 << d];
            let mut bits = vec![0u32; d];
            for i in 0..(1u32 << d) {
                seq.point_bits(i, &mut bits);
                let cell = bits
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (c, b)| acc | (((b >> 31) as usize) << c));
                assert!(!seen[cell], "dimension {d}: box {cell} hit twice");
                seen[cell] = true;
            }
        }
    }

    #[test]
    fn two_dimensional_net() {
        // Points 0..2^k of dims (1,2) form a (0,k,2)-net.
        let seq = SobolSequence::new(2).unwrap();
        for k in 1..=11u32 {
            for a in 0..=k {
                let b = k - a;
                let mut counts = vec![0u32; 1 << k];
                let mut bits = [0u32; 2];
                for i in 0..(1u32 << k) {
                    seq.point_bits(i, &mut bits);
                    let ia = if a == 0 { 0 } else { (bits[0] >> (32 - a)) as usize };
                    let ib = if b == 0 { 0 } else { (bits[1] >> (32 - b)) as usize };
                    counts[(ia << b) | ib] += 1;
                }
                assert!(counts.iter().all(|&c| c == 1), "k={k} a={a}");
            }
        }
    }
}
