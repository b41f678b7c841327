//! Matoušek affine scrambling with a random digital shift.
//!
//! Each dimension gets a random lower-triangular binary matrix with unit
//! diagonal acting on the 32 leading binary digits, followed by an XOR with a
//! random shift word. Both operations are linear over GF(2), so the scrambled
//! net is generated directly from scrambled direction numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sobol::{bits_to_unit, digits_of, DirectionVector, SobolSequence, SOBOL_BITS};

/// Lower clamp applied after scrambling; the upper end is 1 - 2^-53.
pub const UNIT_EPS: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline]
pub fn clamp_unit(u: f64) -> f64 {
    u.clamp(UNIT_EPS, 1.0 - UNIT_EPS)
}

/// Per-dimension scrambling matrices and shifts.
#[derive(Debug, Clone)]
pub struct AffineScramble {
    /// `columns[d][j]` is column j of the matrix for dimension d, with row i
    /// stored at bit 31 - i.
    columns: Vec<[u32; SOBOL_BITS]>,
    shifts: Vec<u32>,
}

impl AffineScramble {
    pub fn identity(dimension: usize) -> Self {
        let mut col = [0u32; SOBOL_BITS];
        for (j, c) in col.iter_mut().enumerate() {
            *c = 1 << (31 - j);
        }
        Self {
            columns: vec![col; dimension],
            shifts: vec![0; dimension],
        }
    }

    pub fn from_seed(dimension: usize, seed: u64) -> Self {
        Self::from_rng(dimension, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn from_rng<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Self {
        let mut columns = Vec::with_capacity(dimension);
        let mut shifts = Vec::with_capacity(dimension);
        for _ in 0..dimension {
            let mut col = [0u32; SOBOL_BITS];
            for (j, c) in col.iter_mut().enumerate() {
                let diag = 1u32 << (31 - j);
                let below = diag.wrapping_sub(1);
                *c = diag | (rng.random::<u32>() & below);
            }
            columns.push(col);
            shifts.push(rng.random::<u32>());
        }
        Self { columns, shifts }
    }

    pub fn dimension(&self) -> usize {
        self.shifts.len()
    }

    /// Matrix part only: L·x over the digit vector of `x`.
    #[inline]
    pub fn apply_matrix(&self, dim: usize, x: u32) -> u32 {
        let cols = &self.columns[dim];
        let mut y = 0u32;
        let mut bits = x;
        while bits != 0 {
            let pos = 31 - bits.leading_zeros() as usize;
            y ^= cols[31 - pos];
            bits &= !(1u32 << pos);
        }
        y
    }

    #[inline]
    pub fn apply(&self, dim: usize, x: u32) -> u32 {
        self.apply_matrix(dim, x) ^ self.shifts[dim]
    }

    /// Scramble a single point given as unit coordinates (truncated to 32
    /// digits). The result is clamped away from 0 and 1.
    pub fn apply_point(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .enumerate()
            .map(|(d, &u)| {
                let bits = (u * 4_294_967_296.0).floor().clamp(0.0, u32::MAX as f64) as u32;
                clamp_unit(bits_to_unit(self.apply(d, bits)))
            })
            .collect()
    }
}

/// Scramble every point of a stream with the matrices drawn from `seed`.
pub fn scramble(points: &[Vec<f64>], seed: u64) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    let s = AffineScramble::from_seed(dim, seed);
    points.iter().map(|p| s.apply_point(p)).collect()
}

/// A scrambled Sobol' generator; points are produced by index.
#[derive(Debug, Clone)]
pub struct ScrambledSobol {
    directions: Vec<DirectionVector>,
    shifts: Vec<u32>,
}

impl ScrambledSobol {
    pub fn new(sequence: &SobolSequence, scramble: &AffineScramble) -> Self {
        assert_eq!(sequence.dimension(), scramble.dimension());
        let directions = sequence
            .directions()
            .iter()
            .enumerate()
            .map(|(d, v)| {
                let mut w = [0u32; SOBOL_BITS];
                for (wj, &vj) in w.iter_mut().zip(v) {
                    *wj = scramble.apply_matrix(d, vj);
                }
                w
            })
            .collect();
        Self {
            directions,
            shifts: scramble.shifts.clone(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.shifts.len()
    }

    /// Writes the first `out.len()` coordinates of point `index`.
    #[inline]
    pub fn fill(&self, index: u32, out: &mut [f64]) {
        let mut bits = [0u32; 64];
        let n = out.len();
        let bits = &mut bits[..n];
        digits_of(&self.directions[..n], index, bits);
        for ((o, b), s) in out.iter_mut().zip(bits.iter()).zip(&self.shifts) {
            *o = clamp_unit(bits_to_unit(b ^ s));
        }
    }

    /// Calls `sink(i, coords)` for points `0..n` in order, stepping the Gray
    /// code instead of recomputing every point from its index.
    pub fn for_each_point(&self, n: u32, mut sink: impl FnMut(u32, &[f64])) {
        let d = self.dimension();
        let mut state = vec![0u32; d];
        let mut coords = vec![0.0; d];
        for i in 0..n {
            if i > 0 {
                let j = i.trailing_zeros() as usize;
                for (s, v) in state.iter_mut().zip(&self.directions) {
                    *s ^= v[j];
                }
            }
            for ((c, s), sh) in coords.iter_mut().zip(&state).zip(&self.shifts) {
                *c = clamp_unit(bits_to_unit(s ^ sh));
            }
            sink(i, &coords);
        }
    }

    pub fn point(&self, index: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.fill(index, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_points(dim: usize, n: u32) -> Vec<Vec<f64>> {
        let seq = SobolSequence::new(dim).unwrap();
        (0..n).map(|i| seq.raw_point(i)).collect()
    }

    #[test]
    fn deterministic_for_a_seed() {
        let pts = raw_points(5, 64);
        assert_eq!(scramble(&pts, 7), scramble(&pts, 7));
        assert_ne!(scramble(&pts, 7), scramble(&pts, 8));
    }

    #[test]
    fn identity_leaves_points_unchanged() {
        let pts = raw_points(4, 32);
        let id = AffineScramble::identity(4);
        for p in &pts[1..] {
            assert_eq!(&id.apply_point(p), p);
        }
    }

    #[test]
    fn direct_and_direction_number_routes_agree() {
        let seq = SobolSequence::new(6).unwrap();
        let s = AffineScramble::from_seed(6, 99);
        let fast = ScrambledSobol::new(&seq, &s);
        for i in 0..300 {
            let slow = s.apply_point(&seq.raw_point(i));
            assert_eq!(fast.point(i), slow, "index {i}");
        }
    }

    #[test]
    fn sequential_walk_matches_indexed_points() {
        let seq = SobolSequence::new(7).unwrap();
        let gen = ScrambledSobol::new(&seq, &AffineScramble::from_seed(7, 3));
        let mut seen = 0;
        gen.for_each_point(517, |i, p| {
            assert_eq!(p, gen.point(i).as_slice());
            seen += 1;
        });
        assert_eq!(seen, 517);
    }

    #[test]
    fn coordinate_means_near_half() {
        let seq = SobolSequence::new(50).unwrap();
        let gen = ScrambledSobol::new(&seq, &AffineScramble::from_seed(50, 2024));
        let n = 2048;
        let mut sums = vec![0.0; 50];
        for i in 0..n {
            for (s, x) in sums.iter_mut().zip(gen.point(i)) {
                *s += x;
            }
        }
        for s in sums {
            assert!((s / n as f64 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn uniformity_bound_holds_for_powers_of_two() {
        let seq = SobolSequence::new(20).unwrap();
        let gen = ScrambledSobol::new(&seq, &AffineScramble::from_seed(20, 5));
        for k in 4..=11u32 {
            let n = 1u32 << k;
            let bound = 3.0 / (12.0 * n as f64).sqrt();
            let mut sums = vec![0.0; 20];
            for i in 0..n {
                for (s, x) in sums.iter_mut().zip(gen.point(i)) {
                    *s += x;
                }
            }
            for s in sums {
                assert!((s / n as f64 - 0.5).abs() <= bound);
            }
        }
    }

    #[test]
    fn scrambling_preserves_net_counts() {
        let seq = SobolSequence::new(2).unwrap();
        let gen = ScrambledSobol::new(&seq, &AffineScramble::from_seed(2, 11));
        let k = 10u32;
        for a in 0..=k {
            let b = k - a;
            let mut counts = vec![0u32; 1 << k];
            for i in 0..(1u32 << k) {
                let p = gen.point(i);
                let ia = (p[0] * (1u64 << a) as f64) as usize;
                let ib = (p[1] * (1u64 << b) as f64) as usize;
                counts[(ia << b) | ib] += 1;
            }
            assert!(counts.iter().all(|&c| c == 1), "a={a}");
        }
    }

    #[test]
    fn clamp_keeps_endpoints_open() {
        assert_eq!(clamp_unit(0.0), UNIT_EPS);
        assert!(clamp_unit(1.0) < 1.0);
    }
}
