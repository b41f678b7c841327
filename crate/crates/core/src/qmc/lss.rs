//! Latin Supercube Sampling: a high-dimensional point set assembled from
//! independently scrambled low-dimensional blocks whose run orders are
//! independently permuted.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scramble::{AffineScramble, ScrambledSobol};
use super::sobol::SobolSequence;
use crate::error::{config_err, Result};

/// Block layout plus one scrambled generator and run-order permutation per
/// block, for a fixed number of points.
#[derive(Debug, Clone)]
pub struct LatinSupercube {
    nominal_dimension: usize,
    block_dimension: usize,
    blocks: Vec<ScrambledSobol>,
    permutations: Vec<Vec<u32>>,
}

/// Number of blocks needed to cover `nominal` dimensions.
pub fn block_count(nominal: usize, block: usize) -> usize {
    nominal.div_ceil(block)
}

impl LatinSupercube {
    /// Draws every block's scrambling and permutation from one seeded stream.
    pub fn new(nominal_dimension: usize, block_dimension: usize, points: u32, seed: u64) -> Result<Self> {
        if block_dimension == 0 || block_dimension > nominal_dimension {
            return Err(config_err(format!(
                "lss_block_dimension {block_dimension} must be in 1..={nominal_dimension}"
            )));
        }
        let sequence = SobolSequence::new(block_dimension)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nblocks = block_count(nominal_dimension, block_dimension);
        let mut blocks = Vec::with_capacity(nblocks);
        let mut permutations = Vec::with_capacity(nblocks);
        for _ in 0..nblocks {
            let scramble = AffineScramble::from_rng(block_dimension, &mut rng);
            blocks.push(ScrambledSobol::new(&sequence, &scramble));
            let mut perm: Vec<u32> = (0..points).collect();
            perm.shuffle(&mut rng);
            permutations.push(perm);
        }
        Ok(Self {
            nominal_dimension,
            block_dimension,
            blocks,
            permutations,
        })
    }

    pub fn nominal_dimension(&self) -> usize {
        self.nominal_dimension
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn points(&self) -> usize {
        self.permutations.first().map_or(0, Vec::len)
    }

    /// Dimensions actually taken from block `q` (the last may be truncated).
    pub fn block_width(&self, q: usize) -> usize {
        let start = q * self.block_dimension;
        self.block_dimension.min(self.nominal_dimension - start)
    }

    /// Row-major `points × nominal_dimension` matrix of unit coordinates.
    /// Point `p` of block `q` lands in row `permutations[q][p]`.
    pub fn fill(&self, out: &mut [f64]) {
        let n = self.points();
        let d = self.nominal_dimension;
        assert_eq!(out.len(), n * d);
        for (q, (gen, perm)) in self.blocks.iter().zip(&self.permutations).enumerate() {
            let start = q * self.block_dimension;
            let width = self.block_width(q);
            gen.for_each_point(n as u32, |p, coords| {
                let row = perm[p as usize] as usize;
                out[row * d + start..row * d + start + width].copy_from_slice(&coords[..width]);
            });
        }
    }

    pub fn assemble(&self) -> Vec<Vec<f64>> {
        let d = self.nominal_dimension;
        let mut flat = vec![0.0; self.points() * d];
        self.fill(&mut flat);
        flat.chunks(d).map(<[f64]>::to_vec).collect()
    }
}

/// Concatenate block streams after permuting each block's run order.
///
/// Every entry of `block_streams` must hold the same number of points. The
/// streams are laid side by side until `nominal_dimension` coordinates are
/// filled; the last block is truncated.
pub fn lss_assemble(block_streams: &[Vec<Vec<f64>>], nominal_dimension: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = block_streams.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::with_capacity(nominal_dimension); n];
    let mut filled = 0;
    for stream in block_streams {
        if filled == nominal_dimension {
            break;
        }
        assert_eq!(stream.len(), n, "block streams must have equal length");
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let width = stream.first().map_or(0, Vec::len).min(nominal_dimension - filled);
        let mut rows = vec![0usize; n];
        for (p, &row) in perm.iter().enumerate() {
            rows[row] = p;
        }
        for (row, p) in rows.into_iter().enumerate() {
            out[row].extend_from_slice(&stream[p][..width]);
        }
        filled += width;
    }
    assert_eq!(filled, nominal_dimension, "not enough block dimensions");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_column(points: &[Vec<f64>], c: usize) -> Vec<f64> {
        let mut v: Vec<f64> = points.iter().map(|p| p[c]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn ten_assets_by_64_dates_gives_thirteen_blocks() {
        let lss = LatinSupercube::new(640, 50, 8, 1).unwrap();
        assert_eq!(lss.block_count(), 13);
        assert_eq!(lss.block_width(12), 40);
        assert_eq!(lss.block_width(0), 50);
        assert_eq!(block_count(640, 50), 13);
    }

    #[test]
    fn single_block_is_a_permutation_of_the_scrambled_net() {
        let lss = LatinSupercube::new(8, 8, 64, 9).unwrap();
        assert_eq!(lss.block_count(), 1);
        let pts = lss.assemble();
        let mut direct = Vec::new();
        lss.blocks[0].for_each_point(64, |_, c| direct.push(c.to_vec()));
        for c in 0..8 {
            assert_eq!(sorted_column(&pts, c), sorted_column(&direct, c));
        }
    }

    #[test]
    fn columns_are_permutations_of_block_columns() {
        let lss = LatinSupercube::new(23, 10, 128, 4).unwrap();
        let pts = lss.assemble();
        for q in 0..lss.block_count() {
            let mut block = Vec::new();
            lss.blocks[q].for_each_point(128, |_, c| block.push(c.to_vec()));
            for j in 0..lss.block_width(q) {
                assert_eq!(sorted_column(&pts, q * 10 + j), sorted_column(&block, j));
            }
        }
    }

    #[test]
    fn rejects_oversized_blocks() {
        assert!(LatinSupercube::new(10, 11, 4, 0).is_err());
        assert!(LatinSupercube::new(10, 0, 4, 0).is_err());
    }

    #[test]
    fn generic_assembly_truncates_and_permutes() {
        let a: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 10.0 + i as f64]).collect();
        let b: Vec<Vec<f64>> = (0..5).map(|i| vec![20.0 + i as f64, 30.0 + i as f64]).collect();
        let out = lss_assemble(&[a.clone(), b], 3, 77);
        assert!(out.iter().all(|p| p.len() == 3));
        // rows of a block stay intact
        for p in &out {
            assert_eq!(p[1] - p[0], 10.0);
        }
        assert_eq!(sorted_column(&out, 2), vec![20.0, 21.0, 22.0, 23.0, 24.0]);
        assert_eq!(out, lss_assemble(&[a.clone(), a.iter().map(|p| vec![p[0] + 20.0, 0.0]).collect()], 3, 77));
    }
}
