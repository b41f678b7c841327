//! Randomized low-discrepancy and pseudo-random point generation.

pub mod lss;
pub mod normal;
pub mod scramble;
pub mod sobol;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use lss::{lss_assemble, LatinSupercube};
pub use normal::{inverse_normal_cdf, normal_cdf, normal_pdf, to_normal};
pub use scramble::{scramble, AffineScramble, ScrambledSobol};
pub use sobol::{sobol_point, SobolSequence, MAX_SOBOL_DIMENSION};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    ScrambledSobol,
    PseudoRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmcConfig {
    pub nominal_dimension: usize,
    pub points_per_replication: usize,
    pub replications: usize,
    pub lss_block_dimension: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl QmcConfig {
    /// 32 replications of 2048 points in blocks of 50 (or fewer) dimensions.
    pub fn standard(nominal_dimension: usize) -> Self {
        Self {
            nominal_dimension,
            points_per_replication: 2048,
            replications: 32,
            lss_block_dimension: nominal_dimension.min(50),
            seed: 20_100_607,
            mode: SamplingMode::ScrambledSobol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nominal_dimension == 0 {
            return Err(config_err("nominal_dimension must be positive"));
        }
        if self.points_per_replication == 0 {
            return Err(config_err("points_per_replication must be at least 1"));
        }
        if self.points_per_replication > u32::MAX as usize {
            return Err(config_err("points_per_replication exceeds 2^32 - 1"));
        }
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        if self.lss_block_dimension == 0 || self.lss_block_dimension > self.nominal_dimension {
            return Err(config_err(format!(
                "lss_block_dimension {} must be in 1..={}",
                self.lss_block_dimension, self.nominal_dimension
            )));
        }
        if self.mode == SamplingMode::ScrambledSobol && self.lss_block_dimension > MAX_SOBOL_DIMENSION {
            return Err(config_err(format!(
                "lss_block_dimension {} exceeds the Sobol table ({MAX_SOBOL_DIMENSION})",
                self.lss_block_dimension
            )));
        }
        Ok(())
    }
}

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Main = 1,
    Pilot = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed split: a pure function of `(master, stream, index)`.
pub fn sub_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream as u64) ^ index)
}

/// Row-major `points × nominal_dimension` matrix of standard normal draws for
/// one replication of the given stream.
pub fn normal_matrix(cfg: &QmcConfig, stream: Stream, replication: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = cfg.points_per_replication;
    let d = cfg.nominal_dimension;
    let seed = sub_seed(cfg.seed, stream, replication);
    let mut out = vec![0.0; n * d];
    match cfg.mode {
        SamplingMode::ScrambledSobol => {
            LatinSupercube::new(d, cfg.lss_block_dimension, n as u32, seed)?.fill(&mut out);
        }
        SamplingMode::PseudoRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for u in out.iter_mut() {
                *u = scramble::clamp_unit(rng.random::<f64>());
            }
        }
    }
    for x in out.iter_mut() {
        *x = inverse_normal_cdf(*x);
    }
    Ok(out)
}
