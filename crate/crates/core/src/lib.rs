//! Malliavin-weight estimators of multi-asset Deltas under randomized
//! quasi-Monte Carlo.
//!
//! The pipeline is: scrambled Sobol' blocks assembled by Latin Supercube
//! Sampling ([`qmc`]), an optional orthogonal transformation of the normals
//! ([`lt`]), lognormal path simulation ([`market`]), payoffs
//! ([`payoffs`]) and per-component Skorohod weights ([`weights`]), combined
//! across replications by [`estimator`].

pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod jet;
pub mod lt;
pub mod market;
pub mod payoffs;
pub mod qmc;
pub mod weights;

pub use error::{Error, Result};
