//! Shared oracles and helpers for the integration tests.
#![allow(dead_code)]

use qmc_malliavin::estimator::{mean_and_stderr, EstimateReport};
use qmc_malliavin::market::{simulate_path, MarketConfig, PathBundle, VolLoadings};
use qmc_malliavin::payoffs::PayoffSpec;
use qmc_malliavin::qmc::{normal_matrix, QmcConfig, SamplingMode, Stream};
use qmc_malliavin::weights::{exotic_blocks, weight_set};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

fn d1_d2(x: f64, k: f64, r: f64, sigma: f64, t: f64) -> (f64, f64) {
    let d1 = ((x / k).ln() + (r + 0.5 * sigma * sigma) * t) / (sigma * t.sqrt());
    (d1, d1 - sigma * t.sqrt())
}

/// Black-Scholes Delta of a European call.
pub fn bs_call_delta(x: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    std_normal().cdf(d1_d2(x, k, r, sigma, t).0)
}

/// Black-Scholes Delta of a cash-or-nothing digital call paying 1.
pub fn bs_digital_delta(x: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    let d2 = d1_d2(x, k, r, sigma, t).1;
    (-r * t).exp() * std_normal().pdf(d2) / (x * sigma * t.sqrt())
}

/// `|a - b| <= 3 sqrt(ea^2 + eb^2)`.
pub fn within_3_sigma(a: f64, ea: f64, b: f64, eb: f64) -> bool {
    (a - b).abs() <= 3.0 * (ea * ea + eb * eb).sqrt()
}

pub fn qmc(d: usize, points: usize, reps: usize, seed: u64) -> QmcConfig {
    QmcConfig {
        nominal_dimension: d,
        points_per_replication: points,
        replications: reps,
        lss_block_dimension: d.min(50),
        seed,
        mode: SamplingMode::ScrambledSobol,
    }
}

/// All paths of one replication, without the orthogonal transformation.
pub fn paths(market: &MarketConfig, cfg: &QmcConfig, rep: u64) -> Vec<PathBundle> {
    let s = VolLoadings::new(market).unwrap();
    let d = market.dimension();
    let z = normal_matrix(cfg, Stream::Main, rep).unwrap();
    z.chunks(d).map(|p| simulate_path(market, &s, None, p).unwrap()).collect()
}

/// Per-component replication mean and standard error of the bare weights.
pub fn weight_means(spec: &PayoffSpec, market: &MarketConfig, cfg: &QmcConfig) -> Vec<(f64, f64)> {
    let s = VolLoadings::new(market).unwrap();
    let m = market.assets();
    let mut per_rep = vec![Vec::new(); m];
    for rep in 0..cfg.replications as u64 {
        let mut sums = vec![0.0; m];
        let ps = paths(market, cfg, rep);
        for b in &ps {
            let w = weight_set(spec, b, &s, market).unwrap();
            for (acc, v) in sums.iter_mut().zip(&w.skorohod) {
                *acc += v;
            }
        }
        for (k, v) in sums.iter().enumerate() {
            per_rep[k].push(v / ps.len() as f64);
        }
    }
    per_rep.iter().map(|xs| mean_and_stderr(xs)).collect()
}

/// Largest relative mismatch between the exotic jets' derivative samples
/// (and their time integrals) and one-sided bumps of the Brownian increments.
pub fn exotic_jet_bump_error(market: &MarketConfig, z: &[f64]) -> f64 {
    let s = VolLoadings::new(market).unwrap();
    let m = market.assets();
    let n = market.steps();
    let times = &market.monitoring_times;
    let base = simulate_path(market, &s, None, z).unwrap();
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for k in 0..m {
        let e = exotic_blocks(&base, &s, market, k).unwrap();
        let jets = |b: &qmc_malliavin::weights::ExoticBlocks| {
            [&b.a1, &b.a2, &b.b1, &b.b2, &b.g, &b.t, &b.u1, &b.u2].map(|j| j.clone())
        };
        let base_jets = jets(&e);
        let mut bumped_integral = [0.0; 8];
        for l in 0..n {
            let dt = times[l] - if l == 0 { 0.0 } else { times[l - 1] };
            let mut zb = z.to_vec();
            zb[l * m + k] += h / dt.sqrt();
            let up = exotic_blocks(&simulate_path(market, &s, None, &zb).unwrap(), &s, market, k).unwrap();
            for (idx, (j0, j1)) in base_jets.iter().zip(jets(&up).iter()).enumerate() {
                let fd = (j1.value - j0.value) / h;
                let want = j0.d[l];
                let scale = want.abs().max(1e-6 * j0.value.abs());
                worst = worst.max((fd - want).abs() / scale);
                bumped_integral[idx] += fd * dt;
            }
        }
        for (j0, fd_int) in base_jets.iter().zip(bumped_integral) {
            let want = j0.integral(times);
            let scale = want.abs().max(1e-6 * j0.value.abs());
            worst = worst.max((fd_int - want).abs() / scale);
        }
    }
    worst
}

/// Bitwise equality of everything but wall time.
pub fn same_report(a: &EstimateReport, b: &EstimateReport) -> bool {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    bits(&a.delta) == bits(&b.delta)
        && bits(&a.stderr) == bits(&b.stderr)
        && a.replication_means.len() == b.replication_means.len()
        && a.replication_means.iter().zip(&b.replication_means).all(|(x, y)| bits(x) == bits(y))
        && a.rejected_paths == b.rejected_paths
        && a.path_simulations == b.path_simulations
        && a.price.to_bits() == b.price.to_bits()
}
