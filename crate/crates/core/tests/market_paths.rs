//! Path simulation: discounted martingales, correlation, Cholesky.

mod common;

use common::*;
use proptest::prelude::*;
use qmc_malliavin::estimator::mean_and_stderr;
use qmc_malliavin::market::{cholesky, MarketConfig};
use qmc_malliavin::qmc::SamplingMode;
use qmc_malliavin::Error;

#[test]
fn discounted_assets_are_martingales() {
    let mk = MarketConfig::reference(4, 8);
    let cfg = qmc(mk.dimension(), 1024, 16, 51);
    for (j, &t) in mk.monitoring_times.iter().enumerate() {
        for i in 0..4 {
            let reps: Vec<f64> = (0..16)
                .map(|rep| {
                    let ps = paths(&mk, &cfg, rep);
                    ps.iter().map(|b| b.at(i, j)).sum::<f64>() / ps.len() as f64 * (-mk.rate * t).exp()
                })
                .collect();
            let (m, s) = mean_and_stderr(&reps);
            assert!((m - mk.spots[i]).abs() <= 3.0 * s.max(1e-9), "asset {i} date {j}: {m} +- {s}");
        }
    }
}

#[test]
fn log_returns_carry_the_correlation() {
    let mut mk = MarketConfig::reference(3, 1);
    mk.correlation = vec![vec![1.0, 0.6, -0.3], vec![0.6, 1.0, 0.2], vec![-0.3, 0.2, 1.0]];
    let mut cfg = qmc(3, 8192, 1, 52);
    cfg.mode = SamplingMode::PseudoRandom;
    let ps = paths(&mk, &cfg, 0);
    let n = ps.len() as f64;
    let w: Vec<Vec<f64>> = ps.iter().map(|b| b.w_terminal.clone()).collect();
    for i in 0..3 {
        for l in 0..3 {
            // Brownian drivers are independent; asset returns mix them.
            let r: Vec<f64> = ps.iter().map(|b| (b.terminal(i) / mk.spots[i]).ln()).collect();
            let q: Vec<f64> = ps.iter().map(|b| (b.terminal(l) / mk.spots[l]).ln()).collect();
            let (mr, mq) = (r.iter().sum::<f64>() / n, q.iter().sum::<f64>() / n);
            let cov = r.iter().zip(&q).map(|(a, b)| (a - mr) * (b - mq)).sum::<f64>() / (n - 1.0);
            let want = mk.vols[i] * mk.vols[l] * mk.correlation[i][l];
            assert!((cov - want).abs() < 0.06 * mk.vols[i] * mk.vols[l], "({i},{l}): {cov} vs {want}");
            let wcov = w.iter().map(|x| x[i] * x[l]).sum::<f64>() / n;
            let wwant = if i == l { 1.0 } else { 0.0 };
            assert!((wcov - wwant).abs() < 0.06, "W ({i},{l}): {wcov}");
        }
    }
}

#[test]
fn indefinite_correlation_is_rejected() {
    let rho = vec![vec![1.0, 0.9, 0.9], vec![0.9, 1.0, -0.9], vec![0.9, -0.9, 1.0]];
    assert!(matches!(cholesky(&rho), Err(Error::NotPositiveDefinite { .. })));
}

proptest! {
    #[test]
    fn cholesky_reconstructs(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
        // B B^T + I is positive definite; rescale to unit diagonal.
        let m = 4;
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                a[i][j] = (0..m).map(|c| entries[i * m + c] * entries[j * m + c]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        let rho: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| a[i][j] / (a[i][i] * a[j][j]).sqrt()).collect()).collect();
        let l = cholesky(&rho).unwrap();
        for i in 0..m {
            for j in 0..m {
                let v: f64 = (0..m).map(|c| l[i][c] * l[j][c]).sum();
                prop_assert!((v - rho[i][j]).abs() < 1e-12);
            }
            for j in i + 1..m {
                prop_assert_eq!(l[i][j], 0.0);
            }
        }
    }
}
