//! Malliavin estimates against central finite differences with common
//! random numbers, and exotic jets against bumped Brownian increments.

mod common;

use common::*;
use qmc_malliavin::estimator::{estimate, finite_difference_delta, Method};
use qmc_malliavin::market::MarketConfig;
use qmc_malliavin::payoffs::{PayoffKind, PayoffSpec};

fn agree(kind: PayoffKind, strike: f64, method: Method, seed: u64) {
    let mk = MarketConfig::reference(3, 4);
    let cfg = qmc(mk.dimension(), 1024, 16, seed);
    let spec = PayoffSpec::new(kind, strike);
    let mal = estimate(&mk, &spec, &cfg, method).unwrap();
    let fd = finite_difference_delta(&mk, &spec, &cfg, 0.01).unwrap();
    for k in 0..3 {
        assert!(
            within_3_sigma(mal.delta[k], mal.stderr[k], fd.delta[k], fd.stderr[k]),
            "{kind} K={strike} {method} component {k}: {} +- {} vs {} +- {}",
            mal.delta[k],
            mal.stderr[k],
            fd.delta[k],
            fd.stderr[k]
        );
    }
}

#[test]
fn all_payoffs_agree_at_the_money() {
    for kind in PayoffKind::ALL {
        agree(kind, 100.0, Method::MalliavinAdaptive, 31);
    }
}

#[test]
fn fixed_width_localization_agrees() {
    for kind in [PayoffKind::AsianFixed, PayoffKind::Digital, PayoffKind::Exotic] {
        agree(kind, 100.0, Method::MalliavinLoc { delta: 0.05 }, 32);
    }
}

#[test]
fn away_from_the_money() {
    for strike in [90.0, 110.0] {
        agree(PayoffKind::AsianFixed, strike, Method::MalliavinAdaptive, 33);
        agree(PayoffKind::Exotic, strike, Method::MalliavinAdaptive, 34);
    }
}

#[test]
fn exotic_jets_match_increment_bumps() {
    let mk = MarketConfig::reference(3, 4);
    for seed in 0..4 {
        let z: Vec<f64> = (0..12).map(|c| 1.1 * ((c * 7 + seed * 3) as f64 * 0.37).cos()).collect();
        let err = exotic_jet_bump_error(&mk, &z);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}
