//! C ABI over the estimator.
//!
//! Markets and reports are opaque handles created and released by this
//! library. Every fallible call returns a [`QmStatus`]; on failure the
//! message is available from [`qm_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qmc_malliavin::estimator::{estimate_with, EstimateReport, EstimatorOptions, Method, PilotMode};
use qmc_malliavin::market::MarketConfig;
use qmc_malliavin::payoffs::{PayoffKind, PayoffSpec};
use qmc_malliavin::qmc::{QmcConfig, SamplingMode};
use qmc_malliavin::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    RunFailed = 3,
    OutOfRange = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmPayoff {
    AsianFixed = 0,
    AsianFloating = 1,
    Digital = 2,
    Exotic = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmMethod {
    Adaptive = 0,
    /// Fixed localization width; `method_parameter` is the fraction of the strike.
    Localized = 1,
    /// Central differences; `method_parameter` is the relative spot bump.
    FiniteDifference = 2,
}

/// Sampling and method settings for [`qm_estimate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmRunOptions {
    pub payoff: QmPayoff,
    pub strike: f64,
    pub method: QmMethod,
    pub method_parameter: f64,
    pub points: usize,
    pub replications: usize,
    /// 0 selects min(50, assets * steps).
    pub lss_block: usize,
    pub seed: u64,
    /// Nonzero enables the orthogonal transformation.
    pub transform: i32,
    /// Nonzero selects pseudo-random sampling instead of scrambled Sobol'.
    pub pseudo_random: i32,
    /// Nonzero reuses the first replication as the pilot sample.
    pub reuse_pilot: i32,
}

/// Opaque market handle.
pub struct QmMarket(MarketConfig);

/// Opaque result handle.
pub struct QmReport(EstimateReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> QmStatus {
    if err.is_config() {
        QmStatus::InvalidConfig
    } else {
        QmStatus::RunFailed
    }
}

fn guard(f: impl FnOnce() -> Result<(), (QmStatus, String)>) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QmStatus::Panic
        }
    }
}

fn fail(err: Error) -> (QmStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (QmStatus, String) {
    (QmStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Reference market: spots 100, rate 5%, maturity 1, volatilities from 10%
/// to 50%, pairwise correlation 0.5, equally spaced dates.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qm_market_reference(assets: usize, steps: usize, out: *mut *mut QmMarket) -> QmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if assets == 0 || steps == 0 {
            return Err((QmStatus::InvalidConfig, "assets and steps must be positive".into()));
        }
        let mk = MarketConfig::reference(assets, steps);
        mk.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(QmMarket(mk)));
        Ok(())
    })
}

/// Market from explicit parameters. `spots` and `vols` hold `assets`
/// values, `correlation` holds `assets * assets` values row-major.
///
/// # Safety
/// The arrays must be readable for the stated lengths and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_market_new(
    assets: usize,
    steps: usize,
    spots: *const f64,
    vols: *const f64,
    correlation: *const f64,
    rate: f64,
    maturity: f64,
    out: *mut *mut QmMarket,
) -> QmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if spots.is_null() || vols.is_null() || correlation.is_null() {
            return Err(null("market array"));
        }
        if assets == 0 || steps == 0 {
            return Err((QmStatus::InvalidConfig, "assets and steps must be positive".into()));
        }
        let rho = std::slice::from_raw_parts(correlation, assets * assets);
        let mut mk = MarketConfig::reference(assets, steps);
        mk.spots = std::slice::from_raw_parts(spots, assets).to_vec();
        mk.vols = std::slice::from_raw_parts(vols, assets).to_vec();
        mk.correlation = rho.chunks(assets).map(<[f64]>::to_vec).collect();
        mk.rate = rate;
        mk.maturity = maturity;
        mk.monitoring_times = qmc_malliavin::market::equally_spaced(maturity, steps);
        mk.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(QmMarket(mk)));
        Ok(())
    })
}

/// # Safety
/// `market` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qm_market_free(market: *mut QmMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// Defaults: at-the-money fixed-strike call, adaptive localization,
/// 32 replications of 2048 points, transformation on.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_run_options_default(out: *mut QmRunOptions) -> QmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let std = QmcConfig::standard(1);
        *out = QmRunOptions {
            payoff: QmPayoff::AsianFixed,
            strike: 100.0,
            method: QmMethod::Adaptive,
            method_parameter: 0.01,
            points: std.points_per_replication,
            replications: std.replications,
            lss_block: 0,
            seed: std.seed,
            transform: 1,
            pseudo_random: 0,
            reuse_pilot: 0,
        };
        Ok(())
    })
}

fn to_engine(market: &MarketConfig, o: &QmRunOptions) -> (PayoffSpec, QmcConfig, Method, EstimatorOptions) {
    let kind = match o.payoff {
        QmPayoff::AsianFixed => PayoffKind::AsianFixed,
        QmPayoff::AsianFloating => PayoffKind::AsianFloating,
        QmPayoff::Digital => PayoffKind::Digital,
        QmPayoff::Exotic => PayoffKind::Exotic,
    };
    let method = match o.method {
        QmMethod::Adaptive => Method::MalliavinAdaptive,
        QmMethod::Localized => Method::MalliavinLoc { delta: o.method_parameter },
        QmMethod::FiniteDifference => Method::FiniteDiff { bump: o.method_parameter },
    };
    let d = market.dimension();
    let qmc = QmcConfig {
        nominal_dimension: d,
        points_per_replication: o.points,
        replications: o.replications,
        lss_block_dimension: if o.lss_block == 0 { d.min(50) } else { o.lss_block },
        seed: o.seed,
        mode: if o.pseudo_random != 0 { SamplingMode::PseudoRandom } else { SamplingMode::ScrambledSobol },
    };
    let options = EstimatorOptions {
        lt: o.transform != 0,
        pilot: if o.reuse_pilot != 0 { PilotMode::Reuse } else { PilotMode::Independent },
    };
    (PayoffSpec::new(kind, o.strike), qmc, method, options)
}

/// Runs one estimation.
///
/// # Safety
/// `market` and `options` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_estimate(
    market: *const QmMarket,
    options: *const QmRunOptions,
    out: *mut *mut QmReport,
) -> QmStatus {
    guard(|| {
        if market.is_null() || options.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let mk = &(*market).0;
        let (spec, qmc, method, opts) = to_engine(mk, &*options);
        spec.validate().map_err(fail)?;
        let report = estimate_with(mk, &spec, &qmc, method, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(QmReport(report)));
        Ok(())
    })
}

/// Number of Delta components, 0 for a null handle.
///
/// # Safety
/// `report` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qm_report_components(report: *const QmReport) -> usize {
    if report.is_null() {
        0
    } else {
        (*report).0.delta.len()
    }
}

unsafe fn read_component(report: *const QmReport, k: usize, out: *mut f64, pick: fn(&EstimateReport) -> &[f64]) -> QmStatus {
    guard(|| {
        if report.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let values = pick(&(*report).0);
        let v = values
            .get(k)
            .ok_or_else(|| (QmStatus::OutOfRange, format!("component {k} out of range (have {})", values.len())))?;
        *out = *v;
        Ok(())
    })
}

/// Delta of component `k` (zero-based).
///
/// # Safety
/// `report` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_report_delta(report: *const QmReport, k: usize, out: *mut f64) -> QmStatus {
    read_component(report, k, out, |r| &r.delta)
}

/// Standard error of component `k` across replications.
///
/// # Safety
/// `report` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_report_stderr(report: *const QmReport, k: usize, out: *mut f64) -> QmStatus {
    read_component(report, k, out, |r| &r.stderr)
}

/// Discounted price estimate and its standard error.
///
/// # Safety
/// `report` must be valid; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qm_report_price(report: *const QmReport, price: *mut f64, stderr: *mut f64) -> QmStatus {
    guard(|| {
        if report.is_null() || price.is_null() || stderr.is_null() {
            return Err(null("argument"));
        }
        *price = (*report).0.price;
        *stderr = (*report).0.price_stderr;
        Ok(())
    })
}

/// Paths dropped as degenerate, and total simulated paths.
///
/// # Safety
/// `report` must be valid; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qm_report_paths(report: *const QmReport, rejected: *mut u64, simulated: *mut u64) -> QmStatus {
    guard(|| {
        if report.is_null() || rejected.is_null() || simulated.is_null() {
            return Err(null("argument"));
        }
        *rejected = (*report).0.rejected_paths;
        *simulated = (*report).0.path_simulations;
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`qm_estimate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qm_report_free(report: *mut QmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
