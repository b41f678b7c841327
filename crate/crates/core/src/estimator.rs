//! Replicated estimation of the Delta vector.
//!
//! Each replication draws its own randomized point set, maps it to paths and
//! averages the discounted per-path contributions. The reported error is the
//! sample standard deviation of the replication means over `√R`.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{config_err, Error, Result};
use crate::lt::{build_lt_matrix, LtMatrix};
use crate::market::{simulate_into, MarketConfig, PathBundle, VolLoadings};
use crate::payoffs::{average, discount, evaluate, payoff_value, terminal_average, PayoffKind, PayoffSpec};
use crate::qmc::{normal_matrix, QmcConfig, Stream};
use crate::weights::{
    adaptive_call_delta, adaptive_digital_h, digital_weight, exotic_blocks, fixed_strike_blocks,
    floating_strike_blocks, localized_call_contribution, skorohod_fixed, skorohod_floating, skorohod_u,
    LocalizationParams,
};

/// Maximum share of degenerate paths before a run is declared failed.
pub const MAX_REJECTED_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Localization with widths estimated from a pilot replication.
    MalliavinAdaptive,
    /// Localization with a fixed relative width (fraction of the strike, or
    /// of the initial basket level for the floating strike).
    MalliavinLoc { delta: f64 },
    /// Central differences with a relative spot bump and common random
    /// numbers.
    FiniteDiff { bump: f64 },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::MalliavinAdaptive => write!(f, "adaptive"),
            Method::MalliavinLoc { delta } => write!(f, "loc:{delta}"),
            Method::FiniteDiff { bump } => write!(f, "fd:{bump}"),
        }
    }
}

/// Where the pilot replication for adaptive parameters comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotMode {
    /// A dedicated sub-seed, independent of the main replications.
    #[default]
    Independent,
    /// The draws of the first main replication.
    Reuse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub lt: bool,
    pub pilot: PilotMode,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            lt: true,
            pilot: PilotMode::Independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub method: Method,
    pub payoff: PayoffSpec,
    pub qmc: QmcConfig,
    pub delta: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `R × M`
    pub replication_means: Vec<Vec<f64>>,
    pub rejected_paths: u64,
    /// Paths simulated, pilot and bumped paths included.
    pub path_simulations: u64,
    pub runtime_seconds: f64,
    /// Per-component localization widths (Malliavin methods only).
    pub localization: Vec<LocalizationParams>,
    pub lt_objective: Option<f64>,
    pub lt_fallback_columns: usize,
    /// Discounted option value and its error, from the same replications.
    pub price: f64,
    pub price_stderr: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct Context<'a> {
    market: &'a MarketConfig,
    spec: &'a PayoffSpec,
    qmc: &'a QmcConfig,
    loadings: VolLoadings,
    weights: Vec<f64>,
    lt: Option<LtMatrix>,
    disc: f64,
}

impl<'a> Context<'a> {
    fn new(market: &'a MarketConfig, spec: &'a PayoffSpec, qmc: &'a QmcConfig, lt: bool) -> Result<Self> {
        market.validate()?;
        spec.validate()?;
        qmc.validate()?;
        if qmc.nominal_dimension != market.dimension() {
            return Err(config_err(format!(
                "qmc.nominal_dimension {} does not match assets × steps = {}",
                qmc.nominal_dimension,
                market.dimension()
            )));
        }
        let lt = if lt { Some(build_lt_matrix(market, spec)?) } else { None };
        Ok(Self {
            market,
            spec,
            qmc,
            loadings: VolLoadings::new(market)?,
            weights: spec.weights(market).into_owned(),
            lt,
            disc: discount(1.0, market.rate, market.maturity),
        })
    }

    /// Time-major normals for one replication, after the LT.
    fn draws(&self, stream: Stream, replication: u64) -> Result<Vec<f64>> {
        let eps = normal_matrix(self.qmc, stream, replication)?;
        Ok(match &self.lt {
            Some(a) => {
                let mut z = vec![0.0; eps.len()];
                a.apply_batch(&eps, self.qmc.points_per_replication, &mut z);
                z
            }
            None => eps,
        })
    }

    fn scale(&self) -> f64 {
        match self.spec.kind {
            PayoffKind::AsianFloating => self.weights.iter().enumerate().map(|(c, w)| w * self.market.spots[c / self.market.steps()]).sum(),
            _ => self.spec.strike,
        }
    }

    fn localization(&self, method: Method, pilot: PilotMode) -> Result<Vec<LocalizationParams>> {
        let m = self.market.assets();
        let scale = self.scale();
        match method {
            Method::MalliavinLoc { delta } => Ok(vec![
                LocalizationParams {
                    delta_call: delta * scale,
                    h_digital: delta * self.spec.strike,
                };
                m
            ]),
            Method::MalliavinAdaptive => {
                let (stream, rep) = match pilot {
                    PilotMode::Independent => (Stream::Pilot, 0),
                    PilotMode::Reuse => (Stream::Main, 0),
                };
                let z = self.draws(stream, rep)?;
                let d = self.market.dimension();
                let mut bundle = PathBundle::zeros(m, self.market.steps());
                let mut samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); m];
                for point in z.chunks(d) {
                    simulate_into(self.market, &self.loadings, point, &mut bundle);
                    if let Ok(row) = self.pilot_row(&bundle) {
                        for (s, v) in samples.iter_mut().zip(row) {
                            s.push(v);
                        }
                    }
                }
                Ok(samples
                    .iter()
                    .map(|s| {
                        if self.spec.kind == PayoffKind::Digital {
                            let du: Vec<f64> = s.iter().map(|p| p.1).collect();
                            LocalizationParams {
                                delta_call: 0.01 * scale,
                                h_digital: adaptive_digital_h(&du, self.spec.strike),
                            }
                        } else {
                            LocalizationParams {
                                delta_call: adaptive_call_delta(s, scale),
                                h_digital: 0.01 * self.spec.strike,
                            }
                        }
                    })
                    .collect())
            }
            Method::FiniteDiff { .. } => Ok(Vec::new()),
        }
    }

    /// `(Z − K, weight)` per component; for the digital, `(m − K, δ(u))`.
    fn pilot_row(&self, b: &PathBundle) -> Result<Vec<(f64, f64)>> {
        let m_t = average(b, &self.weights);
        let k_t = terminal_average(b);
        let strike = self.spec.strike;
        match self.spec.kind {
            PayoffKind::AsianFixed => fixed_strike_blocks(b, &self.loadings, self.market, &self.weights)
                .iter()
                .enumerate()
                .map(|(k, blk)| Ok((m_t - strike, skorohod_fixed(blk, b.w_terminal[k])?)))
                .collect(),
            PayoffKind::Digital => fixed_strike_blocks(b, &self.loadings, self.market, &self.weights)
                .iter()
                .enumerate()
                .map(|(k, blk)| Ok((m_t - strike, skorohod_u(blk, b.w_terminal[k])?)))
                .collect(),
            PayoffKind::AsianFloating => floating_strike_blocks(b, &self.loadings, self.market)
                .iter()
                .enumerate()
                .map(|(k, blk)| Ok((m_t - k_t, skorohod_floating(blk, b.w_terminal[k])?)))
                .collect(),
            PayoffKind::Exotic => (0..self.market.assets())
                .map(|k| Ok((m_t.max(k_t) - strike, exotic_blocks(b, &self.loadings, self.market, k)?.weight())))
                .collect(),
        }
    }

    /// Undiscounted per-component contributions of one path.
    fn contributions(&self, b: &PathBundle, params: &[LocalizationParams], out: &mut [f64]) -> Result<()> {
        let ev = evaluate(self.spec, b, self.market);
        let strike = self.spec.strike;
        let w = &b.w_terminal;
        match self.spec.kind {
            PayoffKind::AsianFixed => {
                let blk = fixed_strike_blocks(b, &self.loadings, self.market, &self.weights);
                for k in 0..out.len() {
                    out[k] = localized_call_contribution(ev.m_t, strike, params[k].delta_call, ev.g[k], || {
                        skorohod_fixed(&blk[k], w[k])
                    })?;
                }
            }
            PayoffKind::AsianFloating => {
                let blk = floating_strike_blocks(b, &self.loadings, self.market);
                let n = ev.m_t - ev.k_t;
                for k in 0..out.len() {
                    out[k] = localized_call_contribution(n, 0.0, params[k].delta_call, blk[k].f, || {
                        skorohod_floating(&blk[k], w[k])
                    })?;
                }
            }
            PayoffKind::Digital => {
                if ev.value == 0.0 {
                    out.fill(0.0);
                } else {
                    let blk = fixed_strike_blocks(b, &self.loadings, self.market, &self.weights);
                    for k in 0..out.len() {
                        out[k] = digital_weight(&blk[k], w[k], ev.m_t, strike, params[k].h_digital)?;
                    }
                }
            }
            PayoffKind::Exotic => {
                let z = ev.m_t.max(ev.k_t);
                for k in 0..out.len() {
                    let dz = if ev.m_t >= ev.k_t { ev.g[k] } else { ev.t[k] };
                    out[k] = localized_call_contribution(z, strike, params[k].delta_call, dz, || {
                        Ok(exotic_blocks(b, &self.loadings, self.market, k)?.weight())
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Per-component discounted means, price mean and rejections for one
    /// replication.
    fn malliavin_replication(&self, rep: u64, params: &[LocalizationParams]) -> Result<RepResult> {
        let z = self.draws(Stream::Main, rep)?;
        let m = self.market.assets();
        let d = self.market.dimension();
        let mut bundle = PathBundle::zeros(m, self.market.steps());
        let mut sums = vec![Sum::default(); m];
        let mut price = Sum::default();
        let mut row = vec![0.0; m];
        let mut accepted = 0u64;
        let mut rejected = 0u64;
        for point in z.chunks(d) {
            simulate_into(self.market, &self.loadings, point, &mut bundle);
            match self.contributions(&bundle, params, &mut row) {
                Ok(()) => {
                    accepted += 1;
                    for (s, v) in sums.iter_mut().zip(&row) {
                        s.add(*v);
                    }
                    let ev = average(&bundle, &self.weights);
                    price.add(payoff_value(self.spec, ev, terminal_average(&bundle)));
                }
                Err(Error::DegeneratePath(_)) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
        let scale = if accepted > 0 { self.disc / accepted as f64 } else { f64::NAN };
        Ok(RepResult {
            means: sums.iter().map(|s| s.value() * scale).collect(),
            price: price.value() * scale,
            rejected,
        })
    }

    fn fd_replication(&self, rep: u64, bump: f64) -> Result<RepResult> {
        let z = self.draws(Stream::Main, rep)?;
        let m = self.market.assets();
        let d = self.market.dimension();
        let mut bundle = PathBundle::zeros(m, self.market.steps());
        let mut sums = vec![Sum::default(); m];
        let mut price = Sum::default();
        let mut bumped = self.market.clone();
        let value = |bundle: &PathBundle| payoff_value(self.spec, average(bundle, &self.weights), terminal_average(bundle));
        for point in z.chunks(d) {
            simulate_into(self.market, &self.loadings, point, &mut bundle);
            price.add(value(&bundle));
            for k in 0..m {
                let h = bump * self.market.spots[k];
                bumped.spots[k] = self.market.spots[k] + h;
                simulate_into(&bumped, &self.loadings, point, &mut bundle);
                let up = value(&bundle);
                bumped.spots[k] = self.market.spots[k] - h;
                simulate_into(&bumped, &self.loadings, point, &mut bundle);
                let down = value(&bundle);
                bumped.spots[k] = self.market.spots[k];
                sums[k].add((up - down) / (2.0 * h));
            }
        }
        let n = self.qmc.points_per_replication as f64;
        Ok(RepResult {
            means: sums.iter().map(|s| s.value() * self.disc / n).collect(),
            price: price.value() * self.disc / n,
            rejected: 0,
        })
    }
}

struct RepResult {
    means: Vec<f64>,
    price: f64,
    rejected: u64,
}

/// Malliavin or finite-difference estimate with the LT enabled and an
/// independent pilot.
pub fn estimate(market: &MarketConfig, spec: &PayoffSpec, qmc: &QmcConfig, method: Method) -> Result<EstimateReport> {
    estimate_with(market, spec, qmc, method, &EstimatorOptions::default())
}

pub fn estimate_with(
    market: &MarketConfig,
    spec: &PayoffSpec,
    qmc: &QmcConfig,
    method: Method,
    options: &EstimatorOptions,
) -> Result<EstimateReport> {
    let start = Instant::now();
    match method {
        Method::MalliavinLoc { delta } if !(delta.is_finite() && delta > 0.0) => {
            return Err(config_err(format!("localization width {delta} must be positive")));
        }
        Method::FiniteDiff { bump } if !(bump.is_finite() && bump > 0.0) => {
            return Err(config_err(format!("finite-difference bump {bump} must be positive")));
        }
        _ => {}
    }
    let ctx = Context::new(market, spec, qmc, options.lt)?;
    let m = market.assets();
    let reps = qmc.replications;
    let n = qmc.points_per_replication as u64;

    if spec.kind == PayoffKind::AsianFloating && market.steps() == 1 {
        // n(T) = m(T) − K(T) vanishes identically on a single date
        return Ok(EstimateReport {
            method,
            payoff: *spec,
            qmc: qmc.clone(),
            delta: vec![0.0; m],
            stderr: vec![0.0; m],
            replication_means: vec![vec![0.0; m]; reps],
            rejected_paths: 0,
            path_simulations: 0,
            runtime_seconds: start.elapsed().as_secs_f64(),
            localization: Vec::new(),
            lt_objective: ctx.lt.as_ref().map(LtMatrix::first_column_objective),
            lt_fallback_columns: ctx.lt.as_ref().map_or(0, |a| a.fallback_columns().len()),
            price: 0.0,
            price_stderr: 0.0,
        });
    }

    let (localization, path_simulations, results) = match method {
        Method::FiniteDiff { bump } => {
            let results: Vec<Result<RepResult>> =
                (0..reps as u64).into_par_iter().map(|r| ctx.fd_replication(r, bump)).collect();
            (Vec::new(), reps as u64 * n * (2 * m as u64 + 1), results)
        }
        _ => {
            let params = ctx.localization(method, options.pilot)?;
            let pilot = match (method, options.pilot) {
                (Method::MalliavinAdaptive, PilotMode::Independent) => n,
                _ => 0,
            };
            let results: Vec<Result<RepResult>> = (0..reps as u64)
                .into_par_iter()
                .map(|r| ctx.malliavin_replication(r, &params))
                .collect();
            (params, reps as u64 * n + pilot, results)
        }
    };
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let rejected: u64 = results.iter().map(|r| r.rejected).sum();
    let total = reps as u64 * n;
    let limit = (total as f64 * MAX_REJECTED_FRACTION).floor() as u64;
    if rejected > limit {
        return Err(Error::ExcessRejections { rejected, total, limit });
    }

    let replication_means: Vec<Vec<f64>> = results.iter().map(|r| r.means.clone()).collect();
    let (delta, stderr): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|k| mean_and_stderr(&replication_means.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .unzip();
    let (price, price_stderr) = mean_and_stderr(&results.iter().map(|r| r.price).collect::<Vec<_>>());
    Ok(EstimateReport {
        method,
        payoff: *spec,
        qmc: qmc.clone(),
        delta,
        stderr,
        replication_means,
        rejected_paths: rejected,
        path_simulations,
        runtime_seconds: start.elapsed().as_secs_f64(),
        localization,
        lt_objective: ctx.lt.as_ref().map(LtMatrix::first_column_objective),
        lt_fallback_columns: ctx.lt.as_ref().map_or(0, |a| a.fallback_columns().len()),
        price,
        price_stderr,
    })
}

/// Central finite differences with relative bump `bump · x_k`.
pub fn finite_difference_delta(
    market: &MarketConfig,
    spec: &PayoffSpec,
    qmc: &QmcConfig,
    bump: f64,
) -> Result<EstimateReport> {
    estimate(market, spec, qmc, Method::FiniteDiff { bump })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum() {
        let mut s = Sum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, e) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((e - 1.0).abs() < 1e-15);
    }
}
