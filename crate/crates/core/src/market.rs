//! Multi-asset Black-Scholes market driven by uncorrelated Brownian motions.
//!
//! Asset `i` loads on Brownian component `k` with `σ_ik = σ_i α_ik`, where
//! `α` is the lower Cholesky factor of the correlation matrix. Normal draws
//! are consumed time-major: step `j` uses coordinates `j·M .. (j+1)·M`.

use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    pub spots: Vec<f64>,
    pub rate: f64,
    pub vols: Vec<f64>,
    /// Full symmetric correlation matrix, one row per asset.
    pub correlation: Vec<Vec<f64>>,
    pub maturity: f64,
    pub monitoring_times: Vec<f64>,
    /// Averaging weights `w_ij`, row-major `M × N`.
    pub weights: Vec<f64>,
}

impl MarketConfig {
    /// The reference market: spots 100, r = 5%, T = 1, σ_i = 10% + (i−1)/9·40%,
    /// all correlations 50%, `n` equally spaced dates and uniform weights.
    ///
    /// The volatility ramp divides by 9 for every asset count, so for `m < 10`
    /// the top volatility stays below 50%.
    pub fn reference(m: usize, n: usize) -> Self {
        let vols = (0..m).map(|i| 0.1 + i as f64 / 9.0 * 0.4).collect();
        let correlation = (0..m)
            .map(|i| (0..m).map(|l| if i == l { 1.0 } else { 0.5 }).collect())
            .collect();
        Self {
            spots: vec![100.0; m],
            rate: 0.05,
            vols,
            correlation,
            maturity: 1.0,
            monitoring_times: equally_spaced(1.0, n),
            weights: vec![1.0 / (m * n) as f64; m * n],
        }
    }

    pub fn assets(&self) -> usize {
        self.spots.len()
    }

    pub fn steps(&self) -> usize {
        self.monitoring_times.len()
    }

    pub fn dimension(&self) -> usize {
        self.assets() * self.steps()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.steps() + j]
    }

    /// `(t_{j-1}, t_j)` for every monitoring interval, with `t_0 = 0`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let t = &self.monitoring_times;
        (0..t.len()).map(move |j| (if j == 0 { 0.0 } else { t[j - 1] }, t[j]))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.assets();
        let n = self.steps();
        if m == 0 {
            return Err(config_err("market.spots: at least one asset required"));
        }
        if n == 0 {
            return Err(config_err("market.monitoring_times: at least one date required"));
        }
        if self.vols.len() != m {
            return Err(config_err(format!("market.vols: expected {m} entries, got {}", self.vols.len())));
        }
        if let Some(x) = self.spots.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(config_err(format!("market.spots: {x} is not a positive number")));
        }
        if let Some(s) = self.vols.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(config_err(format!("market.vols: {s} is not a non-negative number")));
        }
        if !self.rate.is_finite() {
            return Err(config_err("market.rate must be finite"));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(config_err("market.maturity must be positive"));
        }
        if self.correlation.len() != m {
            return Err(config_err(format!(
                "market.correlation: expected {m} rows, got {}",
                self.correlation.len()
            )));
        }
        for (i, row) in self.correlation.iter().enumerate() {
            if row.len() != m {
                return Err(config_err(format!(
                    "market.correlation row {}: expected {m} entries, got {}",
                    i + 1,
                    row.len()
                )));
            }
            if row[i] != 1.0 {
                return Err(config_err(format!("market.correlation[{}][{}] must be 1", i + 1, i + 1)));
            }
            for (l, &r) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&r) || (r - self.correlation[l][i]).abs() > 1e-12 {
                    return Err(config_err(format!(
                        "market.correlation[{}][{}] must be symmetric and in [-1, 1]",
                        i + 1,
                        l + 1
                    )));
                }
            }
        }
        let mut prev = 0.0;
        for &t in &self.monitoring_times {
            if !(t > prev) {
                return Err(config_err("market.monitoring_times must be positive and strictly increasing"));
            }
            prev = t;
        }
        if (prev - self.maturity).abs() > 1e-12 * self.maturity {
            return Err(config_err("market.monitoring_times: last date must equal the maturity"));
        }
        if self.weights.len() != m * n {
            return Err(config_err(format!(
                "market.weights: expected {} entries, got {}",
                m * n,
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(config_err("market.weights must be non-negative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(config_err(format!("market.weights must sum to 1 (sum is {total})")));
        }
        Ok(())
    }
}

pub fn equally_spaced(maturity: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| if j == n { maturity } else { maturity * j as f64 / n as f64 })
        .collect()
}

/// Lower Cholesky factor of a symmetric matrix.
///
/// Fails with the 1-based index of the first leading minor that is not
/// positive.
pub fn cholesky(rho: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = rho.len();
    let mut c = vec![vec![0.0; m]; m];
    for i in 0..m {
        for k in 0..=i {
            let s: f64 = (0..k).map(|j| c[i][j] * c[k][j]).sum();
            if i == k {
                let p = rho[i][i] - s;
                if !(p > 1e-14) {
                    return Err(Error::NotPositiveDefinite { minor: i + 1 });
                }
                c[i][i] = p.sqrt();
            } else {
                c[i][k] = (rho[i][k] - s) / c[k][k];
            }
        }
    }
    Ok(c)
}

/// `σ_ik = σ_i α_ik`, row-major `M × M`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolLoadings {
    m: usize,
    sigma: Vec<f64>,
}

impl VolLoadings {
    pub fn new(market: &MarketConfig) -> Result<Self> {
        let alpha = cholesky(&market.correlation)?;
        let m = market.assets();
        let mut sigma = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                sigma[i * m + k] = market.vols[i] * alpha[i][k];
            }
        }
        Ok(Self { m, sigma })
    }

    pub fn assets(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.sigma[i * self.m + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.sigma[i * self.m..(i + 1) * self.m]
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    m: usize,
    n: usize,
    /// `S_i(t_j)`, row-major `M × N`.
    pub s: Vec<f64>,
    pub w_terminal: Vec<f64>,
    /// Trapezoidal `∫_0^T W_k(s) ds` on `0, t_1, …, t_N`.
    pub w_time_integral: Vec<f64>,
    /// The time-major normal vector that drove the path (after any LT).
    pub normal_draws: Vec<f64>,
}

impl PathBundle {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            s: vec![0.0; m * n],
            w_terminal: vec![0.0; m],
            w_time_integral: vec![0.0; m],
            normal_draws: vec![0.0; m * n],
        }
    }

    pub fn assets(&self) -> usize {
        self.m
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.n + j]
    }

    pub fn terminal(&self, i: usize) -> f64 {
        self.s[i * self.n + self.n - 1]
    }

    pub fn asset_path(&self, i: usize) -> &[f64] {
        &self.s[i * self.n..(i + 1) * self.n]
    }
}

/// Simulate from a normal point, first mapping it through the LT matrix when
/// one is given.
pub fn simulate_path(
    market: &MarketConfig,
    loadings: &VolLoadings,
    lt: Option<&crate::lt::LtMatrix>,
    point: &[f64],
) -> Result<PathBundle> {
    let d = market.dimension();
    if point.len() != d {
        return Err(config_err(format!("normal point has dimension {}, market needs {d}", point.len())));
    }
    let z = match lt {
        Some(a) => {
            if a.dimension() != d {
                return Err(config_err(format!("LT matrix has dimension {}, market needs {d}", a.dimension())));
            }
            a.apply(point)
        }
        None => point.to_vec(),
    };
    let mut bundle = PathBundle::zeros(market.assets(), market.steps());
    simulate_into(market, loadings, &z, &mut bundle);
    Ok(bundle)
}

/// Fill `bundle` from time-major draws `z` (no LT applied here).
pub fn simulate_into(market: &MarketConfig, loadings: &VolLoadings, z: &[f64], bundle: &mut PathBundle) {
    let m = market.assets();
    let n = market.steps();
    debug_assert_eq!(z.len(), m * n);
    bundle.normal_draws.copy_from_slice(z);
    let mut log_s: Vec<f64> = market.spots.iter().map(|x| x.ln()).collect();
    let w = &mut bundle.w_terminal;
    let wi = &mut bundle.w_time_integral;
    w.fill(0.0);
    wi.fill(0.0);
    let mut dw = vec![0.0; m];
    for (j, (t0, t1)) in market.intervals().enumerate() {
        let dt = t1 - t0;
        let sq = dt.sqrt();
        for (k, d) in dw.iter_mut().enumerate() {
            *d = sq * z[j * m + k];
        }
        for k in 0..m {
            let before = w[k];
            w[k] += dw[k];
            wi[k] += 0.5 * (before + w[k]) * dt;
        }
        for i in 0..m {
            let vol = market.vols[i];
            let shock: f64 = loadings.row(i).iter().zip(&dw).map(|(s, d)| s * d).sum();
            log_s[i] += (market.rate - 0.5 * vol * vol) * dt + shock;
            bundle.s[i * n + j] = log_s[i].exp();
        }
    }
}

/// `D^k S_i(t_j) = S_i(t_j) σ_ik`, row-major `M × N`; the derivative is this
/// value for `s ≤ t_j` and zero afterwards.
pub fn malliavin_derivative_samples(bundle: &PathBundle, loadings: &VolLoadings, k: usize) -> Vec<f64> {
    let n = bundle.steps();
    let mut out = bundle.s.clone();
    for (i, row) in out.chunks_mut(n).enumerate() {
        let s = loadings.get(i, k);
        row.iter_mut().for_each(|v| *v *= s);
    }
    out
}

/// Gradient of `F = Σ c_ij S_i(t_j)` with respect to the time-major normal
/// draws: `∂F/∂z_(l,m) = √Δt_l Σ_i σ_im Σ_{j≥l} c_ij S_i(t_j)`.
pub fn linear_functional_gradient(
    market: &MarketConfig,
    loadings: &VolLoadings,
    bundle: &PathBundle,
    coeffs: &[f64],
    out: &mut [f64],
) {
    let m = market.assets();
    let n = market.steps();
    let mut tail = vec![0.0; m];
    let sqdt: Vec<f64> = market.intervals().map(|(a, b)| (b - a).sqrt()).collect();
    for l in (0..n).rev() {
        for (i, t) in tail.iter_mut().enumerate() {
            *t += coeffs[i * n + l] * bundle.at(i, l);
        }
        for mm in 0..m {
            let g: f64 = (0..m).map(|i| loadings.get(i, mm) * tail[i]).sum();
            out[l * m + mm] = sqdt[l] * g;
        }
    }
}
