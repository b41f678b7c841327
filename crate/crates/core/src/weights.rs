//! Skorohod-integral weights, localization and adaptive localization
//! parameters.
//!
//! All weights differentiate along the asset's own Brownian component
//! (`u_m = 1{m = k}`), so the k-th weight only involves `W_k`.

use crate::error::{Error, Result};
use crate::jet::MalliavinJet;
use crate::market::{MarketConfig, PathBundle, VolLoadings};
use crate::payoffs::{PayoffKind, PayoffSpec};

/// Relative size below which a denominator is treated as zero.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

fn check(value: f64, scale: f64, what: &'static str) -> Result<()> {
    if !(value.abs() > DEGENERACY_TOLERANCE * scale) || !value.is_finite() {
        Err(Error::DegeneratePath(what))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedStrikeBlocks {
    /// `(1/x_k) Σ_j w_kj S_k(t_j)`
    pub g: f64,
    /// `Σ_ij w_ij S_i(t_j) t_j σ_ik`
    pub l: f64,
    /// `(1/x_k) Σ_j w_kj S_k(t_j) t_j σ_kk`
    pub a: f64,
    /// `Σ_ij w_ij S_i(t_j) t_j² σ_ik²`
    pub b: f64,
    l_scale: f64,
}

/// Fixed-strike blocks for every component `k` from one pass over the path.
pub fn fixed_strike_blocks(
    bundle: &PathBundle,
    loadings: &VolLoadings,
    market: &MarketConfig,
    weights: &[f64],
) -> Vec<FixedStrikeBlocks> {
    let m = market.assets();
    let n = market.steps();
    let t = &market.monitoring_times;
    let mut p0 = vec![0.0; m];
    let mut p1 = vec![0.0; m];
    let mut p2 = vec![0.0; m];
    for i in 0..m {
        for j in 0..n {
            let ws = weights[i * n + j] * bundle.at(i, j);
            p0[i] += ws;
            p1[i] += ws * t[j];
            p2[i] += ws * t[j] * t[j];
        }
    }
    (0..m)
        .map(|k| {
            let mut l = 0.0;
            let mut l_scale = 0.0;
            let mut b = 0.0;
            for i in 0..m {
                let s = loadings.get(i, k);
                l += s * p1[i];
                l_scale += s.abs() * p1[i];
                b += s * s * p2[i];
            }
            let x = market.spots[k];
            FixedStrikeBlocks {
                g: p0[k] / x,
                l,
                a: loadings.get(k, k) * p1[k] / x,
                b,
                l_scale,
            }
        })
        .collect()
}

/// `δ(G/L) = (G/L)(W + B/L) − A/L`
pub fn skorohod_fixed(blk: &FixedStrikeBlocks, w_k: f64) -> Result<f64> {
    check(blk.l, blk.l_scale, "L_k vanishes")?;
    let r = blk.g / blk.l;
    Ok(r * (w_k + blk.b / blk.l) - blk.a / blk.l)
}

/// `δ(u)` for `u = 1/L`: `W/L + B/L²`.
pub fn skorohod_u(blk: &FixedStrikeBlocks, w_k: f64) -> Result<f64> {
    check(blk.l, blk.l_scale, "L_k vanishes")?;
    Ok(w_k / blk.l + blk.b / (blk.l * blk.l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatingStrikeBlocks {
    pub fixed: FixedStrikeBlocks,
    /// `G_k − T_k`
    pub f: f64,
    /// `L_k − U_k`
    pub m: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    m_scale: f64,
}

/// Floating-strike blocks for every component (uniform weights).
pub fn floating_strike_blocks(
    bundle: &PathBundle,
    loadings: &VolLoadings,
    market: &MarketConfig,
) -> Vec<FloatingStrikeBlocks> {
    let mm = market.assets();
    let uniform = vec![1.0 / market.dimension() as f64; market.dimension()];
    let fixed = fixed_strike_blocks(bundle, loadings, market, &uniform);
    let cap = market.maturity;
    let inv_m = 1.0 / mm as f64;
    fixed
        .into_iter()
        .enumerate()
        .map(|(k, fx)| {
            let mut u = 0.0;
            let mut u_scale = 0.0;
            let mut p = 0.0;
            for i in 0..mm {
                let s = loadings.get(i, k);
                let st = bundle.terminal(i);
                u += st * cap * s * inv_m;
                u_scale += st * cap * s.abs() * inv_m;
                p += st * cap * cap * s * s * inv_m;
            }
            let x = market.spots[k];
            let t = bundle.terminal(k) * inv_m / x;
            let v = bundle.terminal(k) * cap * loadings.get(k, k) * inv_m / x;
            FloatingStrikeBlocks {
                fixed: fx,
                f: fx.g - t,
                m: fx.l - u,
                t,
                u,
                v,
                p,
                m_scale: fx.l_scale + u_scale,
            }
        })
        .collect()
}

/// `δ(F/M) = (F/M)(W + (B − P)/M) − (A − V)/M`
pub fn skorohod_floating(blk: &FloatingStrikeBlocks, w_k: f64) -> Result<f64> {
    check(blk.m, blk.m_scale, "M_k vanishes")?;
    let r = blk.f / blk.m;
    Ok(r * (w_k + (blk.fixed.b - blk.p) / blk.m) - (blk.fixed.a - blk.v) / blk.m)
}

/// Kernel `φ(z) = e^{−|z|}`.
pub fn phi(z: f64) -> f64 {
    (-z.abs()).exp()
}

/// `φ'(z) = −sign(z) e^{−|z|}`, with `φ'(0) = 0`.
pub fn phi_prime(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        -z.signum() * (-z.abs()).exp()
    }
}

/// `φ G δ(u) − φ A/L − (G/h) φ'` with `φ` evaluated at `(m(T) − K)/h`.
pub fn digital_weight(blk: &FixedStrikeBlocks, w_k: f64, m_t: f64, strike: f64, h: f64) -> Result<f64> {
    let du = skorohod_u(blk, w_k)?;
    let z = (m_t - strike) / h;
    let ph = phi(z);
    Ok(ph * blk.g * du - ph * blk.a / blk.l - blk.g / h * phi_prime(z))
}

/// Intermediate quantities of the two-variable weight for one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoticBlocks {
    pub a1: MalliavinJet,
    pub a2: MalliavinJet,
    pub b1: MalliavinJet,
    pub b2: MalliavinJet,
    pub g: MalliavinJet,
    pub t: MalliavinJet,
    pub u1: MalliavinJet,
    pub u2: MalliavinJet,
    /// `δ(U_1 T_k)`
    pub sk1: f64,
    /// `δ(s U_2 G_k)`
    pub sk2: f64,
}

impl ExoticBlocks {
    pub fn weight(&self) -> f64 {
        self.sk1 - self.sk2
    }
}

/// Builds the jets for `X = K(T)`, `Y = m(T)` and evaluates both Skorohod
/// integrals (uniform weights).
pub fn exotic_blocks(
    bundle: &PathBundle,
    loadings: &VolLoadings,
    market: &MarketConfig,
    k: usize,
) -> Result<ExoticBlocks> {
    let mm = market.assets();
    let n = market.steps();
    let d = mm * n;
    let times = &market.monitoring_times;
    let w = 1.0 / d as f64;
    let x_k = market.spots[k];

    let mut ca1 = vec![0.0; d];
    let mut ca2 = vec![0.0; d];
    let mut cb1 = vec![0.0; d];
    let mut cb2 = vec![0.0; d];
    for i in 0..mm {
        let s = loadings.get(i, k);
        for (j, &tj) in times.iter().enumerate() {
            ca2[i * n + j] = w * s * tj;
            cb2[i * n + j] = w * s * tj * tj * 0.5;
        }
        let cap = times[n - 1];
        ca1[i * n + n - 1] = s * cap / mm as f64;
        cb1[i * n + n - 1] = s * cap * cap * 0.5 / mm as f64;
    }
    let mut cg = vec![0.0; d];
    cg[k * n..(k + 1) * n].fill(w / x_k);
    let mut ct = vec![0.0; d];
    ct[k * n + n - 1] = 1.0 / (mm as f64 * x_k);

    let a1 = MalliavinJet::linear(bundle, loadings, k, &ca1);
    let a2 = MalliavinJet::linear(bundle, loadings, k, &ca2);
    let b1 = MalliavinJet::linear(bundle, loadings, k, &cb1);
    let b2 = MalliavinJet::linear(bundle, loadings, k, &cb2);
    let g = MalliavinJet::linear(bundle, loadings, k, &cg);
    let t = MalliavinJet::linear(bundle, loadings, k, &ct);

    let det = &(&a1 * &b2) - &(&a2 * &b1);
    let det_scale = (a1.value * b2.value).abs() + (a2.value * b1.value).abs();
    check(det.value, det_scale, "a1 b2 - a2 b1 vanishes")?;
    check(g.value, g.value.abs().max(f64::MIN_POSITIVE), "G_k vanishes")?;
    check(t.value, t.value.abs().max(f64::MIN_POSITIVE), "T_k vanishes")?;

    let u1 = (&b2 - &(&b1 * &g.div(&t))).div(&det);
    let u2 = (&(&a2 * &t.div(&g)) - &a1).div(&det);

    let w_t = bundle.w_terminal[k];
    let s_dw = market.maturity * w_t - bundle.w_time_integral[k];
    let sk1 = u1.value * t.value * w_t - u1.value * t.integral(times) - t.value * u1.integral(times);
    let sk2 = u2.value * g.value * s_dw - g.value * u2.s_integral(times) - u2.value * g.s_integral(times);
    Ok(ExoticBlocks {
        a1,
        a2,
        b1,
        b2,
        g,
        t,
        u1,
        u2,
        sk1,
        sk2,
    })
}

pub fn weight_asian_fixed(bundle: &PathBundle, loadings: &VolLoadings, market: &MarketConfig, k: usize) -> Result<f64> {
    let blk = fixed_strike_blocks(bundle, loadings, market, &market.weights);
    skorohod_fixed(&blk[k], bundle.w_terminal[k])
}

pub fn weight_asian_floating(
    bundle: &PathBundle,
    loadings: &VolLoadings,
    market: &MarketConfig,
    k: usize,
) -> Result<f64> {
    let blk = floating_strike_blocks(bundle, loadings, market);
    skorohod_floating(&blk[k], bundle.w_terminal[k])
}

pub fn weight_digital(
    bundle: &PathBundle,
    loadings: &VolLoadings,
    market: &MarketConfig,
    k: usize,
    strike: f64,
    params: &LocalizationParams,
) -> Result<f64> {
    let blk = fixed_strike_blocks(bundle, loadings, market, &market.weights);
    let m_t = crate::payoffs::average(bundle, &market.weights);
    digital_weight(&blk[k], bundle.w_terminal[k], m_t, strike, params.h_digital)
}

pub fn weight_exotic(bundle: &PathBundle, loadings: &VolLoadings, market: &MarketConfig, k: usize) -> Result<f64> {
    Ok(exotic_blocks(bundle, loadings, market, k)?.weight())
}

/// Unlocalized zero-mean weights of one path, one per component.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub skorohod: Vec<f64>,
}

/// Bare Skorohod weights for the family belonging to `spec`: `δ(G/L)`,
/// `δ(F/M)`, `δ(u)` for the digital, and `δ(U_1 T) − δ(s U_2 G)`.
pub fn weight_set(
    spec: &PayoffSpec,
    bundle: &PathBundle,
    loadings: &VolLoadings,
    market: &MarketConfig,
) -> Result<WeightSet> {
    let w = spec.weights(market);
    let skorohod = match spec.kind {
        PayoffKind::AsianFixed => fixed_strike_blocks(bundle, loadings, market, &w)
            .iter()
            .enumerate()
            .map(|(k, b)| skorohod_fixed(b, bundle.w_terminal[k]))
            .collect::<Result<_>>()?,
        PayoffKind::Digital => fixed_strike_blocks(bundle, loadings, market, &w)
            .iter()
            .enumerate()
            .map(|(k, b)| skorohod_u(b, bundle.w_terminal[k]))
            .collect::<Result<_>>()?,
        PayoffKind::AsianFloating => floating_strike_blocks(bundle, loadings, market)
            .iter()
            .enumerate()
            .map(|(k, b)| skorohod_floating(b, bundle.w_terminal[k]))
            .collect::<Result<_>>()?,
        PayoffKind::Exotic => (0..market.assets())
            .map(|k| weight_exotic(bundle, loadings, market, k))
            .collect::<Result<_>>()?,
    };
    Ok(WeightSet { skorohod })
}

/// Per-component localization widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationParams {
    /// Half-width of the call ramp around the strike.
    pub delta_call: f64,
    /// Scale of the digital kernel.
    pub h_digital: f64,
}

/// Ramp `H_δ` on `[K − δ, K + δ]`.
pub fn ramp(z: f64, strike: f64, delta: f64) -> f64 {
    ((z - strike + delta) / (2.0 * delta)).clamp(0.0, 1.0)
}

/// `G_δ(z) = ∫_{-∞}^z H_δ`.
pub fn ramp_integral(z: f64, strike: f64, delta: f64) -> f64 {
    if z <= strike - delta {
        0.0
    } else if z >= strike + delta {
        z - strike
    } else {
        let u = z - strike + delta;
        u * u / (4.0 * delta)
    }
}

/// `F_δ(z) = (z − K)⁺ − G_δ(z)`; zero outside `(K − δ, K + δ)`.
pub fn localized_residual(z: f64, strike: f64, delta: f64) -> f64 {
    if (z - strike).abs() >= delta {
        0.0
    } else {
        (z - strike).max(0.0) - ramp_integral(z, strike, delta)
    }
}

/// `H_δ(Z) ∂Z/∂x_k + F_δ(Z) · weight`; the weight is only evaluated when
/// `F_δ(Z) ≠ 0`.
pub fn localized_call_contribution(
    z: f64,
    strike: f64,
    delta: f64,
    dz_dx: f64,
    weight: impl FnOnce() -> Result<f64>,
) -> Result<f64> {
    let h = ramp(z, strike, delta);
    let f = localized_residual(z, strike, delta);
    let pathwise = if h == 0.0 { 0.0 } else { h * dz_dx };
    if f == 0.0 {
        Ok(pathwise)
    } else {
        Ok(pathwise + f * weight()?)
    }
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
}

/// Adaptive call half-width from pilot pairs `(Z − K, weight)`:
/// `Var[(Z − K) w] / (scale · Var[w])`, i.e. the variance ratio taken on the
/// payoff variable measured in units of `scale`, then converted back to price
/// units. Falls back to `scale / 100` when the weight variance vanishes.
pub fn adaptive_call_delta(pilot: &[(f64, f64)], scale: f64) -> f64 {
    let vw = sample_variance(pilot.iter().map(|p| p.1));
    let vzw = sample_variance(pilot.iter().map(|p| p.0 * p.1));
    let delta = vzw / (scale * vw);
    if vw > 0.0 && delta.is_finite() && delta > 0.0 {
        delta
    } else {
        log::warn!("pilot weight variance is zero; using δ = 1% of {scale}");
        0.01 * scale
    }
}

/// Adaptive digital scale `Var[δ(u)]^{-1/2}`; falls back to `strike / 100`.
pub fn adaptive_digital_h(pilot_delta_u: &[f64], strike: f64) -> f64 {
    let v = sample_variance(pilot_delta_u.iter().copied());
    let h = v.powf(-0.5);
    if v > 0.0 && h.is_finite() {
        h
    } else {
        log::warn!("pilot δ(u) variance is zero; using h = 1% of {strike}");
        0.01 * strike
    }
}
