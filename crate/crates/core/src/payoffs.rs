//! Contract payoffs and the aggregates the weights are built from.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use crate::error::{config_err, Error};
use crate::market::{MarketConfig, PathBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayoffKind {
    /// `(m(T) − K)⁺`
    AsianFixed,
    /// `(m(T) − K(T))⁺` with `K(T) = Σ_i S_i(T)/M`
    AsianFloating,
    /// `1{m(T) ≥ K}`
    Digital,
    /// `max(m(T) − K, K(T) − K, 0)`
    Exotic,
}

impl PayoffKind {
    pub const ALL: [PayoffKind; 4] = [Self::AsianFixed, Self::AsianFloating, Self::Digital, Self::Exotic];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AsianFixed => "asian-fixed",
            Self::AsianFloating => "asian-floating",
            Self::Digital => "digital",
            Self::Exotic => "exotic",
        }
    }

    /// Floating and exotic contracts always average uniformly.
    pub fn forces_uniform_weights(self) -> bool {
        matches!(self, Self::AsianFloating | Self::Exotic)
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PayoffKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "asian-fixed" | "fixed" | "call" => Ok(Self::AsianFixed),
            "asian-floating" | "floating" => Ok(Self::AsianFloating),
            "digital" | "digital-fixed" => Ok(Self::Digital),
            "exotic" | "exotic-max" => Ok(Self::Exotic),
            other => Err(config_err(format!("unknown payoff kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    /// Ignored by the floating-strike contract.
    pub strike: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, strike: f64) -> Self {
        Self { kind, strike }
    }

    /// The averaging weights the contract actually uses.
    pub fn weights<'a>(&self, market: &'a MarketConfig) -> Cow<'a, [f64]> {
        if self.kind.forces_uniform_weights() {
            let d = market.dimension();
            Cow::Owned(vec![1.0 / d as f64; d])
        } else {
            Cow::Borrowed(&market.weights)
        }
    }

    /// The strike the localization is centred on.
    pub fn localization_strike(&self) -> f64 {
        match self.kind {
            PayoffKind::AsianFloating => 0.0,
            _ => self.strike,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.kind != PayoffKind::AsianFloating && !(self.strike.is_finite() && self.strike > 0.0) {
            return Err(config_err(format!("payoff.strike: {} is not a positive number", self.strike)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffEval {
    pub value: f64,
    pub m_t: f64,
    /// Terminal basket average `K(T)`.
    pub k_t: f64,
    /// `G_k = ∂m(T)/∂x_k`
    pub g: Vec<f64>,
    /// `T_k = ∂K(T)/∂x_k = S_k(T)/(M x_k)`
    pub t: Vec<f64>,
}

/// `m(T) = Σ_ij w_ij S_i(t_j)`.
pub fn average(bundle: &PathBundle, weights: &[f64]) -> f64 {
    bundle.s.iter().zip(weights).map(|(s, w)| s * w).sum()
}

/// `K(T) = Σ_i S_i(T)/M`.
pub fn terminal_average(bundle: &PathBundle) -> f64 {
    let m = bundle.assets();
    (0..m).map(|i| bundle.terminal(i)).sum::<f64>() / m as f64
}

pub fn evaluate(spec: &PayoffSpec, bundle: &PathBundle, market: &MarketConfig) -> PayoffEval {
    let w = spec.weights(market);
    let m = market.assets();
    let n = market.steps();
    let m_t = average(bundle, &w);
    let k_t = terminal_average(bundle);
    let g = (0..m)
        .map(|k| {
            let s: f64 = bundle.asset_path(k).iter().zip(&w[k * n..(k + 1) * n]).map(|(s, w)| s * w).sum();
            s / market.spots[k]
        })
        .collect();
    let t = (0..m).map(|k| bundle.terminal(k) / (m as f64 * market.spots[k])).collect();
    let value = payoff_value(spec, m_t, k_t);
    PayoffEval { value, m_t, k_t, g, t }
}

pub fn payoff_value(spec: &PayoffSpec, m_t: f64, k_t: f64) -> f64 {
    let k = spec.strike;
    match spec.kind {
        PayoffKind::AsianFixed => (m_t - k).max(0.0),
        PayoffKind::AsianFloating => (m_t - k_t).max(0.0),
        PayoffKind::Digital => {
            if m_t >= k {
                1.0
            } else {
                0.0
            }
        }
        PayoffKind::Exotic => (m_t - k).max(k_t - k).max(0.0),
    }
}

pub fn discount(value: f64, rate: f64, maturity: f64) -> f64 {
    value * (-rate * maturity).exp()
}
