//! Values paired with their Malliavin derivative along one Brownian
//! component.
//!
//! Every functional used by the weights is a smooth function of the asset
//! values on the monitoring grid, so its derivative `D_s^k F` is constant on
//! each monitoring interval `(t_{l-1}, t_l]`. A jet stores one sample per
//! interval; sums, products and quotients follow the usual rules pointwise.

use std::ops::{Add, Mul, Neg, Sub};

use crate::market::{PathBundle, VolLoadings};

#[derive(Debug, Clone, PartialEq)]
pub struct MalliavinJet {
    pub value: f64,
    pub d: Vec<f64>,
}

impl MalliavinJet {
    pub fn constant(value: f64, intervals: usize) -> Self {
        Self {
            value,
            d: vec![0.0; intervals],
        }
    }

    /// `F = Σ_ij c_ij S_i(t_j)` with deterministic coefficients (row-major
    /// `M × N`), differentiated along component `k`.
    pub fn linear(bundle: &PathBundle, loadings: &VolLoadings, k: usize, coeffs: &[f64]) -> Self {
        let m = bundle.assets();
        let n = bundle.steps();
        let mut d = vec![0.0; n];
        let mut value = 0.0;
        for i in 0..m {
            let sig = loadings.get(i, k);
            let row = &coeffs[i * n..(i + 1) * n];
            let mut tail = 0.0;
            for l in (0..n).rev() {
                let term = row[l] * bundle.at(i, l);
                tail += term;
                value += term;
                d[l] += sig * tail;
            }
        }
        Self { value, d }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            d: self.d.iter().map(|x| x * c).collect(),
        }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        let inv = 1.0 / rhs.value;
        let inv2 = inv * inv;
        Self {
            value: self.value * inv,
            d: self
                .d
                .iter()
                .zip(&rhs.d)
                .map(|(a, b)| (a * rhs.value - self.value * b) * inv2)
                .collect(),
        }
    }

    /// `∫_0^T D_s F ds`
    pub fn integral(&self, times: &[f64]) -> f64 {
        let mut prev = 0.0;
        self.d
            .iter()
            .zip(times)
            .map(|(d, &t)| {
                let v = d * (t - prev);
                prev = t;
                v
            })
            .sum()
    }

    /// `∫_0^T s D_s F ds`
    pub fn s_integral(&self, times: &[f64]) -> f64 {
        let mut prev = 0.0;
        self.d
            .iter()
            .zip(times)
            .map(|(d, &t)| {
                let v = d * 0.5 * (t * t - prev * prev);
                prev = t;
                v
            })
            .sum()
    }
}

impl Add for &MalliavinJet {
    type Output = MalliavinJet;
    fn add(self, rhs: Self) -> MalliavinJet {
        MalliavinJet {
            value: self.value + rhs.value,
            d: self.d.iter().zip(&rhs.d).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &MalliavinJet {
    type Output = MalliavinJet;
    fn sub(self, rhs: Self) -> MalliavinJet {
        MalliavinJet {
            value: self.value - rhs.value,
            d: self.d.iter().zip(&rhs.d).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &MalliavinJet {
    type Output = MalliavinJet;
    fn mul(self, rhs: Self) -> MalliavinJet {
        MalliavinJet {
            value: self.value * rhs.value,
            d: self
                .d
                .iter()
                .zip(&rhs.d)
                .map(|(a, b)| a * rhs.value + self.value * b)
                .collect(),
        }
    }
}

impl Neg for &MalliavinJet {
    type Output = MalliavinJet;
    fn neg(self) -> MalliavinJet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{simulate_path, MarketConfig};
    use proptest::prelude::*;

    fn jet(value: f64, d: &[f64]) -> MalliavinJet {
        MalliavinJet { value, d: d.to_vec() }
    }

    #[test]
    fn integrals_over_uneven_grid() {
        let j = jet(0.0, &[1.0, 2.0, 3.0]);
        let t = [0.5, 1.0, 2.0];
        assert_eq!(j.integral(&t), 0.5 + 1.0 + 3.0);
        assert_eq!(j.s_integral(&t), 0.125 + 2.0 * 0.375 + 3.0 * 1.5);
    }

    proptest! {
        // Rational functions of one variable with dx = 1 give exact derivatives.
        #[test]
        fn quotient_rule_on_rational_functions(x in 0.5..5.0f64, a in -3.0..3.0f64, b in 0.1..3.0f64) {
            let xj = jet(x, &[1.0]);
            let num = &(&xj * &xj) + &MalliavinJet { value: a, d: vec![0.0] };
            let den = &xj.scale(b) + &MalliavinJet { value: 1.0, d: vec![0.0] };
            let q = num.div(&den);
            let want = (2.0 * x * (b * x + 1.0) - (x * x + a) * b) / (b * x + 1.0).powi(2);
            prop_assert!((q.value - (x * x + a) / (b * x + 1.0)).abs() < 1e-12);
            prop_assert!((q.d[0] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn linear_jet_matches_increment_bumps() {
        let mk = MarketConfig::reference(3, 4);
        let s = VolLoadings::new(&mk).unwrap();
        let z: Vec<f64> = (0..12).map(|c| 0.4 * (c as f64 * 0.9).sin()).collect();
        let coeffs: Vec<f64> = (0..12).map(|c| 0.01 * (1 + c % 5) as f64).collect();
        let base = simulate_path(&mk, &s, None, &z).unwrap();
        let f = |b: &PathBundle| b.s.iter().zip(&coeffs).map(|(a, w)| a * w).sum::<f64>();
        for k in 0..3 {
            let j = MalliavinJet::linear(&base, &s, k, &coeffs);
            assert!((j.value - f(&base)).abs() < 1e-12);
            for l in 0..4 {
                let h = 1e-6;
                let mut zb = z.clone();
                zb[l * 3 + k] += h / 0.25f64.sqrt();
                let fd = (f(&simulate_path(&mk, &s, None, &zb).unwrap()) - f(&base)) / h;
                assert!((fd - j.d[l]).abs() <= 1e-4 * j.d[l].abs().max(1e-8), "k {k} l {l}");
            }
        }
    }
}
