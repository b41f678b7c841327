//! Orthogonal linear transformation of the normal inputs.
//!
//! Column `k` maximizes the squared derivative of the payoff along it at the
//! expansion point `ε̂_k` (k−1 leading ones), subject to unit norm and
//! orthogonality to the earlier columns. The maximizer is the projected
//! gradient, normalized; the sign is always `+`.

use crate::error::Result;
use crate::market::{linear_functional_gradient, simulate_into, MarketConfig, PathBundle, VolLoadings};
use crate::payoffs::{average, terminal_average, PayoffKind, PayoffSpec};

/// Projected gradients shorter than this are treated as zero.
pub const ZERO_GRADIENT: f64 = 1e-14;

/// Orthogonal `d × d` matrix `A`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct LtMatrix {
    d: usize,
    cols: Vec<f64>,
    fallback_columns: Vec<usize>,
    first_objective: f64,
}

impl LtMatrix {
    pub fn identity(d: usize) -> Self {
        let mut cols = vec![0.0; d * d];
        for c in 0..d {
            cols[c * d + c] = 1.0;
        }
        Self {
            d,
            cols,
            fallback_columns: Vec::new(),
            first_objective: 0.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.cols[c * self.d..(c + 1) * self.d]
    }

    /// `A[r][c]`
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.cols[c * self.d + r]
    }

    /// Columns where the projected gradient vanished and a basis vector was
    /// used instead.
    pub fn fallback_columns(&self) -> &[usize] {
        &self.fallback_columns
    }

    /// `(∂g/∂ε_1)²` at the origin for the first column.
    pub fn first_column_objective(&self) -> f64 {
        self.first_objective
    }

    /// `A ε`
    pub fn apply(&self, eps: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.d];
        for (c, &e) in eps.iter().enumerate() {
            if e != 0.0 {
                for (zr, a) in z.iter_mut().zip(self.column(c)) {
                    *zr += e * a;
                }
            }
        }
        z
    }

    /// Row-major batch: `out[p] = A eps[p]` for `n` points.
    pub fn apply_batch(&self, eps: &[f64], n: usize, out: &mut [f64]) {
        let d = self.d;
        assert_eq!(eps.len(), n * d);
        assert_eq!(out.len(), n * d);
        // out (n×d) = eps (n×d) · cols (d×d), cols row c = column c of A
        unsafe {
            matrixmultiply::dgemm(
                n,
                d,
                d,
                1.0,
                eps.as_ptr(),
                d as isize,
                1,
                self.cols.as_ptr(),
                d as isize,
                1,
                0.0,
                out.as_mut_ptr(),
                d as isize,
                1,
            );
        }
    }

    /// Largest entry of `|AᵀA − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a..d {
                let dot: f64 = self.column(a).iter().zip(self.column(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// Largest entry of `|AAᵀ − I|`.
    pub fn row_orthonormality_error(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for r in 0..d {
            for s in r..d {
                let dot: f64 = (0..d).map(|c| self.get(r, c) * self.get(s, c)).sum();
                let want = if r == s { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtColumn {
    pub column: Vec<f64>,
    /// Squared derivative along the column.
    pub objective: f64,
    pub fallback: bool,
}

fn project_out(v: &mut [f64], previous: &[&[f64]]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for p in previous {
            let dot: f64 = p.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, a) in v.iter_mut().zip(p.iter()) {
                *x -= dot * a;
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Column maximizing `(gradient · a)²` over unit `a` orthogonal to
/// `previous`. A vanishing projected gradient falls back to the standard basis
/// vector least covered by the previous columns.
pub fn lt_column(gradient: &[f64], previous: &[&[f64]]) -> LtColumn {
    let d = gradient.len();
    let mut v = gradient.to_vec();
    project_out(&mut v, previous);
    let nv = norm(&v);
    if nv > ZERO_GRADIENT && nv > 1e-10 * norm(gradient) {
        v.iter_mut().for_each(|x| *x /= nv);
        return LtColumn {
            column: v,
            objective: nv * nv,
            fallback: false,
        };
    }
    let mut cover = vec![0.0; d];
    for p in previous {
        for (c, x) in cover.iter_mut().zip(p.iter()) {
            *c += x * x;
        }
    }
    let j = (0..d).fold(0, |best, j| if cover[j] < cover[best] - 1e-12 { j } else { best });
    LtColumn {
        column: basis_completion(d, j, previous),
        objective: 0.0,
        fallback: true,
    }
}

fn basis_completion(d: usize, j: usize, previous: &[&[f64]]) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[j] = 1.0;
    project_out(&mut v, previous);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Builds all `d` columns; `gradient(z, out)` writes `∇g` at the transformed
/// point `z = A ε̂_k = Σ_{c<k} A_{·c}`.
pub fn build_lt_with(d: usize, mut gradient: impl FnMut(&[f64], &mut [f64])) -> LtMatrix {
    let mut cols: Vec<f64> = Vec::with_capacity(d * d);
    let mut fallback_columns = Vec::new();
    let mut first_objective = 0.0;
    let mut z = vec![0.0; d];
    let mut g = vec![0.0; d];
    for k in 0..d {
        gradient(&z, &mut g);
        let previous: Vec<&[f64]> = cols.chunks(d).collect();
        let col = lt_column(&g, &previous);
        if k == 0 {
            first_objective = col.objective;
        }
        if col.fallback {
            fallback_columns.push(k);
        }
        for (zr, a) in z.iter_mut().zip(&col.column) {
            *zr += a;
        }
        cols.extend_from_slice(&col.column);
    }
    if !fallback_columns.is_empty() {
        log::info!("LT: {} of {d} columns completed without gradient", fallback_columns.len());
    }
    LtMatrix {
        d,
        cols,
        fallback_columns,
        first_objective,
    }
}

/// Coefficients `c_ij` of the aggregate the payoff is a function of at this
/// path, or `None` when the payoff is flat there.
fn active_aggregate(spec: &PayoffSpec, market: &MarketConfig, bundle: &PathBundle, w: &[f64]) -> Option<Vec<f64>> {
    let m = market.assets();
    let n = market.steps();
    let terminal = |scale: f64| {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            c[i * n + n - 1] = scale / m as f64;
        }
        c
    };
    let m_t = average(bundle, w);
    let k_t = terminal_average(bundle);
    match spec.kind {
        PayoffKind::Digital => Some(w.to_vec()),
        PayoffKind::AsianFixed => (m_t >= spec.strike).then(|| w.to_vec()),
        PayoffKind::AsianFloating => (m_t >= k_t).then(|| {
            let mut c = terminal(-1.0);
            c.iter_mut().zip(w).for_each(|(a, b)| *a += b);
            c
        }),
        PayoffKind::Exotic => {
            if m_t >= k_t {
                (m_t >= spec.strike).then(|| w.to_vec())
            } else {
                (k_t >= spec.strike).then(|| terminal(1.0))
            }
        }
    }
}

/// LT matrix for the option payoff (the digital uses `m(T)` as its
/// objective), with analytic gradients through the lognormal paths.
pub fn build_lt_matrix(market: &MarketConfig, spec: &PayoffSpec) -> Result<LtMatrix> {
    market.validate()?;
    let loadings = VolLoadings::new(market)?;
    let w = spec.weights(market).into_owned();
    let mut bundle = PathBundle::zeros(market.assets(), market.steps());
    Ok(build_lt_with(market.dimension(), |z, out| {
        simulate_into(market, &loadings, z, &mut bundle);
        match active_aggregate(spec, market, &bundle, &w) {
            Some(c) => linear_functional_gradient(market, &loadings, &bundle, &c, out),
            None => out.fill(0.0),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_payoff_first_column_is_normalized_gradient() {
        let b = vec![3.0, -1.0, 2.0, 0.5];
        let nb = norm(&b);
        let a = build_lt_with(4, |_, out| out.copy_from_slice(&b));
        for (x, y) in a.column(0).iter().zip(&b) {
            assert!((x - y / nb).abs() < 1e-15);
        }
        assert!((a.first_column_objective() - nb * nb).abs() < 1e-10);
        assert_eq!(a.fallback_columns(), &[1, 2, 3]);
        assert!(a.orthonormality_error() < 1e-12);
    }

    #[test]
    fn one_dimension() {
        let a = build_lt_with(1, |_, out| out[0] = -2.0);
        assert_eq!(a.column(0), &[-1.0]);
        let a = build_lt_with(1, |_, out| out[0] = 0.0);
        assert_eq!(a.column(0), &[1.0]);
    }

    #[test]
    fn constant_payoff_gives_identity() {
        let a = build_lt_with(5, |_, out| out.fill(0.0));
        assert_eq!(a, {
            let mut id = LtMatrix::identity(5);
            id.fallback_columns = (0..5).collect();
            id
        });
    }

    #[test]
    fn orthogonal_gradient_matches_grid_search() {
        let e1 = [1.0, 0.0, 0.0];
        for g in [[0.0, 0.6, 0.8], [1.0, 2.0, -2.0]] {
            let col = lt_column(&g, &[&e1]);
            let mut best = 0.0f64;
            let steps = 2000;
            for a in 0..=steps {
                let theta = std::f64::consts::PI * a as f64 / steps as f64;
                for b in 0..steps {
                    let phi = 2.0 * std::f64::consts::PI * b as f64 / steps as f64;
                    let v = [theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()];
                    if v[0].abs() < 2e-3 {
                        let o = (g[0] * v[0] + g[1] * v[1] + g[2] * v[2]).powi(2);
                        best = best.max(o);
                    }
                }
            }
            assert!((col.objective - best).abs() < 2e-2 * col.objective, "{} vs {best}", col.objective);
            let proj = [0.0, g[1], g[2]];
            assert!((col.objective - (proj[1] * proj[1] + proj[2] * proj[2])).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_market_matrix_is_orthonormal() {
        for kind in PayoffKind::ALL {
            let mk = MarketConfig::reference(4, 8);
            let a = build_lt_matrix(&mk, &PayoffSpec::new(kind, 100.0)).unwrap();
            assert!(a.orthonormality_error() < 1e-12, "{kind}");
            assert!(a.row_orthonormality_error() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn first_column_beats_random_directions() {
        let mk = MarketConfig::reference(3, 6);
        let spec = PayoffSpec::new(PayoffKind::AsianFixed, 100.0);
        let a = build_lt_matrix(&mk, &spec).unwrap();
        let s = VolLoadings::new(&mk).unwrap();
        let mut bundle = PathBundle::zeros(3, 6);
        simulate_into(&mk, &s, &[0.0; 18], &mut bundle);
        let mut g = vec![0.0; 18];
        linear_functional_gradient(&mk, &s, &bundle, &mk.weights, &mut g);
        let along = |v: &[f64]| v.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().powi(2);
        let best = along(a.column(0));
        assert!((best - norm(&g).powi(2)).abs() < 1e-10);
        assert!((a.first_column_objective() - best).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let mut v: Vec<f64> = (0..18).map(|_| rng.random::<f64>() - 0.5).collect();
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            assert!(along(&v) <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn batch_apply_matches_single() {
        let mk = MarketConfig::reference(2, 5);
        let a = build_lt_matrix(&mk, &PayoffSpec::new(PayoffKind::Exotic, 100.0)).unwrap();
        let eps: Vec<f64> = (0..30).map(|c| (c as f64 * 0.61).sin()).collect();
        let mut out = vec![0.0; 30];
        a.apply_batch(&eps, 3, &mut out);
        for p in 0..3 {
            let z = a.apply(&eps[p * 10..(p + 1) * 10]);
            for (x, y) in z.iter().zip(&out[p * 10..(p + 1) * 10]) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }
}
