//! Densities of `log χ²₁(λ)` and the normal-mixture approximation used by every sampler.
//!
//! `U = log((β + Z)²)` with `Z ~ N(0, 1)` follows `log χ²₁(λ)` with non-centrality
//! `λ = β²`. Its density is a Poisson mixture over `j` of the central density tilted by
//! `e^{uj}`; replacing the central density with the ten-component normal mixture of
//! [`MixtureTable::standard`] and truncating at `j = J` gives a `K(J+1)` component
//! normal mixture whose weights depend on β only.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::real::Real;

/// Default truncation order of the non-central series.
pub const DEFAULT_ORDER: usize = 2;

/// Hard cap on the number of series terms used by [`exact_log_chisq1_density`].
pub const MAX_SERIES_TERMS: usize = 200;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One row of the base ten-component table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    /// Mixture probability.
    pub p: f64,
    /// Location.
    pub m: f64,
    /// Variance.
    pub v2: f64,
    /// Intercept of the linearisation of `exp(ε*/2)` around the component mean.
    pub a: f64,
    /// Slope of the same linearisation.
    pub b: f64,
}

/// The published ten-component approximation of `log χ²₁(0)` with leverage constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTable {
    rows: Vec<MixtureComponent>,
}

const STANDARD_ROWS: [(f64, f64, f64, f64, f64); 10] = [
    (0.00609, 1.92677, 0.11265, 1.01418, 0.50710),
    (0.04775, 1.34744, 0.17788, 1.02248, 0.51124),
    (0.13057, 0.73504, 0.26768, 1.03403, 0.51701),
    (0.20674, 0.02266, 0.40611, 1.05207, 0.52604),
    (0.22715, -0.85173, 0.62699, 1.08153, 0.54076),
    (0.18842, -1.97278, 0.98583, 1.13114, 0.56557),
    (0.12047, -3.46788, 1.57469, 1.21754, 0.60877),
    (0.05591, -5.55246, 2.54498, 1.37454, 0.68728),
    (0.01575, -8.68384, 4.16591, 1.68327, 0.84163),
    (0.00115, -14.65000, 7.33342, 2.50097, 1.25049),
];

impl MixtureTable {
    pub fn standard() -> Self {
        let rows = STANDARD_ROWS
            .iter()
            .map(|&(p, m, v2, a, b)| MixtureComponent { p, m, v2, a, b })
            .collect();
        Self { rows }
    }

    /// Builds a custom table; every probability and variance must be positive.
    pub fn new(rows: Vec<MixtureComponent>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("mixture table needs at least one row".into()));
        }
        if rows.iter().any(|r| !(r.p > 0.0 && r.v2 > 0.0) || !r.m.is_finite()) {
            return Err(Error::Domain("mixture rows need p > 0, v2 > 0 and finite m".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[MixtureComponent] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl Default for MixtureTable {
    fn default() -> Self {
        Self::standard()
    }
}

/// β-dependent `K × (J+1)` normal mixture approximating `log χ²₁(β²)`.
///
/// Components are stored row-major: index `i * (J + 1) + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureGrid<F> {
    lambda: F,
    order: usize,
    weights: Vec<F>,
    ln_weights: Vec<F>,
    means: Vec<F>,
    variances: Vec<F>,
    sds: Vec<F>,
    exp_half_means: Vec<F>,
    a: Vec<F>,
    b: Vec<F>,
    unnormalized_mass: F,
}

/// Builds the mixture for coefficient `beta` truncated at order `order`.
///
/// Unnormalised weights are `p_i exp(m_i j + j² v_i²/2) (β²/2)^j Γ(½) / (2^j j! Γ(½+j))`,
/// with `0⁰ = 1` so that `β = 0` returns the base table unchanged.
pub fn build_grid<F: Real>(beta: F, order: usize, table: &MixtureTable) -> MixtureGrid<F> {
    let lambda = beta * beta;
    let half_lambda = lambda.to_f64_lossy() / 2.0;
    let ncols = order + 1;
    let k = table.len();

    let mut raw = Vec::with_capacity(k * ncols);
    let mut means = Vec::with_capacity(k * ncols);
    for row in table.rows() {
        for j in 0..ncols {
            let jf = j as f64;
            let w = if j == 0 {
                row.p
            } else if half_lambda == 0.0 {
                0.0
            } else {
                let ln_coef = row.m * jf + jf * jf * row.v2 / 2.0 + jf * half_lambda.ln()
                    - jf * std::f64::consts::LN_2
                    - ln_gamma(jf + 1.0)
                    + ln_gamma(0.5)
                    - ln_gamma(0.5 + jf);
                row.p * ln_coef.exp()
            };
            raw.push(w);
            means.push(F::c(row.m + jf * row.v2));
        }
    }

    // The dropped e^{-λ/2} factor restores the share of the exact series kept by truncation.
    let total: f64 = raw.iter().sum();
    let mass = total * (-half_lambda).exp();

    let weights: Vec<F> = raw.iter().map(|&w| F::c(w / total)).collect();
    let ln_weights = weights.iter().map(|&w| w.ln()).collect();
    let variances: Vec<F> = table.rows().iter().map(|r| F::c(r.v2)).collect();
    let sds = variances.iter().map(|&v| v.sqrt()).collect();
    let exp_half_means = means.iter().map(|&m: &F| (m * F::c(0.5)).exp()).collect();

    MixtureGrid {
        lambda,
        order,
        weights,
        ln_weights,
        means,
        variances,
        sds,
        exp_half_means,
        a: table.rows().iter().map(|r| F::c(r.a)).collect(),
        b: table.rows().iter().map(|r| F::c(r.b)).collect(),
        unnormalized_mass: F::c(mass),
    }
}

impl<F: Real> MixtureGrid<F> {
    /// Non-centrality `λ = β²`.
    pub fn lambda(&self) -> F {
        self.lambda
    }

    /// Truncation order `J`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of base components `K`.
    pub fn n_base(&self) -> usize {
        self.variances.len()
    }

    /// Total number of components `K (J + 1)`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.order + 1) + j
    }

    /// Splits a flat component index into `(i, j)`.
    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / (self.order + 1), idx % (self.order + 1))
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn ln_weights(&self) -> &[F] {
        &self.ln_weights
    }

    pub fn means(&self) -> &[F] {
        &self.means
    }

    pub fn variances(&self) -> &[F] {
        &self.variances
    }

    pub fn weight(&self, i: usize, j: usize) -> F {
        self.weights[self.index(i, j)]
    }

    pub fn mean(&self, i: usize, j: usize) -> F {
        self.means[self.index(i, j)]
    }

    /// Variance `v_i²` of flat component `idx`.
    #[inline]
    pub fn variance_of(&self, idx: usize) -> F {
        self.variances[idx / (self.order + 1)]
    }

    #[inline]
    pub fn sd_of(&self, idx: usize) -> F {
        self.sds[idx / (self.order + 1)]
    }

    /// `exp(m̃_idx / 2)`
    #[inline]
    pub fn exp_half_mean_of(&self, idx: usize) -> F {
        self.exp_half_means[idx]
    }

    #[inline]
    pub fn a_of(&self, idx: usize) -> F {
        self.a[idx / (self.order + 1)]
    }

    #[inline]
    pub fn b_of(&self, idx: usize) -> F {
        self.b[idx / (self.order + 1)]
    }

    /// `Σ w_ij` before normalisation, e^{-λ/2} included: the share of the exact series retained
    /// by the truncation (up to the base mixture's own error).
    pub fn unnormalized_mass(&self) -> F {
        self.unnormalized_mass
    }

    /// Mixture density at `u`.
    pub fn density(&self, u: F) -> F {
        approx_density(u, self)
    }
}

/// Mixture approximation of the `log χ²₁(λ)` density at `u`.
pub fn approx_density<F: Real>(u: F, grid: &MixtureGrid<F>) -> F {
    let ln_sqrt_2pi = F::c(LN_SQRT_2PI);
    let half = F::c(0.5);
    grid.weights
        .iter()
        .zip(&grid.means)
        .enumerate()
        .filter(|(_, (&w, _))| w > F::zero())
        .map(|(idx, (&w, &m))| {
            let sd = grid.sd_of(idx);
            let z = (u - m) / sd;
            w * (-half * z * z - ln_sqrt_2pi).exp() / sd
        })
        .sum()
}

/// Exact density of `log χ²₁(λ)` at `u` from the Poisson-mixture series, certified to
/// absolute error below `tol`.
///
/// Consecutive terms have ratio `λeᵘ / (2(j+1)(2j+1))`; once that ratio drops below one the
/// remaining tail is bounded geometrically and the series stops when the bound is below `tol`.
pub fn exact_log_chisq1_density(u: f64, lambda: f64, tol: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("u must be finite, got {u}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!("non-centrality must be finite and >= 0, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let x = u.exp();
    let ln_central = (u - x) / 2.0 - LN_SQRT_2PI;
    if lambda == 0.0 {
        return Ok(ln_central.exp());
    }
    // f(u; λ) = eᵘ·p(eᵘ; 1, λ) ≤ exp(u/2 - (x+λ)/2 + √(λx)); nothing to sum below that.
    let ln_upper = u / 2.0 - (x + lambda) / 2.0 + (lambda * x).sqrt();
    if ln_upper < -745.0 {
        return Ok(0.0);
    }

    let mut ln_term = -lambda / 2.0 + ln_central;
    let mut sum = 0.0;
    for j in 0..MAX_SERIES_TERMS {
        let term = ln_term.exp();
        sum += term;
        let jf = j as f64;
        let ratio = lambda * x / (2.0 * (jf + 1.0) * (2.0 * jf + 1.0));
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < tol {
            return Ok(sum);
        }
        ln_term += ratio.ln();
    }
    Err(Error::numerical(format!(
        "log chi-square series at u={u}, lambda={lambda} did not reach tol={tol} within {MAX_SERIES_TERMS} terms"
    )))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `E[log χ²₁(β²)]` from `log((β + Z)²)`.
pub fn expected_log_chisq1<R: Rng + ?Sized>(beta: f64, n_mc: usize, rng: &mut R) -> Result<McEstimate> {
    if n_mc < 10_000 {
        return Err(Error::Domain(format!("need at least 10^4 Monte Carlo draws, got {n_mc}")));
    }
    if !beta.is_finite() {
        return Err(Error::Domain("beta must be finite".into()));
    }
    // Welford accumulation keeps the variance stable for large n_mc.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n_mc {
        let z: f64 = rng.sample(StandardNormal);
        let v = ((beta + z) * (beta + z)).ln();
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n_mc - 1) as f64;
    Ok(McEstimate { mean, std_error: (var / n_mc as f64).sqrt() })
}
