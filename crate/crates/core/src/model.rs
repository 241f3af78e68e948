//! SV-in-mean model: parameters, priors, exact densities, data transformation and simulation.
//!
//! ```text
//! y_t     = β exp(h_t/2) + ε_t exp(h_t/2)
//! h_{t+1} = μ + φ(h_t − μ) + η_t,      (ε_t, η_t) ~ N(0, [[1, ρσ], [ρσ, σ²]])
//! h_1     ~ N(μ, σ²/(1 − φ²))
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::state_space::LatentPath;

/// Default offset `c` in `y* = log(y² + c)`.
pub const DEFAULT_OFFSET: f64 = 1e-7;

/// The four model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Plain SV: β fixed at zero, no leverage.
    Sv,
    /// SV in mean.
    Svm,
    /// SV with leverage, β fixed at zero.
    Svl,
    /// SV in mean with leverage.
    Svml,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Sv, ModelKind::Svm, ModelKind::Svl, ModelKind::Svml];

    pub fn has_beta(self) -> bool {
        matches!(self, ModelKind::Svm | ModelKind::Svml)
    }

    pub fn has_leverage(self) -> bool {
        matches!(self, ModelKind::Svl | ModelKind::Svml)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sv => "sv",
            ModelKind::Svm => "svm",
            ModelKind::Svl => "svl",
            ModelKind::Svml => "svml",
        }
    }

    /// Names of the free parameters, in sampler order.
    pub fn param_names(self) -> Vec<&'static str> {
        let mut names = vec!["mu", "phi", "sigma2"];
        if self.has_beta() {
            names.push("beta");
        }
        if self.has_leverage() {
            names.push("rho");
        }
        names
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sv" => Ok(ModelKind::Sv),
            "svm" => Ok(ModelKind::Svm),
            "svl" => Ok(ModelKind::Svl),
            "svml" => Ok(ModelKind::Svml),
            other => Err(Error::Config(format!("unknown model '{other}' (expected sv, svm, svl or svml)"))),
        }
    }
}

/// θ = (μ, φ, σ², β[, ρ]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams<F> {
    pub mu: F,
    pub phi: F,
    pub sigma2: F,
    pub beta: F,
    /// `None` for models without leverage.
    pub rho: Option<F>,
}

impl<F: Real> SvmParams<F> {
    pub fn new(mu: F, phi: F, sigma2: F, beta: F, rho: Option<F>) -> Result<Self> {
        let p = Self { mu, phi, sigma2, beta, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.beta.is_finite()) {
            return Err(Error::Domain("mu and beta must be finite".into()));
        }
        if !(self.phi.abs() < F::one()) {
            return Err(Error::Domain(format!("|phi| must be < 1, got {}", self.phi)));
        }
        if !(self.sigma2 > F::zero() && self.sigma2.is_finite()) {
            return Err(Error::Domain(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if let Some(rho) = self.rho {
            if !(rho.abs() < F::one()) {
                return Err(Error::Domain(format!("|rho| must be < 1, got {rho}")));
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> F {
        self.sigma2.sqrt()
    }

    pub fn rho_or_zero(&self) -> F {
        self.rho.unwrap_or_else(F::zero)
    }

    /// Stationary variance `σ²/(1 − φ²)`.
    pub fn stationary_var(&self) -> F {
        self.sigma2 / (F::one() - self.phi * self.phi)
    }
}

/// Prior hyperparameters:
/// `μ ~ N(mu_mean, mu_var)`, `(φ+1)/2 ~ Beta(phi_a, phi_b)`, `σ² ~ IG(n0/2, s0/2)`,
/// `β ~ N(beta_mean, beta_var)`, `ρ ~ U(−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub mu_mean: f64,
    pub mu_var: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub sigma_n0: f64,
    pub sigma_s0: f64,
    pub beta_mean: f64,
    pub beta_var: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            mu_mean: 0.0,
            mu_var: 9.0,
            phi_a: 1.0,
            phi_b: 1.0,
            sigma_n0: 0.001,
            sigma_s0: 0.001,
            beta_mean: 0.0,
            beta_var: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu_mean.is_finite()
            && self.mu_var > 0.0
            && self.phi_a > 0.0
            && self.phi_b > 0.0
            && self.sigma_n0 > 0.0
            && self.sigma_s0 > 0.0
            && self.beta_mean.is_finite()
            && self.beta_var > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid prior hyperparameters: {self:?}")))
        }
    }

    pub fn ln_mu(&self, mu: f64) -> f64 {
        f64::ln_normal_pdf(mu, self.mu_mean, self.mu_var)
    }

    /// Density of φ itself (the Beta density of `(φ+1)/2` times the 1/2 Jacobian).
    pub fn ln_phi(&self, phi: f64) -> f64 {
        let x = (phi + 1.0) / 2.0;
        let ln_beta_fn = ln_gamma(self.phi_a) + ln_gamma(self.phi_b) - ln_gamma(self.phi_a + self.phi_b);
        (self.phi_a - 1.0) * x.ln() + (self.phi_b - 1.0) * (1.0 - x).ln() - ln_beta_fn - std::f64::consts::LN_2
    }

    pub fn ln_sigma2(&self, sigma2: f64) -> f64 {
        let shape = self.sigma_n0 / 2.0;
        let scale = self.sigma_s0 / 2.0;
        shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * sigma2.ln() - scale / sigma2
    }

    pub fn ln_beta(&self, beta: f64) -> f64 {
        f64::ln_normal_pdf(beta, self.beta_mean, self.beta_var)
    }

    pub fn ln_rho(&self, _rho: f64) -> f64 {
        -std::f64::consts::LN_2
    }
}

/// Exact normalised log prior density of the free parameters of `kind` at `params`.
pub fn log_prior<F: Real>(params: &SvmParams<F>, priors: &PriorSpec, kind: ModelKind) -> Result<F> {
    params.validate()?;
    let mut lp = priors.ln_mu(params.mu.to_f64_lossy())
        + priors.ln_phi(params.phi.to_f64_lossy())
        + priors.ln_sigma2(params.sigma2.to_f64_lossy());
    if kind.has_beta() {
        lp += priors.ln_beta(params.beta.to_f64_lossy());
    }
    if kind.has_leverage() {
        let rho = params
            .rho
            .ok_or_else(|| Error::Domain(format!("model {kind} needs rho")))?;
        lp += priors.ln_rho(rho.to_f64_lossy());
    }
    Ok(F::c(lp))
}

/// Transformed observations: `y*_t = log(y_t² + c)` and signs `d_t ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedData<F> {
    pub ystar: Vec<F>,
    pub sign: Vec<F>,
    pub offset: F,
}

impl<F> TransformedData<F> {
    pub fn len(&self) -> usize {
        self.ystar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ystar.is_empty()
    }
}

/// `d_t = +1` when `y_t ≥ 0` (zero included), `−1` otherwise.
pub fn transform<F: Real>(y: &[F], offset: F) -> Result<TransformedData<F>> {
    if !(offset > F::zero()) {
        return Err(Error::Domain(format!("offset c must be positive, got {offset}")));
    }
    let mut ystar = Vec::with_capacity(y.len());
    let mut sign = Vec::with_capacity(y.len());
    for (t, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Data { row: t + 1, msg: format!("non-finite observation {v}") });
        }
        ystar.push((v * v + offset).ln());
        sign.push(if v >= F::zero() { F::one() } else { -F::one() });
    }
    Ok(TransformedData { ystar, sign, offset })
}

/// `log f(y_t | h_t, θ)`: `y_t ~ N(β e^{h_t/2}, e^{h_t})`.
#[inline]
pub fn log_obs_density<F: Real>(y: F, h: F, params: &SvmParams<F>) -> F {
    let half = F::c(0.5);
    let resid = y - params.beta * (h * half).exp();
    -half * (F::ln_2pi() + h + resid * resid * (-h).exp())
}

/// Conditional mean of `h_{t+1}` given `(h_t, y_t)`; the leverage term vanishes without ρ.
#[inline]
pub fn transition_mean<F: Real>(h: F, y: F, params: &SvmParams<F>) -> F {
    let half = F::c(0.5);
    let base = params.mu + params.phi * (h - params.mu);
    match params.rho {
        Some(rho) => {
            let eps = (y - params.beta * (h * half).exp()) * (-h * half).exp();
            base + rho * params.sigma() * eps
        }
        None => base,
    }
}

/// Conditional variance `σ²(1 − ρ²)` (or `σ²`) of `h_{t+1}` given `(h_t, y_t)`.
#[inline]
pub fn transition_var<F: Real>(params: &SvmParams<F>) -> F {
    match params.rho {
        Some(rho) => params.sigma2 * (F::one() - rho * rho),
        None => params.sigma2,
    }
}

/// `log f(h_{t+1} | h_t, y_t, θ)`.
pub fn log_state_transition<F: Real>(h_next: F, h: F, y: F, params: &SvmParams<F>) -> F {
    F::ln_normal_pdf(h_next, transition_mean(h, y, params), transition_var(params))
}

/// `log f(y, h | θ)`: initial state, transitions and observations.
pub fn log_complete_likelihood<F: Real>(h: &[F], params: &SvmParams<F>, y: &[F]) -> Result<F> {
    if h.len() != y.len() || h.is_empty() {
        return Err(Error::Domain(format!("path length {} vs data length {}", h.len(), y.len())));
    }
    params.validate()?;
    let mut ll = F::ln_normal_pdf(h[0], params.mu, params.stationary_var());
    let var = transition_var(params);
    for t in 0..h.len() {
        ll = ll + log_obs_density(y[t], h[t], params);
        if t + 1 < h.len() {
            ll = ll + F::ln_normal_pdf(h[t + 1], transition_mean(h[t], y[t], params), var);
        }
    }
    Ok(ll)
}

/// Log posterior kernel of `(h, θ)` up to an additive constant: log prior plus
/// `log f(y, h | θ)`. The model variant follows `params.rho`; β always carries its prior.
pub fn log_posterior<F: Real>(h: &LatentPath<F>, params: &SvmParams<F>, priors: &PriorSpec, y: &[F]) -> Result<F> {
    let kind = if params.rho.is_some() { ModelKind::Svml } else { ModelKind::Svm };
    let lp = log_prior(params, priors, kind)?;
    Ok(lp + log_complete_likelihood(&h.h, params, y)?)
}

/// Simulates `(y, h)` of length `n`. The draw order (ε_t, then the independent part of
/// η_t) does not depend on θ, so equal seeds give common random numbers across parameter
/// values.
pub fn simulate<F: Real, R: Rng + ?Sized>(params: &SvmParams<F>, n: usize, rng: &mut R) -> Result<(Vec<F>, LatentPath<F>)> {
    if n == 0 {
        return Err(Error::Domain("simulation length must be at least 1".into()));
    }
    params.validate()?;
    let mut normal = || F::c(rng.sample::<f64, _>(StandardNormal));
    let half = F::c(0.5);
    let sigma = params.sigma();
    let rho = params.rho_or_zero();
    let ortho = sigma * (F::one() - rho * rho).sqrt();

    let mut h = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    h.push(params.mu + params.stationary_var().sqrt() * normal());
    for t in 0..n {
        let eps = normal();
        let vol = (h[t] * half).exp();
        y.push((params.beta + eps) * vol);
        let xi = normal();
        if t + 1 < n {
            let eta = rho * sigma * eps + ortho * xi;
            h.push(params.mu + params.phi * (h[t] - params.mu) + eta);
        }
    }
    Ok((y, LatentPath::new(h)))
}
