//! Conditionally linear Gaussian state space given mixture indicators.
//!
//! ```text
//! y*_t    = obs_mean_t + h_t + obs_sd_t · z1_t
//! h_{t+1} = state_intercept_t + φ h_t + state_obs_loading_t · z1_t + state_sd_t · z2_t
//! h_1     ~ N(init_mean, init_var)
//! ```
//!
//! The shared `z1_t` couples the measurement and state shocks in the leverage model, so the
//! filter conditions on the whole observation before predicting the next state.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mixture::MixtureGrid;
use crate::model::{SvmParams, TransformedData};
use crate::real::Real;

/// Variance floor absorbing rounding in long recursions.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SsmSpec<F> {
    pub obs_mean: Vec<F>,
    pub obs_sd: Vec<F>,
    /// Length `n - 1`: transition from `t` to `t + 1`.
    pub state_intercept: Vec<F>,
    pub state_ar: F,
    /// Length `n - 1`: loading of the measurement shock `z1_t` on `h_{t+1}`.
    pub state_obs_loading: Vec<F>,
    /// Length `n - 1`.
    pub state_sd: Vec<F>,
    pub init_mean: F,
    pub init_var: F,
}

/// Log-volatility path `h_1, …, h_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPath<F> {
    pub h: Vec<F>,
}

impl<F> LatentPath<F> {
    pub fn new(h: Vec<F>) -> Self {
        Self { h }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Per-period smoothed means and variances of `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedMoments<F> {
    pub mean: Vec<F>,
    pub var: Vec<F>,
}

impl<F: Real> SsmSpec<F> {
    pub fn n(&self) -> usize {
        self.obs_mean.len()
    }

    /// Builds the approximating state space for the mixture components `components`
    /// (flat grid indices) at parameters `params`. A leverage term is included when
    /// `params.rho` is set.
    pub fn from_mixture(
        params: &SvmParams<F>,
        grid: &MixtureGrid<F>,
        components: &[usize],
        data: &TransformedData<F>,
    ) -> Result<Self> {
        let n = data.len();
        if components.len() != n {
            return Err(Error::Domain(format!(
                "{} indicators for {} observations",
                components.len(),
                n
            )));
        }
        params.validate()?;
        let sigma = params.sigma2.sqrt();
        let base_intercept = params.mu * (F::one() - params.phi);

        let obs_mean = components.iter().map(|&k| grid.means()[k]).collect();
        let obs_sd = components.iter().map(|&k| grid.sd_of(k)).collect();
        let mut state_intercept = Vec::with_capacity(n.saturating_sub(1));
        let mut state_obs_loading = Vec::with_capacity(n.saturating_sub(1));
        let mut state_sd = Vec::with_capacity(n.saturating_sub(1));
        for t in 0..n.saturating_sub(1) {
            match params.rho {
                Some(rho) => {
                    let k = components[t];
                    let d = data.sign[t];
                    let e = grid.exp_half_mean_of(k);
                    let rs = rho * sigma;
                    state_intercept.push(base_intercept + rs * (d * grid.a_of(k) * e - params.beta));
                    state_obs_loading.push(d * rs * grid.b_of(k) * grid.sd_of(k) * e);
                    state_sd.push(sigma * (F::one() - rho * rho).sqrt());
                }
                None => {
                    state_intercept.push(base_intercept);
                    state_obs_loading.push(F::zero());
                    state_sd.push(sigma);
                }
            }
        }
        Ok(Self {
            obs_mean,
            obs_sd,
            state_intercept,
            state_ar: params.phi,
            state_obs_loading,
            state_sd,
            init_mean: params.mu,
            init_var: params.sigma2 / (F::one() - params.phi * params.phi),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Domain("state space needs at least one observation".into()));
        }
        if self.obs_sd.len() != n
            || self.state_intercept.len() + 1 != n
            || self.state_obs_loading.len() + 1 != n
            || self.state_sd.len() + 1 != n
        {
            return Err(Error::Domain("state space coefficient lengths disagree".into()));
        }
        if !(self.state_ar.abs() < F::one()) {
            return Err(Error::Domain(format!("|phi| must be < 1, got {}", self.state_ar)));
        }
        if self.obs_sd.iter().any(|&v| !(v > F::zero())) {
            return Err(Error::Domain("observation sds must be positive".into()));
        }
        if self.state_sd.iter().any(|&v| !(v >= F::zero())) {
            return Err(Error::Domain("state sds must be non-negative".into()));
        }
        if !(self.init_var > F::zero()) {
            return Err(Error::Domain("initial variance must be positive".into()));
        }
        Ok(())
    }
}

struct FilterPass<F> {
    loglik: F,
    filt_mean: Vec<F>,
    filt_var: Vec<F>,
}

/// Per-period coefficients seen by the filter.
trait Coefficients<F> {
    fn len(&self) -> usize;
    fn obs(&self, t: usize) -> (F, F);
    /// `(intercept, loading, sd)` of the transition from `t` to `t + 1`.
    fn transition(&self, t: usize) -> (F, F, F);
    fn state_ar(&self) -> F;
    fn init(&self) -> (F, F);
}

impl<F: Real> Coefficients<F> for SsmSpec<F> {
    fn len(&self) -> usize {
        self.n()
    }

    #[inline]
    fn obs(&self, t: usize) -> (F, F) {
        (self.obs_mean[t], self.obs_sd[t])
    }

    #[inline]
    fn transition(&self, t: usize) -> (F, F, F) {
        (self.state_intercept[t], self.state_obs_loading[t], self.state_sd[t])
    }

    fn state_ar(&self) -> F {
        self.state_ar
    }

    fn init(&self) -> (F, F) {
        (self.init_mean, self.init_var)
    }
}

/// The mixture state space of [`SsmSpec::from_mixture`] evaluated on the fly, without
/// materializing the coefficient vectors.
struct MixtureView<'a, F> {
    grid: &'a MixtureGrid<F>,
    components: &'a [usize],
    sign: &'a [F],
    phi: F,
    base_intercept: F,
    sigma: F,
    /// `(ρσ, β, σ√(1−ρ²))` with leverage.
    leverage: Option<(F, F, F)>,
    init: (F, F),
}

impl<F: Real> Coefficients<F> for MixtureView<'_, F> {
    fn len(&self) -> usize {
        self.components.len()
    }

    #[inline]
    fn obs(&self, t: usize) -> (F, F) {
        let k = self.components[t];
        (self.grid.means()[k], self.grid.sd_of(k))
    }

    #[inline]
    fn transition(&self, t: usize) -> (F, F, F) {
        match self.leverage {
            Some((rs, beta, sd)) => {
                let k = self.components[t];
                let d = self.sign[t];
                let e = self.grid.exp_half_mean_of(k);
                (
                    self.base_intercept + rs * (d * self.grid.a_of(k) * e - beta),
                    d * rs * self.grid.b_of(k) * self.grid.sd_of(k) * e,
                    sd,
                )
            }
            None => (self.base_intercept, F::zero(), self.sigma),
        }
    }

    fn state_ar(&self) -> F {
        self.phi
    }

    fn init(&self) -> (F, F) {
        self.init
    }
}

fn filter<F: Real>(spec: &SsmSpec<F>, ystar: &[F], keep: bool) -> Result<FilterPass<F>> {
    spec.validate()?;
    filter_with(spec, ystar, keep)
}

fn filter_with<F: Real, C: Coefficients<F>>(spec: &C, ystar: &[F], keep: bool) -> Result<FilterPass<F>> {
    let n = spec.len();
    if ystar.len() != n {
        return Err(Error::Domain(format!("{} observations for a spec of length {}", ystar.len(), n)));
    }
    let floor = F::c(VARIANCE_FLOOR);
    let half = F::c(0.5);
    let ln_2pi = F::ln_2pi();
    let phi = spec.state_ar();
    // Σ ln f_t is accumulated as ln of running products, flushed before they leave range.
    let (lo, hi) = (F::c(1e-30), F::c(1e30));

    let (mut a, mut p) = spec.init();
    let mut quad = F::zero();
    let mut ln_det = F::zero();
    let mut prod = F::one();
    let (mut filt_mean, mut filt_var) = if keep {
        (Vec::with_capacity(n), Vec::with_capacity(n))
    } else {
        (Vec::new(), Vec::new())
    };

    for t in 0..n {
        let (m, v) = spec.obs(t);
        let f = p + v * v;
        if !(f > F::zero()) || !f.is_finite() {
            return Err(Error::numerical_at(t + 1, format!("non-positive prediction variance {f}")));
        }
        let nu = ystar[t] - m - a;
        quad = quad + nu * nu / f;
        prod = prod * f;
        if prod > hi || prod < lo {
            ln_det = ln_det + prod.ln();
            prod = F::one();
        }
        if keep {
            filt_mean.push(a + p * nu / f);
            filt_var.push((p - p * p / f).max(floor));
        }
        if t + 1 < n {
            let (c, g, q) = spec.transition(t);
            let k = (phi * p + v * g) / f;
            a = c + phi * a + k * nu;
            p = (phi * phi * p + g * g + q * q - k * k * f).max(floor);
        }
    }
    ln_det = ln_det + prod.ln();
    let loglik = -half * (F::c(n as f64) * ln_2pi + ln_det + quad);
    if !loglik.is_finite() {
        return Err(Error::numerical("non-finite Kalman log-likelihood"));
    }
    Ok(FilterPass { loglik, filt_mean, filt_var })
}

/// `kalman_loglik(&SsmSpec::from_mixture(params, grid, components, data)?, &data.ystar)`
/// without building the intermediate spec.
pub fn mixture_kalman_loglik<F: Real>(
    params: &SvmParams<F>,
    grid: &MixtureGrid<F>,
    components: &[usize],
    data: &TransformedData<F>,
) -> Result<F> {
    params.validate()?;
    if components.len() != data.len() || data.is_empty() {
        return Err(Error::Domain(format!(
            "{} indicators for {} observations",
            components.len(),
            data.len()
        )));
    }
    let sigma = params.sigma2.sqrt();
    let view = MixtureView {
        grid,
        components,
        sign: &data.sign,
        phi: params.phi,
        base_intercept: params.mu * (F::one() - params.phi),
        sigma,
        leverage: params
            .rho
            .map(|rho| (rho * sigma, params.beta, sigma * (F::one() - rho * rho).sqrt())),
        init: (params.mu, params.sigma2 / (F::one() - params.phi * params.phi)),
    };
    filter_with(&view, &data.ystar, false).map(|f| f.loglik)
}

/// Backward-step coefficients: given `Y_t`, `h_{t+1} | h_t ~ N(c + φ' h_t, q²)`
/// once the measurement shock `z1_t` is pinned down by `y*_t`.
#[inline]
fn backward_coefficients<F: Real>(spec: &SsmSpec<F>, ystar: &[F], t: usize) -> (F, F, F) {
    let ratio = spec.state_obs_loading[t] / spec.obs_sd[t];
    let ar = spec.state_ar - ratio;
    let c = spec.state_intercept[t] + ratio * (ystar[t] - spec.obs_mean[t]);
    let q = spec.state_sd[t];
    (c, ar, q * q)
}

/// Log marginal density of `y*` under the linear Gaussian state space.
pub fn kalman_loglik<F: Real>(spec: &SsmSpec<F>, ystar: &[F]) -> Result<F> {
    filter(spec, ystar, false).map(|f| f.loglik)
}

/// Exact Gaussian smoothing means and variances of `h_t` given all of `y*`.
pub fn smoother_moments<F: Real>(spec: &SsmSpec<F>, ystar: &[F]) -> Result<SmoothedMoments<F>> {
    let pass = filter(spec, ystar, true)?;
    let n = spec.n();
    let floor = F::c(VARIANCE_FLOOR);
    let mut mean = pass.filt_mean.clone();
    let mut var = pass.filt_var.clone();
    for t in (0..n - 1).rev() {
        let (c, ar, q2) = backward_coefficients(spec, ystar, t);
        let pred_mean = c + ar * pass.filt_mean[t];
        let pred_var = (ar * ar * pass.filt_var[t] + q2).max(floor);
        let gain = pass.filt_var[t] * ar / pred_var;
        mean[t] = pass.filt_mean[t] + gain * (mean[t + 1] - pred_mean);
        var[t] = (pass.filt_var[t] + gain * gain * (var[t + 1] - pred_var)).max(floor);
    }
    Ok(SmoothedMoments { mean, var })
}

/// One exact draw of `h` from its Gaussian smoothing distribution (forward filtering,
/// backward sampling).
pub fn simulation_smoother<F: Real, R: Rng + ?Sized>(
    spec: &SsmSpec<F>,
    ystar: &[F],
    rng: &mut R,
) -> Result<LatentPath<F>> {
    let pass = filter(spec, ystar, true)?;
    let n = spec.n();
    let floor = F::c(VARIANCE_FLOOR);
    let mut normal = || F::c(rng.sample::<f64, _>(StandardNormal));
    let mut h = vec![F::zero(); n];
    h[n - 1] = pass.filt_mean[n - 1] + pass.filt_var[n - 1].sqrt() * normal();
    for t in (0..n - 1).rev() {
        let (c, ar, q2) = backward_coefficients(spec, ystar, t);
        let pf = pass.filt_var[t];
        let pred_var = (ar * ar * pf + q2).max(floor);
        let gain = pf * ar / pred_var;
        let mean = pass.filt_mean[t] + gain * (h[t + 1] - c - ar * pass.filt_mean[t]);
        let var = (pf - gain * ar * pf).max(floor);
        h[t] = mean + var.sqrt() * normal();
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("simulation smoother produced a non-finite state"));
    }
    Ok(LatentPath { h })
}
