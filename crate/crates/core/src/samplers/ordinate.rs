//! Building blocks of the posterior-ordinate sampler: a one-block MH update of the whole θ
//! from its exact conditional `π(θ | h, y)`, and an h update that proposes from the mixture
//! state space and corrects with an MH step at fixed θ.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::mixture::MixtureGrid;
use crate::model::{log_prior, ModelKind, PriorSpec, SvmParams, TransformedData};
use crate::state_space::{simulation_smoother, SsmSpec};

use super::correction::correction_mh;
use super::indicators::{draw_indicators, ComponentTable};
use super::laplace::{self, LaplaceFit, ProposalKind};
use super::reparam::Reparam;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `(y, h)` summarized for fast evaluation of `ln f(y, h | θ)` at many θ.
#[derive(Debug, Clone)]
pub struct CompleteData {
    h: Vec<f64>,
    /// `u_t = y_t exp(−h_t/2)`
    u: Vec<f64>,
    sum_h: f64,
    sum_u: f64,
    sum_u2: f64,
}

impl CompleteData {
    pub fn new(y: &[f64], h: &[f64]) -> Self {
        let u: Vec<f64> = y.iter().zip(h).map(|(y, h)| y * (-h / 2.0).exp()).collect();
        Self {
            h: h.to_vec(),
            sum_h: h.iter().sum(),
            sum_u: u.iter().sum(),
            sum_u2: u.iter().map(|v| v * v).sum(),
            u,
        }
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `ln f(y, h | θ)`; `−∞` for θ outside the parameter space.
    pub fn log_likelihood(&self, p: &SvmParams<f64>) -> f64 {
        if p.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        let n = self.h.len() as f64;
        let beta = p.beta;
        let obs = -0.5 * (n * LN_2PI + self.sum_h + self.sum_u2 - 2.0 * beta * self.sum_u + n * beta * beta);
        let sv = p.stationary_var();
        let d0 = self.h[0] - p.mu;
        let init = -0.5 * (LN_2PI + sv.ln() + d0 * d0 / sv);
        let (rs, var) = match p.rho {
            Some(r) => (r * p.sigma(), p.sigma2 * (1.0 - r * r)),
            None => (0.0, p.sigma2),
        };
        let c = p.mu * (1.0 - p.phi);
        let mut ss = 0.0;
        for t in 0..self.h.len() - 1 {
            let e = self.h[t + 1] - c - p.phi * self.h[t] - rs * (self.u[t] - beta);
            ss += e * e;
        }
        let m = n - 1.0;
        obs + init - 0.5 * (m * (LN_2PI + var.ln()) + ss / var)
    }
}

/// `ln π(ϑ | h, y)` up to a constant.
pub fn theta_log_target(v: &[f64], kind: ModelKind, cd: &CompleteData, priors: &PriorSpec) -> f64 {
    let r = Reparam::theta(kind);
    let p = r.from_vartheta(v, 0.0);
    match log_prior(&p, priors, kind) {
        Ok(lp) => cd.log_likelihood(&p) + lp + r.ln_jacobian(v),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Laplace proposal for ϑ given `h`, with the mode search started at `start`.
pub fn fit_theta_proposal(
    kind: ModelKind,
    cd: &CompleteData,
    priors: &PriorSpec,
    start: &SvmParams<f64>,
    c0: f64,
    warm: Option<&DMatrix<f64>>,
) -> LaplaceFit {
    let r = Reparam::theta(kind);
    let target = |v: &[f64]| theta_log_target(v, kind, cd, priors);
    laplace::fit(&target, &r.to_vartheta(start), c0, warm)
}

#[derive(Debug, Clone)]
pub struct ThetaStep {
    pub params: SvmParams<f64>,
    pub accepted: bool,
    pub proposal_kind: ProposalKind,
    pub proposal_cov: DMatrix<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn draw_theta<R: Rng + ?Sized>(
    current: &SvmParams<f64>,
    kind: ModelKind,
    h: &[f64],
    y: &[f64],
    priors: &PriorSpec,
    c0: f64,
    warm: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> ThetaStep {
    let r = Reparam::theta(kind);
    let cd = CompleteData::new(y, h);
    let target = |v: &[f64]| theta_log_target(v, kind, &cd, priors);
    let cur = r.to_vartheta(current);
    let fit = fit_theta_proposal(kind, &cd, priors, current, c0, warm);
    let step = laplace::independence_step(&target, &cur, target(&cur), &fit.proposal, rng);
    let params = if step.accepted { r.from_vartheta(&step.value, 0.0) } else { *current };
    ThetaStep { params, accepted: step.accepted, proposal_kind: fit.kind, proposal_cov: fit.proposal.covariance() }
}

/// One h update at fixed θ: draw `s | h`, propose `h†` from the mixture state space and
/// accept it with the exact-correction probability. Returns the new path and the flag.
pub fn draw_h_corrected<R: Rng + ?Sized>(
    params: &SvmParams<f64>,
    h: &[f64],
    y: &[f64],
    data: &TransformedData<f64>,
    grid: &MixtureGrid<f64>,
    table: &ComponentTable,
    rng: &mut R,
) -> Result<(Vec<f64>, bool)> {
    let s = draw_indicators(h, params, data, grid, rng);
    let spec = SsmSpec::from_mixture(params, grid, &s.s, data)?;
    let cand = simulation_smoother(&spec, &data.ystar, rng)?.h;
    if correction_mh(params, h, params, &cand, y, data, table, rng) {
        Ok((cand, true))
    } else {
        Ok((h.to_vec(), false))
    }
}
