//! MH update of α = (μ, φ, σ² [, ρ]) from `π*(α | s, β, y*)`, the Kalman-filter
//! marginal of the mixture state space, with a Laplace independence proposal on ϑ.

use nalgebra::DMatrix;
use rand::Rng;

use crate::mixture::MixtureGrid;
use crate::model::{log_prior, ModelKind, PriorSpec, SvmParams, TransformedData};
use crate::state_space::mixture_kalman_loglik;

use super::indicators::IndicatorPath;
use super::laplace::{self, ProposalKind};
use super::reparam::Reparam;

/// `ln π*(ϑ | s, β, y*)` up to a constant; `−∞` outside the support or on filter failure.
pub fn alpha_log_target(
    v: &[f64],
    kind: ModelKind,
    beta: f64,
    s: &IndicatorPath,
    grid: &MixtureGrid<f64>,
    data: &TransformedData<f64>,
    priors: &PriorSpec,
) -> f64 {
    let r = Reparam::alpha(kind);
    let p = r.from_vartheta(v, beta);
    let Ok(lp) = log_prior(&p, priors, kind) else {
        return f64::NEG_INFINITY;
    };
    let ll = mixture_kalman_loglik(&p, grid, &s.s, data);
    match ll {
        Ok(ll) => ll + lp + r.ln_jacobian(v),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone)]
pub struct AlphaStep {
    pub params: SvmParams<f64>,
    pub accepted: bool,
    pub proposal_kind: ProposalKind,
    /// Proposal covariance, reusable as the next optimizer's inverse-Hessian seed.
    pub proposal_cov: DMatrix<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn draw_alpha<R: Rng + ?Sized>(
    current: &SvmParams<f64>,
    kind: ModelKind,
    s: &IndicatorPath,
    grid: &MixtureGrid<f64>,
    data: &TransformedData<f64>,
    priors: &PriorSpec,
    c0: f64,
    warm: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> AlphaStep {
    let r = Reparam::alpha(kind);
    let beta = current.beta;
    let target = |v: &[f64]| alpha_log_target(v, kind, beta, s, grid, data, priors);
    let cur = r.to_vartheta(current);
    let fit = laplace::fit(&target, &cur, c0, warm);
    let step = laplace::independence_step(&target, &cur, target(&cur), &fit.proposal, rng);
    let mut params = if step.accepted { r.from_vartheta(&step.value, beta) } else { *current };
    if !kind.has_leverage() {
        params.rho = None;
    }
    AlphaStep { params, accepted: step.accepted, proposal_kind: fit.kind, proposal_cov: fit.proposal.covariance() }
}
