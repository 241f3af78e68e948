//! Log marginal likelihood from the basic marginal likelihood identity
//! `log m(y) = log f(y | θ*) + log π(θ*) − log π(θ* | y)`.
//!
//! The likelihood ordinate comes from replicated auxiliary particle filters. The posterior
//! ordinate is estimated from the acceptance probabilities of a one-block MH step whose proposal
//! depends on a latent `z` (here the volatility path `h`):
//!
//! ```text
//! π(ϑ* | y) = E_{π(ϑ, z | y)}[α(ϑ, ϑ* | z) q(ϑ* | z)] / E_{π(z | ϑ*, y) q(ϑ | z)}[α(ϑ*, ϑ | z)]
//! ```
//!
//! The denominator's latent draws come from a reduced run of the h update at fixed θ*.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::mixture::{build_grid, MixtureTable, DEFAULT_ORDER};
use crate::model::{log_prior, transform, ModelKind, PriorSpec, SvmParams, DEFAULT_OFFSET};
use crate::particle_filter::{apf_replicates, PfConfig};
use crate::real::log_sum_exp;
use crate::samplers::laplace::Gaussian;
use crate::samplers::ordinate::{fit_theta_proposal, theta_log_target, CompleteData};
use crate::samplers::{draw_h_corrected, params_from_row, Algorithm, ChainOutput, ComponentTable, Reparam};

/// A one-block MH step on ϑ given a latent `z`.
pub trait OrdinateModel {
    type Latent;

    /// `ln π(ϑ | z, y)` up to a constant that may depend on `z` only.
    fn log_target(&self, v: &[f64], z: &Self::Latent) -> f64;

    /// Independence proposal `q(· | z)`.
    fn proposal(&self, z: &Self::Latent) -> Gaussian;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdinateEstimate {
    pub log_ordinate: f64,
    /// Batch-means standard error of `log_ordinate`.
    pub std_error: f64,
    pub log_numerator: f64,
    pub log_denominator: f64,
}

#[inline]
fn log_alpha(lt_from: f64, lq_from: f64, lt_to: f64, lq_to: f64) -> f64 {
    ((lt_to - lt_from) + (lq_from - lq_to)).min(0.0)
}

/// Log of the mean of `exp(terms)` and the batch-means standard error of that log.
fn log_mean_with_batch_se(terms: &[f64], n_batches: usize) -> (f64, f64) {
    let n = terms.len();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lm = log_sum_exp(terms) - (n as f64).ln();
    if !max.is_finite() {
        return (lm, f64::INFINITY);
    }
    let size = n / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| terms[b * size..(b + 1) * size].iter().map(|t| (t - max).exp()).sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (n_batches - 1) as f64;
    // Delta method: se(log x̄) = se(x̄) / x̄.
    (lm, (var / n_batches as f64).sqrt() / grand)
}

/// MH-based estimate of `ln π(ϑ* | y)` on the ϑ scale.
///
/// `posterior` holds joint posterior draws `(ϑ_g, z_g)`; `reduced` holds draws of
/// `z ~ π(z | ϑ*, y)`, each paired with `draws_per_latent` proposal draws.
pub fn mh_log_ordinate<M: OrdinateModel, R: Rng + ?Sized>(
    model: &M,
    theta_star: &[f64],
    posterior: &[(Vec<f64>, M::Latent)],
    reduced: &[M::Latent],
    draws_per_latent: usize,
    n_batches: usize,
    rng: &mut R,
) -> Result<OrdinateEstimate> {
    if n_batches < 2 {
        return Err(Error::Config("need at least 2 batches".into()));
    }
    if posterior.len() < n_batches || reduced.len() * draws_per_latent.max(1) < n_batches {
        return Err(Error::Config(format!(
            "{} posterior and {} reduced draws are too few for {n_batches} batches",
            posterior.len(),
            reduced.len()
        )));
    }
    let star = DVector::from_column_slice(theta_star);

    let num: Vec<f64> = posterior
        .iter()
        .map(|(v, z)| {
            let q = model.proposal(z);
            let lq_star = q.ln_pdf(&star);
            let a = log_alpha(
                model.log_target(v, z),
                q.ln_pdf(&DVector::from_column_slice(v)),
                model.log_target(theta_star, z),
                lq_star,
            );
            a + lq_star
        })
        .collect();

    let mut den = Vec::with_capacity(reduced.len() * draws_per_latent.max(1));
    for z in reduced {
        let q = model.proposal(z);
        let lt_star = model.log_target(theta_star, z);
        let lq_star = q.ln_pdf(&star);
        for _ in 0..draws_per_latent.max(1) {
            let cand = q.sample(rng);
            den.push(log_alpha(lt_star, lq_star, model.log_target(cand.as_slice(), z), q.ln_pdf(&cand)));
        }
    }

    let (ln_num, se_num) = log_mean_with_batch_se(&num, n_batches);
    let (ln_den, se_den) = log_mean_with_batch_se(&den, n_batches);
    let log_ordinate = ln_num - ln_den;
    if !log_ordinate.is_finite() {
        return Err(Error::numerical("posterior ordinate estimate is not finite"));
    }
    Ok(OrdinateEstimate {
        log_ordinate,
        std_error: (se_num * se_num + se_den * se_den).sqrt(),
        log_numerator: ln_num,
        log_denominator: ln_den,
    })
}

/// The θ step of the posterior-ordinate sampler, viewed as an [`OrdinateModel`].
pub struct SvmOrdinateModel<'a> {
    pub kind: ModelKind,
    pub priors: &'a PriorSpec,
    /// Start of every mode search.
    pub start: SvmParams<f64>,
    pub flat_proposal_scale: f64,
}

impl OrdinateModel for SvmOrdinateModel<'_> {
    type Latent = CompleteData;

    fn log_target(&self, v: &[f64], z: &CompleteData) -> f64 {
        theta_log_target(v, self.kind, z, self.priors)
    }

    fn proposal(&self, z: &CompleteData) -> Gaussian {
        fit_theta_proposal(self.kind, z, self.priors, &self.start, self.flat_proposal_scale, None).proposal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarglikConfig {
    pub pf: PfConfig,
    pub pf_replications: usize,
    /// Iterations of the reduced run kept for the denominator.
    pub reduced_draws: usize,
    pub reduced_burnin: usize,
    pub draws_per_latent: usize,
    pub n_batches: usize,
    pub order: usize,
    pub offset: f64,
    pub flat_proposal_scale: f64,
    pub seed: u64,
}

impl Default for MarglikConfig {
    fn default() -> Self {
        Self {
            pf: PfConfig::default(),
            pf_replications: 10,
            reduced_draws: 5_000,
            reduced_burnin: 500,
            draws_per_latent: 1,
            n_batches: 10,
            order: DEFAULT_ORDER,
            offset: DEFAULT_OFFSET,
            flat_proposal_scale: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarglikResult {
    pub model: ModelKind,
    pub log_marglik: f64,
    pub loglik: f64,
    pub loglik_se: f64,
    pub log_prior: f64,
    /// `ln π(θ* | y)` on the original parameter scale.
    pub log_posterior: f64,
    pub log_posterior_se: f64,
    /// `loglik_se` and `log_posterior_se` combined in quadrature.
    pub std_error: f64,
    pub theta_star: SvmParams<f64>,
    pub pf_logliks: Vec<f64>,
}

/// Likelihood ordinate: log of the mean of the replicated particle-filter likelihoods and
/// its standard error across replications.
pub fn likelihood_ordinate(y: &[f64], params: &SvmParams<f64>, config: &MarglikConfig) -> Result<(f64, f64, Vec<f64>)> {
    if config.pf_replications < 2 {
        return Err(Error::Config("need at least 2 particle-filter replications".into()));
    }
    let reps = apf_replicates(y, params, &config.pf, config.seed, config.pf_replications)?;
    let lls: Vec<f64> = reps.iter().map(|r| r.loglik).collect();
    let r = lls.len() as f64;
    let est = log_sum_exp(&lls) - r.ln();
    let rel: Vec<f64> = lls.iter().map(|l| (l - est).exp()).collect();
    let var = rel.iter().map(|w| (w - 1.0) * (w - 1.0)).sum::<f64>() / (r - 1.0);
    Ok((est, (var / r).sqrt(), lls))
}

/// Marginal likelihood of `chain.model` from a posterior-ordinate chain with stored paths.
pub fn log_marginal_likelihood(y: &[f64], priors: &PriorSpec, chain: &ChainOutput, config: &MarglikConfig) -> Result<MarglikResult> {
    if chain.algorithm != Algorithm::Ordinate {
        return Err(Error::Config(format!(
            "marginal likelihood needs an ordinate chain, got {}",
            chain.algorithm
        )));
    }
    if chain.h_paths.len() < config.n_batches || chain.n_draws() < config.n_batches {
        return Err(Error::Config(format!(
            "chain stores {} paths, fewer than the {} batches requested",
            chain.h_paths.len(),
            config.n_batches
        )));
    }
    let kind = chain.model;
    let theta_star = params_from_row(kind, &chain.posterior_mean());
    theta_star.validate()?;

    let (loglik, loglik_se, pf_logliks) = likelihood_ordinate(y, &theta_star, config)?;
    let log_prior_val = log_prior(&theta_star, priors, kind)?;

    let reparam = Reparam::theta(kind);
    let v_star = reparam.to_vartheta(&theta_star);
    let model = SvmOrdinateModel { kind, priors, start: theta_star, flat_proposal_scale: config.flat_proposal_scale };
    let posterior: Vec<(Vec<f64>, CompleteData)> = chain
        .path_theta
        .iter()
        .zip(&chain.h_paths)
        .map(|(row, h)| (reparam.to_vartheta(&params_from_row(kind, row)), CompleteData::new(y, h)))
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let data = transform(y, config.offset)?;
    let grid = build_grid(theta_star.beta, config.order, &MixtureTable::standard());
    let table = ComponentTable::new(&grid);
    let mut h = chain.h_paths.last().cloned().expect("checked non-empty");
    let mut reduced = Vec::with_capacity(config.reduced_draws);
    for it in 0..config.reduced_burnin + config.reduced_draws {
        h = draw_h_corrected(&theta_star, &h, y, &data, &grid, &table, &mut rng)?.0;
        if it >= config.reduced_burnin {
            reduced.push(CompleteData::new(y, &h));
        }
    }

    let ord = mh_log_ordinate(&model, &v_star, &posterior, &reduced, config.draws_per_latent, config.n_batches, &mut rng)?;
    let log_posterior = ord.log_ordinate - reparam.ln_jacobian(&v_star);
    Ok(MarglikResult {
        model: kind,
        log_marglik: loglik + log_prior_val - log_posterior,
        loglik,
        loglik_se,
        log_prior: log_prior_val,
        log_posterior,
        log_posterior_se: ord.std_error,
        std_error: (loglik_se * loglik_se + ord.std_error * ord.std_error).sqrt(),
        theta_star,
        pf_logliks,
    })
}
