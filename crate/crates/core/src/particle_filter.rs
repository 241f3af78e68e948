//! Auxiliary particle filter for the exact likelihood `f(y | θ)` of SVM and SVML.
//!
//! Particles are first reselected with weights `f(y_{t+1} | μ_{t+1}^i) π_t^i`, where
//! `μ_{t+1}^i` is the conditional mean of `h_{t+1}` given `(h_t^i, y_t)`, then propagated
//! through the exact transition and reweighted by `f(y_{t+1} | h_{t+1}) / f(y_{t+1} | μ_{t+1})`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{log_obs_density, transition_mean, transition_var, SvmParams};
use crate::real::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resampling {
    Systematic,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfConfig {
    pub n_particles: usize,
    pub resampling: Resampling,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self { n_particles: 80_000, resampling: Resampling::Systematic }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfOutput {
    /// `Σ_t ln w̄_t`
    pub loglik: f64,
    /// `ln w̄_t`, the estimated `ln f(y_t | Y_{t−1}, θ)`.
    pub log_wbar: Vec<f64>,
    /// `W̄_t`, the estimated `F(y_t | Y_{t−1}, θ)`.
    pub cdf_bar: Vec<f64>,
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `F(y | h, θ)` for `y ~ N(β e^{h/2}, e^h)`.
#[inline]
fn obs_cdf(y: f64, h: f64, p: &SvmParams<f64>) -> f64 {
    let sd = (h / 2.0).exp();
    normal_cdf((y - p.beta * sd) / sd)
}

/// Draws `n` ancestor indices from normalized probabilities `probs`.
fn resample<R: Rng + ?Sized>(probs: &[f64], n: usize, scheme: Resampling, rng: &mut R, out: &mut Vec<usize>) {
    out.clear();
    match scheme {
        Resampling::Systematic => {
            let step = 1.0 / n as f64;
            let mut u = rng.random::<f64>() * step;
            let mut cum = probs[0];
            let mut k = 0;
            for _ in 0..n {
                while u >= cum && k + 1 < probs.len() {
                    k += 1;
                    cum += probs[k];
                }
                out.push(k);
                u += step;
            }
        }
        Resampling::Multinomial => {
            let mut cdf = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for &p in probs {
                acc += p;
                cdf.push(acc);
            }
            for _ in 0..n {
                let u = rng.random::<f64>() * acc;
                out.push(cdf.partition_point(|&c| c <= u).min(probs.len() - 1));
            }
        }
    }
}

/// Normalizes log weights in place to probabilities; returns `ln Σ exp(lw)`.
fn normalize(lw: &mut [f64]) -> f64 {
    let lse = log_sum_exp(lw);
    for v in lw.iter_mut() {
        *v = (*v - lse).exp();
    }
    lse
}

pub fn apf_loglik<R: Rng + ?Sized>(y: &[f64], params: &SvmParams<f64>, config: &PfConfig, rng: &mut R) -> Result<PfOutput> {
    let np = config.n_particles;
    if np < 2 {
        return Err(Error::Config(format!("need at least 2 particles, got {np}")));
    }
    if y.is_empty() {
        return Err(Error::Domain("empty series".into()));
    }
    params.validate()?;
    let ln_np = (np as f64).ln();
    let n = y.len();
    let sd0 = params.stationary_var().sqrt();
    let sd = transition_var(params).sqrt();

    let mut h: Vec<f64> = (0..np).map(|_| params.mu + sd0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut lw: Vec<f64> = h.iter().map(|&hi| log_obs_density(y[0], hi, params)).collect();
    let mut log_wbar = Vec::with_capacity(n);
    let mut cdf_bar = Vec::with_capacity(n);
    cdf_bar.push(h.iter().map(|&hi| obs_cdf(y[0], hi, params)).sum::<f64>() / np as f64);
    let lse = normalize(&mut lw);
    if !lse.is_finite() {
        return Err(Error::numerical_at(1, "all particle weights are zero"));
    }
    log_wbar.push(lse - ln_np);
    let mut pi = lw;

    let mut mean_next = vec![0.0; np];
    let mut lfirst = vec![0.0; np];
    let mut q = vec![0.0; np];
    let mut idx = Vec::with_capacity(np);
    let mut h_next = vec![0.0; np];
    for t in 0..n - 1 {
        let yn = y[t + 1];
        for i in 0..np {
            mean_next[i] = transition_mean(h[i], y[t], params);
            lfirst[i] = log_obs_density(yn, mean_next[i], params);
            q[i] = lfirst[i] + pi[i].ln();
        }
        let ln_z1 = normalize(&mut q);
        if !ln_z1.is_finite() {
            return Err(Error::numerical_at(t + 2, "all first-stage weights are zero"));
        }
        resample(&q, np, config.resampling, rng, &mut idx);
        let mut wcdf = 0.0;
        for i in 0..np {
            let k = idx[i];
            let hn = mean_next[k] + sd * rng.sample::<f64, _>(StandardNormal);
            h_next[i] = hn;
            let ratio = ln_z1 - lfirst[k];
            pi[i] = log_obs_density(yn, hn, params) + ratio;
            wcdf += obs_cdf(yn, hn, params) * ratio.exp();
        }
        let lse = normalize(&mut pi);
        if !lse.is_finite() {
            return Err(Error::numerical_at(t + 2, "all particle weights are zero"));
        }
        log_wbar.push(lse - ln_np);
        cdf_bar.push((wcdf / np as f64).clamp(0.0, 1.0));
        std::mem::swap(&mut h, &mut h_next);
    }
    Ok(PfOutput { loglik: log_wbar.iter().sum(), log_wbar, cdf_bar })
}

/// `reps` independent filters; replication `r` uses stream `r` of a ChaCha20 generator
/// seeded with `seed`. Results are in replication order regardless of scheduling.
pub fn apf_replicates(y: &[f64], params: &SvmParams<f64>, config: &PfConfig, seed: u64, reps: usize) -> Result<Vec<PfOutput>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            apf_loglik(y, params, config, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn systematic_resampling_counts() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut idx = Vec::new();
        resample(&[0.5, 0.25, 0.25], 8, Resampling::Systematic, &mut rng, &mut idx);
        let c: Vec<usize> = (0..3).map(|k| idx.iter().filter(|&&i| i == k).count()).collect();
        assert_eq!(c, vec![4, 2, 2]);
        resample(&[0.0, 1.0, 0.0], 5, Resampling::Multinomial, &mut rng, &mut idx);
        assert!(idx.iter().all(|&i| i == 1));
    }

    #[test]
    fn zero_leverage_matches_no_leverage() {
        let y = [0.3, -1.2, 0.8, 2.1, -0.4];
        let p = SvmParams { mu: 0.0, phi: 0.95, sigma2: 0.05, beta: 0.2, rho: None };
        let pl = SvmParams { rho: Some(0.0), ..p };
        let cfg = PfConfig { n_particles: 500, ..Default::default() };
        let a = apf_loglik(&y, &p, &cfg, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        let b = apf_loglik(&y, &pl, &cfg, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.cdf_bar.iter().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn rejects_tiny_particle_count() {
        let p = SvmParams { mu: 0.0, phi: 0.95, sigma2: 0.05, beta: 0.2, rho: None };
        let cfg = PfConfig { n_particles: 1, ..Default::default() };
        assert!(apf_loglik(&[0.1], &p, &cfg, &mut ChaCha20Rng::seed_from_u64(0)).is_err());
    }
}
