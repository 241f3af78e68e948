//! Conjugate normal update of β given `(α, h, y)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{PriorSpec, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPosterior {
    /// `b₁`
    pub mean: f64,
    /// `B₁`
    pub var: f64,
}

/// Full-conditional moments of β.
///
/// Without leverage this is the regression of `y_t` on `exp(h_t/2)` with variances
/// `exp(h_t)`. With leverage `y_t` is replaced by
/// `ỹ_t = y_t − ρ exp(h_t/2) σ⁻¹ {h_{t+1} − μ − φ(h_t − μ)}` and the first `n − 1`
/// variances are scaled by `1 − ρ²`.
pub fn beta_posterior(params: &SvmParams<f64>, h: &[f64], y: &[f64], priors: &PriorSpec) -> BetaPosterior {
    let n = y.len();
    let (mut xox, mut xoy) = (0.0, 0.0);
    match params.rho {
        None => {
            for t in 0..n {
                xoy += y[t] * (-h[t] / 2.0).exp();
            }
            xox = n as f64;
        }
        Some(rho) => {
            let sigma = params.sigma();
            let scale = 1.0 - rho * rho;
            for t in 0..n {
                let e = (h[t] / 2.0).exp();
                if t + 1 < n {
                    let eta = h[t + 1] - params.mu - params.phi * (h[t] - params.mu);
                    let ytilde = y[t] - rho * e * eta / sigma;
                    xoy += ytilde / e / scale;
                    xox += 1.0 / scale;
                } else {
                    xoy += y[t] / e;
                    xox += 1.0;
                }
            }
        }
    }
    let var = 1.0 / (xox + 1.0 / priors.beta_var);
    BetaPosterior { mean: var * (xoy + priors.beta_mean / priors.beta_var), var }
}

pub fn draw_beta<R: Rng + ?Sized>(
    params: &SvmParams<f64>,
    h: &[f64],
    y: &[f64],
    priors: &PriorSpec,
    rng: &mut R,
) -> f64 {
    let post = beta_posterior(params, h, y, priors);
    post.mean + post.var.sqrt() * rng.sample::<f64, _>(StandardNormal)
}
