//! Unconstrained parameterization ϑ used by the MH steps:
//! `(μ, log{(1+φ)/(1−φ)}, log σ² [, β] [, log{(1+ρ)/(1−ρ)}])`.

use crate::model::{ModelKind, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reparam {
    pub beta: bool,
    pub rho: bool,
}

/// `ln(1 − tanh²(x/2))`, computed without cancellation for large `|x|`.
#[inline]
fn ln_one_minus_tanh2_half(x: f64) -> f64 {
    let a = (x / 2.0).abs();
    // 1 − tanh²(a) = 4 e^{−2a} / (1 + e^{−2a})²
    2.0 * std::f64::consts::LN_2 - 2.0 * a - 2.0 * (-2.0 * a).exp().ln_1p()
}

impl Reparam {
    /// Layout of α = (μ, φ, σ² [, ρ]) for the mixture samplers.
    pub fn alpha(kind: ModelKind) -> Self {
        Self { beta: false, rho: kind.has_leverage() }
    }

    /// Layout of the full θ for the one-block θ step.
    pub fn theta(kind: ModelKind) -> Self {
        Self { beta: kind.has_beta(), rho: kind.has_leverage() }
    }

    pub fn dim(&self) -> usize {
        3 + self.beta as usize + self.rho as usize
    }

    pub fn to_vartheta(&self, p: &SvmParams<f64>) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(p.mu);
        v.push(((1.0 + p.phi) / (1.0 - p.phi)).ln());
        v.push(p.sigma2.ln());
        if self.beta {
            v.push(p.beta);
        }
        if self.rho {
            let r = p.rho.unwrap_or(0.0);
            v.push(((1.0 + r) / (1.0 - r)).ln());
        }
        v
    }

    /// Maps ϑ back to θ. `beta` supplies β when it is not part of ϑ.
    pub fn from_vartheta(&self, v: &[f64], beta: f64) -> SvmParams<f64> {
        let mut k = 3;
        let b = if self.beta {
            k += 1;
            v[3]
        } else {
            beta
        };
        let rho = if self.rho { Some((v[k] / 2.0).tanh()) } else { None };
        SvmParams { mu: v[0], phi: (v[1] / 2.0).tanh(), sigma2: v[2].exp(), beta: b, rho }
    }

    /// `ln |dθ/dϑ|`.
    pub fn ln_jacobian(&self, v: &[f64]) -> f64 {
        let mut j = ln_one_minus_tanh2_half(v[1]) - std::f64::consts::LN_2 + v[2];
        if self.rho {
            j += ln_one_minus_tanh2_half(v[self.dim() - 1]) - std::f64::consts::LN_2;
        }
        j
    }
}
