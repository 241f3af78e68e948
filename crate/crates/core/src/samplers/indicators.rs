//! Mixture-component indicators `s_t = (s_1t, s_2t)` and the per-t mixture densities
//! `Σ_ij p̃_ij g(·|s_t = (i, j))` used by the correction steps.

use rand::Rng;

use crate::mixture::MixtureGrid;
use crate::model::{SvmParams, TransformedData};
use crate::real::log_sum_exp;

/// Flat component index per period (`i · (J + 1) + j`, both zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorPath {
    pub s: Vec<usize>,
}

impl IndicatorPath {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `(s_1t, s_2t)`, zero-based.
    pub fn pair(&self, t: usize, grid: &MixtureGrid<f64>) -> (usize, usize) {
        grid.split(self.s[t])
    }
}

/// Per-component constants reused across all periods of one sweep.
#[derive(Debug, Clone)]
pub struct ComponentTable {
    ln_w: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
    ln_var: Vec<f64>,
    /// `p̃_k / v_k`, zero for inactive components.
    coef: Vec<f64>,
    exp_half_mean: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ComponentTable {
    /// Keeps only components with positive weight.
    pub fn new(grid: &MixtureGrid<f64>) -> Self {
        let mut t = ComponentTable {
            ln_w: vec![],
            mean: vec![],
            var: vec![],
            ln_var: vec![],
            coef: vec![],
            exp_half_mean: vec![],
            a: vec![],
            b: vec![],
        };
        for k in 0..grid.len() {
            if grid.weights()[k] <= 0.0 {
                t.ln_w.push(f64::NEG_INFINITY);
            } else {
                t.ln_w.push(grid.ln_weights()[k]);
            }
            let m = grid.means()[k];
            let v = grid.variance_of(k);
            t.mean.push(m);
            t.var.push(v);
            t.ln_var.push(v.ln());
            t.coef.push(grid.weights()[k].max(0.0) / v.sqrt());
            t.exp_half_mean.push((m / 2.0).exp());
            t.a.push(grid.a_of(k));
            t.b.push(grid.b_of(k));
        }
        t
    }

    pub fn len(&self) -> usize {
        self.ln_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_w.is_empty()
    }

    /// Fills `out[k]` with `p̃_k g_k` up to a factor common to all `k`; returns `false`
    /// if the values under- or overflowed and the log-space path must be used.
    #[inline]
    fn linear_weights(&self, t: usize, h: &[f64], params: &SvmParams<f64>, data: &TransformedData<f64>, out: &mut [f64]) -> bool {
        let ys = data.ystar[t];
        let ht = h[t];
        let mut total = 0.0;
        match params.rho {
            Some(rho) if t + 1 < h.len() => {
                let rs = rho * params.sigma();
                let inv_var = 1.0 / (params.sigma2 * (1.0 - rho * rho));
                let base = params.mu * (1.0 - params.phi) + params.phi * ht - rs * params.beta;
                let hn = h[t + 1];
                let d = data.sign[t];
                for k in 0..self.len() {
                    let r = ys - self.mean[k] - ht;
                    let e = hn - base - rs * d * self.exp_half_mean[k] * (self.a[k] + self.b[k] * r);
                    let w = self.coef[k] * (-0.5 * (r * r / self.var[k] + e * e * inv_var)).exp();
                    out[k] = w;
                    total += w;
                }
            }
            _ => {
                for k in 0..self.len() {
                    let r = ys - self.mean[k] - ht;
                    let w = self.coef[k] * (-0.5 * r * r / self.var[k]).exp();
                    out[k] = w;
                    total += w;
                }
            }
        }
        total > 1e-280 && total.is_finite()
    }

    /// Fills `out[k] = ln p̃_k + ln g(y*_t [, h_{t+1}] | h_t, s_t = k)`.
    pub fn log_weights(&self, t: usize, h: &[f64], params: &SvmParams<f64>, data: &TransformedData<f64>, out: &mut [f64]) {
        const LN_2PI: f64 = 1.837_877_066_409_345_5;
        let ys = data.ystar[t];
        let ht = h[t];
        let lev = match params.rho {
            Some(rho) if t + 1 < h.len() => {
                let sigma = params.sigma();
                let var = params.sigma2 * (1.0 - rho * rho);
                let base = params.mu * (1.0 - params.phi) + params.phi * ht;
                Some((rho * sigma, var, var.ln(), base, h[t + 1], data.sign[t]))
            }
            _ => None,
        };
        for k in 0..self.len() {
            let lw = self.ln_w[k];
            if lw == f64::NEG_INFINITY {
                out[k] = f64::NEG_INFINITY;
                continue;
            }
            let r = ys - self.mean[k] - ht;
            let mut lp = lw - 0.5 * (LN_2PI + self.ln_var[k] + r * r / self.var[k]);
            if let Some((rs, var, ln_var, base, hn, d)) = lev {
                let hbar = base + rs * (d * self.exp_half_mean[k] * (self.a[k] + self.b[k] * r) - params.beta);
                let e = hn - hbar;
                lp -= 0.5 * (LN_2PI + ln_var + e * e / var);
            }
            out[k] = lp;
        }
    }
}

/// Normalized component probabilities at period `t`.
pub fn indicator_probabilities(
    t: usize,
    h: &[f64],
    params: &SvmParams<f64>,
    data: &TransformedData<f64>,
    grid: &MixtureGrid<f64>,
) -> Vec<f64> {
    let table = ComponentTable::new(grid);
    let mut lw = vec![0.0; table.len()];
    table.log_weights(t, h, params, data, &mut lw);
    let norm = log_sum_exp(&lw);
    lw.iter().map(|&v| (v - norm).exp()).collect()
}

/// Draws every `s_t` independently from its full conditional. Periods where all component
/// densities underflow are redone in log space.
pub fn draw_indicators<R: Rng + ?Sized>(
    h: &[f64],
    params: &SvmParams<f64>,
    data: &TransformedData<f64>,
    grid: &MixtureGrid<f64>,
    rng: &mut R,
) -> IndicatorPath {
    let table = ComponentTable::new(grid);
    let mut lw = vec![0.0; table.len()];
    let mut s = Vec::with_capacity(h.len());
    for t in 0..h.len() {
        if !table.linear_weights(t, h, params, data, &mut lw) {
            table.log_weights(t, h, params, data, &mut lw);
            let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for v in lw.iter_mut() {
                *v = (*v - max).exp();
            }
        }
        let total: f64 = lw.iter().sum();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (k, &w) in lw.iter().enumerate() {
            if w > 0.0 {
                pick = Some(k);
                acc += w;
                if u < acc {
                    break;
                }
            }
        }
        s.push(pick.expect("at least the largest component has positive weight"));
    }
    IndicatorPath { s }
}

/// `Σ_t ln Σ_k p̃_k g(y*_t [, h_{t+1}] | h_t, s_t = k)`.
pub fn mixture_log_density(h: &[f64], params: &SvmParams<f64>, data: &TransformedData<f64>, table: &ComponentTable) -> f64 {
    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
    let mut lw = vec![0.0; table.len()];
    let lev_const = params.rho.map(|rho| HALF_LN_2PI + 0.5 * (params.sigma2 * (1.0 - rho * rho)).ln());
    (0..h.len())
        .map(|t| {
            if table.linear_weights(t, h, params, data, &mut lw) {
                let c = match lev_const {
                    Some(c) if t + 1 < h.len() => c,
                    _ => 0.0,
                };
                lw.iter().sum::<f64>().ln() - HALF_LN_2PI - c
            } else {
                table.log_weights(t, h, params, data, &mut lw);
                log_sum_exp(&lw)
            }
        })
        .sum()
}
