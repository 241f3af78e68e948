//! Exact-correction MH step for a candidate `(α†, h†)` drawn from the mixture
//! approximation.
//!
//! The candidate kernel leaves the approximate conditional invariant, so the ratio
//! reduces to `Π f(y_t [, h_{t+1}] | h†) Σ p̃ g(· | h) / (Π f(y_t [, h_{t+1}] | h) Σ p̃ g(· | h†))`.

use rand::Rng;

use crate::model::{log_obs_density, log_state_transition, SvmParams, TransformedData};

use super::indicators::{mixture_log_density, ComponentTable};
use super::laplace::accept_log;

/// `Σ_t ln f(y_t | h_t)` plus, with leverage, `Σ_{t<n} ln f(h_{t+1} | h_t, y_t)`.
pub fn exact_log_density(h: &[f64], params: &SvmParams<f64>, y: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..y.len() {
        s += log_obs_density(y[t], h[t], params);
        if params.rho.is_some() && t + 1 < y.len() {
            s += log_state_transition(h[t + 1], h[t], y[t], params);
        }
    }
    s
}

/// Log acceptance ratio for moving from `(cur, h)` to `(cand, h_cand)`.
pub fn correction_log_ratio(
    cur: &SvmParams<f64>,
    h: &[f64],
    cand: &SvmParams<f64>,
    h_cand: &[f64],
    y: &[f64],
    data: &TransformedData<f64>,
    table: &ComponentTable,
) -> f64 {
    let cand_term = exact_log_density(h_cand, cand, y) - mixture_log_density(h_cand, cand, data, table);
    let cur_term = exact_log_density(h, cur, y) - mixture_log_density(h, cur, data, table);
    cand_term - cur_term
}

#[allow(clippy::too_many_arguments)]
pub fn correction_mh<R: Rng + ?Sized>(
    cur: &SvmParams<f64>,
    h: &[f64],
    cand: &SvmParams<f64>,
    h_cand: &[f64],
    y: &[f64],
    data: &TransformedData<f64>,
    table: &ComponentTable,
    rng: &mut R,
) -> bool {
    accept_log(correction_log_ratio(cur, h, cand, h_cand, y, data, table), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{build_grid, MixtureTable};
    use crate::model::transform;

    #[test]
    fn identical_candidate_has_zero_ratio() {
        let grid = build_grid(0.4, 2, &MixtureTable::standard());
        let table = ComponentTable::new(&grid);
        let y = [0.3, -1.1, 0.7];
        let data = transform(&y, 1e-7).unwrap();
        for rho in [None, Some(-0.3)] {
            let p = SvmParams { mu: 0.1, phi: 0.9, sigma2: 0.2, beta: 0.4, rho };
            let h = [0.2, -0.1, 0.5];
            assert_eq!(correction_log_ratio(&p, &h, &p, &h, &y, &data, &table), 0.0);
        }
    }
}
