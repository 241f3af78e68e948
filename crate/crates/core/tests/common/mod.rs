//! Independent oracles shared by the integration tests. Nothing here calls the library's
//! densities; every formula is written out again from the model definition.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use svmix::SsmSpec;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Adaptive Simpson quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `y_t | h_t ~ N(β e^{h/2}, e^h)`.
pub fn obs_pdf(y: f64, h: f64, beta: f64) -> f64 {
    normal_pdf(y, beta * (h / 2.0).exp(), h.exp())
}

/// Log-likelihood of a scalar SV-type model by deterministic grid filtering, i.e. the
/// trapezoid rule applied to the nested n-dimensional integral one dimension at a time.
pub fn grid_loglik(y: &[f64], mu: f64, phi: f64, sigma2: f64, beta: f64, rho: f64, points: usize) -> f64 {
    let sd0 = (sigma2 / (1.0 - phi * phi)).sqrt();
    let (lo, hi) = (mu - 9.0 * sd0, mu + 9.0 * sd0);
    let dh = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + i as f64 * dh).collect();
    let w = |i: usize| if i == 0 || i == points - 1 { 0.5 * dh } else { dh };
    let sigma = sigma2.sqrt();
    let trans_var = sigma2 * (1.0 - rho * rho);

    // Filtered (unnormalized) density on the grid.
    let mut dens: Vec<f64> = grid.iter().map(|&h| normal_pdf(h, mu, sd0 * sd0) * obs_pdf(y[0], h, beta)).collect();
    let mut ll = 0.0;
    for t in 0..y.len() {
        let norm: f64 = (0..points).map(|i| w(i) * dens[i]).sum();
        ll += norm.ln();
        if t + 1 == y.len() {
            break;
        }
        let prev: Vec<f64> = dens.iter().map(|d| d / norm).collect();
        dens = grid
            .iter()
            .map(|&hn| {
                let pred: f64 = (0..points)
                    .map(|i| {
                        let h = grid[i];
                        let eps = y[t] * (-h / 2.0).exp() - beta;
                        let mean = mu + phi * (h - mu) + rho * sigma * eps;
                        w(i) * prev[i] * normal_pdf(hn, mean, trans_var)
                    })
                    .sum();
                pred * obs_pdf(y[t + 1], hn, beta)
            })
            .collect();
    }
    ll
}

/// Mean and covariance of `y*` implied by a state-space spec, built from its shock
/// representation, and the resulting joint-normal log density.
pub fn brute_force_loglik(spec: &SsmSpec<f64>, ystar: &[f64]) -> f64 {
    let (mean, cov) = ystar_moments(spec);
    let chol = cov.clone().cholesky().expect("covariance is PD");
    let r = DVector::from_column_slice(ystar) - mean;
    let sol = chol.solve(&r);
    let ln_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (ystar.len() as f64 * LN_2PI + ln_det + r.dot(&sol))
}

/// `(E y*, Cov y*)` of the spec, plus `(E h, Cov h, Cov(h, y*))` via [`joint_moments`].
pub fn ystar_moments(spec: &SsmSpec<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let j = joint_moments(spec);
    (j.y_mean, j.y_cov)
}

pub struct Joint {
    pub h_mean: DVector<f64>,
    pub h_cov: DMatrix<f64>,
    pub y_mean: DVector<f64>,
    pub y_cov: DMatrix<f64>,
    pub hy_cov: DMatrix<f64>,
}

pub fn joint_moments(spec: &SsmSpec<f64>) -> Joint {
    let n = spec.obs_mean.len();
    // shocks: w0, then z1_t and z2_t for t = 0..n
    let m = 1 + 2 * n;
    let z1 = |t: usize| 1 + 2 * t;
    let z2 = |t: usize| 2 + 2 * t;
    let mut h_mean = DVector::zeros(n);
    let mut h_load = DMatrix::zeros(n, m);
    h_mean[0] = spec.init_mean;
    h_load[(0, 0)] = spec.init_var.sqrt();
    for t in 0..n - 1 {
        h_mean[t + 1] = spec.state_intercept[t] + spec.state_ar * h_mean[t];
        let row = h_load.row(t) * spec.state_ar;
        h_load.set_row(t + 1, &row);
        h_load[(t + 1, z1(t))] += spec.state_obs_loading[t];
        h_load[(t + 1, z2(t))] += spec.state_sd[t];
    }
    let mut y_mean = DVector::zeros(n);
    let mut y_load = h_load.clone();
    for t in 0..n {
        y_mean[t] = spec.obs_mean[t] + h_mean[t];
        y_load[(t, z1(t))] += spec.obs_sd[t];
    }
    Joint {
        h_cov: &h_load * h_load.transpose(),
        y_cov: &y_load * y_load.transpose(),
        hy_cov: &h_load * y_load.transpose(),
        h_mean,
        y_mean,
    }
}

/// Conditional moments of `h | y*` by Gaussian conditioning on the joint.
pub fn conditional_h(spec: &SsmSpec<f64>, ystar: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let j = joint_moments(spec);
    let inv = j.y_cov.clone().try_inverse().expect("invertible");
    let r = DVector::from_column_slice(ystar) - &j.y_mean;
    let gain = &j.hy_cov * inv;
    (&j.h_mean + &gain * r, &j.h_cov - &gain * j.hy_cov.transpose())
}

/// A random valid spec of length `n`, with or without the measurement/state coupling.
pub fn random_spec<R: Rng>(n: usize, leverage: bool, rng: &mut R) -> (SsmSpec<f64>, Vec<f64>) {
    let phi = rng.random_range(-0.95..0.98);
    let sigma: f64 = rng.random_range(0.05..0.8);
    let mu = rng.random_range(-2.0..2.0);
    let rho: f64 = if leverage { rng.random_range(-0.9..0.9) } else { 0.0 };
    let obs_mean: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..2.0)).collect();
    let obs_sd: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..2.8)).collect();
    let loading: Vec<f64> = (0..n - 1)
        .map(|_| if leverage { rho * sigma * rng.random_range(0.1..1.5) } else { 0.0 })
        .collect();
    let spec = SsmSpec {
        obs_mean,
        obs_sd,
        state_intercept: (0..n - 1).map(|_| mu * (1.0 - phi) + if leverage { rng.random_range(-0.3..0.3) } else { 0.0 }).collect(),
        state_ar: phi,
        state_obs_loading: loading,
        state_sd: vec![sigma * (1.0 - rho * rho).sqrt(); n - 1],
        init_mean: mu,
        init_var: sigma * sigma / (1.0 - phi * phi),
    };
    let ystar = (0..n).map(|_| rng.random_range(-8.0..3.0)).collect();
    (spec, ystar)
}

/// AR(1) chain `x_t = a x_{t-1} + e_t` started in stationarity.
pub fn ar1_chain<R: Rng>(a: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let mut x = rng.sample::<f64, _>(StandardNormal) / (1.0 - a * a).sqrt();
    (0..n)
        .map(|_| {
            x = a * x + rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect()
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}
