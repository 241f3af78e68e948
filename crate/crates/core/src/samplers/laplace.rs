//! Laplace-approximation independence proposals and the MH step that uses them.
//!
//! The mode is located by BFGS on finite-difference gradients; the precision of the
//! proposal is the negative central-difference Hessian at the mode. When the Hessian is
//! not negative definite, or the optimizer cannot move from a non-finite start, a flat
//! proposal `N(center, c₀ I)` is used instead.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const GRAD_TOL: f64 = 1e-5;
const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 40;
const ARMIJO: f64 = 1e-4;

/// Multivariate normal with a precomputed Cholesky factor of its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    /// Lower Cholesky factor of the covariance.
    chol: DMatrix<f64>,
    ln_det_cov: f64,
}

impl Gaussian {
    /// Returns `None` if `cov` is not positive definite.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Option<Self> {
        let chol = cov.cholesky()?.l();
        let ln_det_cov = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !ln_det_cov.is_finite() {
            return None;
        }
        Some(Self { mean, chol, ln_det_cov })
    }

    /// `N(mean, scale · I)`.
    pub fn isotropic(mean: DVector<f64>, scale: f64) -> Self {
        let d = mean.len();
        let chol = DMatrix::identity(d, d) * scale.sqrt();
        Self { mean, chol, ln_det_cov: d as f64 * scale.ln() }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.chol * self.chol.transpose()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.chol * z
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        let z = self
            .chol
            .solve_lower_triangular(&d)
            .expect("Cholesky factor has a positive diagonal");
        -0.5 * (self.dim() as f64 * (2.0 * std::f64::consts::PI).ln() + self.ln_det_cov + z.norm_squared())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    Laplace,
    Flat,
}

#[derive(Debug, Clone)]
pub struct LaplaceFit {
    pub proposal: Gaussian,
    pub kind: ProposalKind,
    /// Target value at the proposal centre.
    pub ln_target_at_center: f64,
    pub evaluations: usize,
}

/// Result of minimizing `f`.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Counted<'a, F> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn call(&mut self, x: &DVector<f64>) -> f64 {
        self.evals += 1;
        let v = (self.f)(x.as_slice());
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        let mut xp = x.clone();
        for i in 0..x.len() {
            let h = 1e-5 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = self.call(&xp);
            xp[i] = x[i] - h;
            let fm = self.call(&xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }
}

/// Quasi-Newton (BFGS) minimization of `f` from `x0` with central-difference gradients
/// and a backtracking Armijo line search. `inv_hessian0` seeds the inverse-Hessian estimate.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], inv_hessian0: Option<&DMatrix<f64>>) -> Minimum {
    let d = x0.len();
    let mut fc = Counted { f, evals: 0 };
    let mut x = DVector::from_column_slice(x0);
    let mut fx = fc.call(&x);
    if !fx.is_finite() {
        return Minimum { x, value: fx, converged: false, evaluations: fc.evals };
    }
    let mut g = fc.gradient(&x);
    let mut hinv = match inv_hessian0 {
        Some(h) if h.nrows() == d && h.ncols() == d => h.clone(),
        _ => DMatrix::identity(d, d) / g.amax().max(1.0),
    };
    let mut converged = false;
    for _ in 0..MAX_ITER {
        if !g.iter().all(|v| v.is_finite()) {
            break;
        }
        if g.amax() < GRAD_TOL {
            converged = true;
            break;
        }
        let mut p = -(&hinv * &g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            hinv = DMatrix::identity(d, d) / g.amax().max(1.0);
            p = -(&hinv * &g);
            slope = g.dot(&p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let xn = &x + &p * step;
            let fnew = fc.call(&xn);
            if fnew <= fx + ARMIJO * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            // No further decrease is resolvable at finite-difference precision.
            converged = g.amax() < 1e3 * GRAD_TOL;
            break;
        };
        let gn = fc.gradient(&xn);
        let s = &xn - &x;
        let yv = &gn - &g;
        let sy = s.dot(&yv);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy = &hinv * &yv;
            let yhy = yv.dot(&hy);
            // H⁺ = H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
            hinv -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        let small_change = (fx - fnew).abs() <= 1e-12 * (1.0 + fx.abs());
        x = xn;
        fx = fnew;
        g = gn;
        if small_change && g.amax() < 1e3 * GRAD_TOL {
            converged = true;
            break;
        }
    }
    Minimum { x, value: fx, converged, evaluations: fc.evals }
}

/// Central finite-difference Hessian of `f` at `x`.
pub fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> (DMatrix<f64>, usize) {
    let d = x.len();
    let steps: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let mut pt = x.to_vec();
    let f0 = f(x);
    let mut evals = 1;
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        pt[i] = x[i] + steps[i];
        let fp = f(&pt);
        pt[i] = x[i] - steps[i];
        let fm = f(&pt);
        pt[i] = x[i];
        evals += 2;
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64| {
                pt[i] = x[i] + si * steps[i];
                pt[j] = x[j] + sj * steps[j];
                let v = f(&pt);
                pt[i] = x[i];
                pt[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * steps[i] * steps[j]);
            evals += 4;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (h, evals)
}

/// Fits the Laplace proposal to the log target `ln_target`, starting the mode search at
/// `start`. `warm` is an optional inverse-Hessian guess (usually the previous proposal
/// covariance). Falls back to `N(mode, c0 I)` (or `N(start, c0 I)` if no mode was found).
pub fn fit<F: Fn(&[f64]) -> f64>(ln_target: &F, start: &[f64], c0: f64, warm: Option<&DMatrix<f64>>) -> LaplaceFit {
    let neg = |x: &[f64]| -ln_target(x);
    let min = minimize(&neg, start, warm);
    let mut evaluations = min.evaluations;
    if !min.converged || !min.value.is_finite() {
        let center = DVector::from_column_slice(start);
        let ln_target_at_center = ln_target(start);
        return LaplaceFit {
            proposal: Gaussian::isotropic(center, c0),
            kind: ProposalKind::Flat,
            ln_target_at_center,
            evaluations: evaluations + 1,
        };
    }
    let (h, e) = hessian(&neg, min.x.as_slice());
    evaluations += e;
    let proposal = h
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .and_then(|cov| Gaussian::new(min.x.clone(), (&cov + cov.transpose()) * 0.5));
    match proposal {
        Some(proposal) => LaplaceFit { proposal, kind: ProposalKind::Laplace, ln_target_at_center: -min.value, evaluations },
        None => LaplaceFit {
            proposal: Gaussian::isotropic(min.x.clone(), c0),
            kind: ProposalKind::Flat,
            ln_target_at_center: -min.value,
            evaluations,
        },
    }
}

/// Log acceptance ratio of an independence MH move `current → candidate`.
#[inline]
pub fn independence_log_ratio(ln_target_cur: f64, ln_q_cur: f64, ln_target_cand: f64, ln_q_cand: f64) -> f64 {
    (ln_target_cand - ln_target_cur) + (ln_q_cur - ln_q_cand)
}

/// Accept/reject by comparing `log u` with the log ratio, so nothing is exponentiated.
#[inline]
pub fn accept_log<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if !log_ratio.is_finite() {
        return false;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

#[derive(Debug, Clone)]
pub struct MhStep {
    pub value: Vec<f64>,
    pub ln_target: f64,
    pub accepted: bool,
}

/// One independence MH step from `current` (with log target `ln_target_cur`) using `proposal`.
pub fn independence_step<F, R>(ln_target: &F, current: &[f64], ln_target_cur: f64, proposal: &Gaussian, rng: &mut R) -> MhStep
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let cand = proposal.sample(rng);
    let ln_target_cand = ln_target(cand.as_slice());
    let cur = DVector::from_column_slice(current);
    let lr = independence_log_ratio(ln_target_cur, proposal.ln_pdf(&cur), ln_target_cand, proposal.ln_pdf(&cand));
    if !ln_target_cand.is_nan() && accept_log(lr, rng) {
        MhStep { value: cand.as_slice().to_vec(), ln_target: ln_target_cand, accepted: true }
    } else {
        MhStep { value: current.to_vec(), ln_target: ln_target_cur, accepted: false }
    }
}
