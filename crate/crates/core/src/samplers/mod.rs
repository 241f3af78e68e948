//! MCMC samplers for SVM and SVML.
//!
//! | algorithm  | per-iteration cycle                                                   |
//! |------------|-----------------------------------------------------------------------|
//! | `Gms`      | β; s; α (Laplace MH on the Kalman marginal); h (simulation smoother)  |
//! | `Gmh`      | as `Gms`, then an exact-correction MH step on (α, h)                  |
//! | `Svml`     | leverage version of `Gmh`, correction optional                        |
//! | `Ordinate` | θ in one block given h; s; h with correction at fixed θ               |

pub mod alpha;
pub mod beta;
pub mod correction;
pub mod indicators;
pub mod laplace;
pub mod ordinate;
pub mod reparam;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::{build_grid, MixtureGrid, MixtureTable, DEFAULT_ORDER};
use crate::model::{transform, ModelKind, PriorSpec, SvmParams, DEFAULT_OFFSET};
use crate::state_space::{simulation_smoother, SsmSpec};

pub use alpha::{draw_alpha, AlphaStep};
pub use beta::{beta_posterior, draw_beta, BetaPosterior};
pub use correction::{correction_log_ratio, correction_mh};
pub use indicators::{draw_indicators, ComponentTable, IndicatorPath};
pub use laplace::ProposalKind;
pub use ordinate::{draw_h_corrected, draw_theta, CompleteData};
pub use reparam::Reparam;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Gms,
    Gmh,
    Svml,
    Ordinate,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gms => "gms",
            Algorithm::Gmh => "gmh",
            Algorithm::Svml => "svml",
            Algorithm::Ordinate => "ordinate",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gms" => Ok(Algorithm::Gms),
            "gmh" => Ok(Algorithm::Gmh),
            "svml" => Ok(Algorithm::Svml),
            "ordinate" => Ok(Algorithm::Ordinate),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected gms, gmh, svml or ordinate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub model: ModelKind,
    pub algorithm: Algorithm,
    pub n_burnin: usize,
    pub n_draws: usize,
    /// Truncation order `J` of the mixture grid.
    pub order: usize,
    /// Offset `c` in `log(y² + c)`.
    pub offset: f64,
    pub seed: u64,
    /// Variance `c₀` of the flat fallback proposal on the ϑ scale.
    pub flat_proposal_scale: f64,
    /// Zero-based periods whose `h_t` is stored at every draw.
    pub store_h_indices: Vec<usize>,
    /// Store the full path every `path_thin` draws (0 disables).
    pub path_thin: usize,
    /// Whether the leverage sampler runs its correction step.
    pub leverage_correction: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Svm,
            algorithm: Algorithm::Gms,
            n_burnin: 10_000,
            n_draws: 50_000,
            order: DEFAULT_ORDER,
            offset: DEFAULT_OFFSET,
            seed: 0,
            flat_proposal_scale: 1.0,
            store_h_indices: Vec::new(),
            path_thin: 0,
            leverage_correction: true,
        }
    }
}

impl McmcConfig {
    /// Checks counts and the model/algorithm pairing for a series of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::Config("n_draws must be positive".into()));
        }
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 observations, got {n}")));
        }
        if !(self.offset > 0.0 && self.offset.is_finite()) {
            return Err(Error::Config(format!("offset c must be positive, got {}", self.offset)));
        }
        if !(self.flat_proposal_scale > 0.0 && self.flat_proposal_scale.is_finite()) {
            return Err(Error::Config("flat proposal scale must be positive".into()));
        }
        if let Some(&bad) = self.store_h_indices.iter().find(|&&i| i >= n) {
            return Err(Error::Config(format!("h index {} outside 1..={n}", bad + 1)));
        }
        let lev = self.model.has_leverage();
        match self.algorithm {
            Algorithm::Gms | Algorithm::Gmh if lev => Err(Error::Config(format!(
                "algorithm {} has no rho step; use svml or ordinate for model {}",
                self.algorithm, self.model
            ))),
            Algorithm::Svml if !lev => Err(Error::Config(format!(
                "algorithm svml needs a leverage model (svl or svml), got {}",
                self.model
            ))),
            _ => Ok(()),
        }
    }

    fn corrects(&self) -> bool {
        match self.algorithm {
            Algorithm::Gms => false,
            Algorithm::Gmh | Algorithm::Ordinate => true,
            Algorithm::Svml => self.leverage_correction,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceCounter {
    pub accepted: u64,
    pub attempts: u64,
}

impl AcceptanceCounter {
    pub fn record(&mut self, accepted: bool) {
        self.attempts += 1;
        self.accepted += accepted as u64;
    }

    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

/// Stored draws of one chain (after burn-in).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub model: ModelKind,
    pub algorithm: Algorithm,
    pub param_names: Vec<&'static str>,
    /// `n_draws` rows in `param_names` order.
    pub theta: Vec<Vec<f64>>,
    pub h_indices: Vec<usize>,
    /// `n_draws` rows, one column per entry of `h_indices`.
    pub h_draws: Vec<Vec<f64>>,
    pub path_thin: usize,
    /// Full h paths every `path_thin` draws.
    pub h_paths: Vec<Vec<f64>>,
    /// θ rows matching `h_paths`.
    pub path_theta: Vec<Vec<f64>>,
    /// α-MH (θ-MH for `Ordinate`) acceptance, post burn-in.
    pub alpha_accept: AcceptanceCounter,
    pub correction_accept: Option<AcceptanceCounter>,
    /// Iterations that fell back to the flat proposal, post burn-in.
    pub flat_proposals: u64,
    pub seed: u64,
    pub elapsed_secs: f64,
}

impl ChainOutput {
    pub fn n_draws(&self) -> usize {
        self.theta.len()
    }

    /// Draws of a named quantity. `sigma` is derived from `sigma2`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if name == "sigma" {
            return self.column("sigma2").map(|v| v.into_iter().map(f64::sqrt).collect());
        }
        let k = self.param_names.iter().position(|&p| p == name)?;
        Some(self.theta.iter().map(|r| r[k]).collect())
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let p = self.param_names.len();
        let mut m = vec![0.0; p];
        for row in &self.theta {
            for k in 0..p {
                m[k] += row[k];
            }
        }
        m.iter().map(|v| v / self.theta.len() as f64).collect()
    }
}

/// Converts a row in `kind.param_names()` order to parameters.
pub fn params_from_row(kind: ModelKind, row: &[f64]) -> SvmParams<f64> {
    let mut k = 3;
    let beta = if kind.has_beta() {
        k += 1;
        row[3]
    } else {
        0.0
    };
    let rho = if kind.has_leverage() { Some(row[k]) } else { None };
    SvmParams { mu: row[0], phi: row[1], sigma2: row[2], beta, rho }
}

pub fn params_to_row(kind: ModelKind, p: &SvmParams<f64>) -> Vec<f64> {
    let mut row = vec![p.mu, p.phi, p.sigma2];
    if kind.has_beta() {
        row.push(p.beta);
    }
    if kind.has_leverage() {
        row.push(p.rho.unwrap_or(0.0));
    }
    row
}

fn initial_state(kind: ModelKind, ystar: &[f64]) -> (SvmParams<f64>, Vec<f64>) {
    // E[log χ²₁] = ψ(½) + ln 2
    let level = ystar.iter().sum::<f64>() / ystar.len() as f64 + 1.270_362_845_461_478;
    let p = SvmParams {
        mu: level,
        phi: 0.9,
        sigma2: 0.05,
        beta: 0.0,
        rho: kind.has_leverage().then_some(0.0),
    };
    (p, vec![level; ystar.len()])
}

/// Runs one chain of `config.algorithm` on the series `y`, seeding from `config.seed`.
pub fn run_chain(y: &[f64], priors: &PriorSpec, config: &McmcConfig) -> Result<ChainOutput> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    run_chain_with_rng(y, priors, config, &mut rng)
}

/// Runs `k` chains concurrently; chain `i` uses stream `i` of the ChaCha20 generator
/// seeded with `config.seed`.
pub fn run_chains(y: &[f64], priors: &PriorSpec, config: &McmcConfig, k: usize) -> Result<Vec<ChainOutput>> {
    (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            run_chain_with_rng(y, priors, config, &mut rng)
        })
        .collect()
}

pub fn run_chain_with_rng<R: Rng + ?Sized>(
    y: &[f64],
    priors: &PriorSpec,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    config.validate(y.len())?;
    priors.validate()?;
    let start = Instant::now();
    let kind = config.model;
    let data = transform(y, config.offset)?;
    let table = MixtureTable::standard();
    let (mut params, mut h) = initial_state(kind, &data.ystar);
    let mut grid: MixtureGrid<f64> = build_grid(params.beta, config.order, &table);
    let mut comps = ComponentTable::new(&grid);
    let mut warm: Option<DMatrix<f64>> = None;

    let total = config.n_burnin + config.n_draws;
    let mut out = ChainOutput {
        model: kind,
        algorithm: config.algorithm,
        param_names: kind.param_names(),
        theta: Vec::with_capacity(config.n_draws),
        h_indices: config.store_h_indices.clone(),
        h_draws: Vec::with_capacity(if config.store_h_indices.is_empty() { 0 } else { config.n_draws }),
        path_thin: config.path_thin,
        h_paths: Vec::new(),
        path_theta: Vec::new(),
        alpha_accept: AcceptanceCounter::default(),
        correction_accept: config.corrects().then(AcceptanceCounter::default),
        flat_proposals: 0,
        seed: config.seed,
        elapsed_secs: 0.0,
    };

    for iter in 0..total {
        let keep = iter >= config.n_burnin;
        let (accepted, kind_used, corrected) = match config.algorithm {
            Algorithm::Ordinate => {
                let st = draw_theta(&params, kind, &h, y, priors, config.flat_proposal_scale, warm.as_ref(), rng);
                if st.proposal_kind == ProposalKind::Laplace {
                    warm = Some(st.proposal_cov);
                }
                if st.params.beta != params.beta {
                    grid = build_grid(st.params.beta, config.order, &table);
                    comps = ComponentTable::new(&grid);
                }
                params = st.params;
                let (hn, acc) = draw_h_corrected(&params, &h, y, &data, &grid, &comps, rng)?;
                h = hn;
                (st.accepted, st.proposal_kind, Some(acc))
            }
            _ => {
                if kind.has_beta() {
                    params.beta = draw_beta(&params, &h, y, priors, rng);
                    grid = build_grid(params.beta, config.order, &table);
                    comps = ComponentTable::new(&grid);
                }
                let s = draw_indicators(&h, &params, &data, &grid, rng);
                let st = draw_alpha(&params, kind, &s, &grid, &data, priors, config.flat_proposal_scale, warm.as_ref(), rng);
                if st.proposal_kind == ProposalKind::Laplace {
                    warm = Some(st.proposal_cov);
                }
                let spec = SsmSpec::from_mixture(&st.params, &grid, &s.s, &data)?;
                let cand = simulation_smoother(&spec, &data.ystar, rng)?.h;
                let corrected = if config.corrects() {
                    let acc = correction_mh(&params, &h, &st.params, &cand, y, &data, &comps, rng);
                    if acc {
                        params = st.params;
                        h = cand;
                    }
                    Some(acc)
                } else {
                    params = st.params;
                    h = cand;
                    None
                };
                (st.accepted, st.proposal_kind, corrected)
            }
        };

        if keep {
            out.alpha_accept.record(accepted);
            if kind_used == ProposalKind::Flat {
                out.flat_proposals += 1;
            }
            if let (Some(c), Some(acc)) = (out.correction_accept.as_mut(), corrected) {
                c.record(acc);
            }
            let row = params_to_row(kind, &params);
            if !out.h_indices.is_empty() {
                out.h_draws.push(out.h_indices.iter().map(|&i| h[i]).collect());
            }
            let d = iter - config.n_burnin;
            if config.path_thin > 0 && (d + 1) % config.path_thin == 0 {
                out.h_paths.push(h.clone());
                out.path_theta.push(row.clone());
            }
            out.theta.push(row);
        }
    }
    out.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(out)
}
