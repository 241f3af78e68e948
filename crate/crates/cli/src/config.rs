//! Run configuration: a TOML file whose keys match the command-line flags. Flags override
//! file values; unset keys fall back to per-command defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use svmix::samplers::Algorithm;
use svmix::{ModelKind, PriorSpec};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SVMIX_OUTPUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub mu_mean: Option<f64>,
    pub mu_var: Option<f64>,
    pub phi_a: Option<f64>,
    pub phi_b: Option<f64>,
    pub sigma_n0: Option<f64>,
    pub sigma_s0: Option<f64>,
    pub beta_mean: Option<f64>,
    pub beta_var: Option<f64>,
}

impl PriorConfig {
    pub fn resolve(&self) -> CliResult<PriorSpec> {
        let d = PriorSpec::default();
        let p = PriorSpec {
            mu_mean: self.mu_mean.unwrap_or(d.mu_mean),
            mu_var: self.mu_var.unwrap_or(d.mu_var),
            phi_a: self.phi_a.unwrap_or(d.phi_a),
            phi_b: self.phi_b.unwrap_or(d.phi_b),
            sigma_n0: self.sigma_n0.unwrap_or(d.sigma_n0),
            sigma_s0: self.sigma_s0.unwrap_or(d.sigma_s0),
            beta_mean: self.beta_mean.unwrap_or(d.beta_mean),
            beta_var: self.beta_var.unwrap_or(d.beta_var),
        };
        p.validate()?;
        Ok(p)
    }

    fn from_spec(p: &PriorSpec) -> Self {
        Self {
            mu_mean: Some(p.mu_mean),
            mu_var: Some(p.mu_var),
            phi_a: Some(p.phi_a),
            phi_b: Some(p.phi_b),
            sigma_n0: Some(p.sigma_n0),
            sigma_s0: Some(p.sigma_s0),
            beta_mean: Some(p.beta_mean),
            beta_var: Some(p.beta_var),
        }
    }
}

/// Every key is optional so that a file and a set of flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// sv, svm, svl or svml.
    #[arg(long)]
    pub model: Option<String>,
    /// gms, gmh, svml or ordinate (default: gms, or svml for leverage models).
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Comma-separated models for `marglik`.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Delimited text file with the return series.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Column to read from `data` (default: the only column, or `y`).
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub n_burnin: Option<usize>,
    #[arg(long)]
    pub n_draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Truncation order J of the mixture.
    #[arg(long)]
    pub order: Option<usize>,
    /// Offset c in log(y² + c).
    #[arg(long)]
    pub offset: Option<f64>,
    /// Variance c₀ of the fallback flat proposal.
    #[arg(long)]
    pub c0: Option<f64>,
    /// One-based periods t whose h_t draws are stored.
    #[arg(long, value_delimiter = ',')]
    pub h_indices: Option<Vec<usize>>,
    /// Keep the full h path every `path_thin` draws (0 = never).
    #[arg(long)]
    pub path_thin: Option<usize>,
    #[arg(long)]
    pub leverage_correction: Option<bool>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub pf_replications: Option<usize>,
    #[arg(long)]
    pub reduced_draws: Option<usize>,
    #[arg(long)]
    pub reduced_burnin: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Series length for `simulate`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Directory holding the output of `fit` for `report-data`.
    #[arg(long)]
    pub fit_dir: Option<PathBuf>,
    /// β values of the density grids written by `report-data`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(skip)]
    pub priors: Option<PriorConfig>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every key set in `top` replaced.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(self, top; model, algorithm, models, data, column, n_burnin, n_draws, seed, order, offset, c0,
            h_indices, path_thin, leverage_correction, chains, particles, pf_replications, reduced_draws,
            reduced_burnin, output_dir, n, mu, phi, sigma, beta, rho, fit_dir, betas, max_lag, priors);
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn model_kind(&self) -> CliResult<ModelKind> {
        Ok(self.model.as_deref().unwrap_or("svm").parse()?)
    }

    pub fn algorithm_for(&self, model: ModelKind) -> CliResult<Algorithm> {
        match &self.algorithm {
            Some(a) => Ok(a.parse()?),
            None if model.has_leverage() => Ok(Algorithm::Svml),
            None => Ok(Algorithm::Gms),
        }
    }

    pub fn prior_spec(&self) -> CliResult<PriorSpec> {
        self.priors.clone().unwrap_or_default().resolve()
    }

    /// Fills the prior table with the values in use so the written config is complete.
    pub fn with_resolved_priors(mut self) -> CliResult<Self> {
        self.priors = Some(PriorConfig::from_spec(&self.prior_spec()?));
        Ok(self)
    }

    /// `--output-dir`, then the config key, then the environment variable, then `.`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Zero-based indices from the one-based `h_indices`.
    pub fn h_indices_zero_based(&self) -> CliResult<Vec<usize>> {
        self.h_indices
            .clone()
            .unwrap_or_default()
            .into_iter()
            .map(|t| {
                t.checked_sub(1)
                    .ok_or_else(|| CliError::Config("h_indices are one-based; got 0".into()))
            })
            .collect()
    }
}
