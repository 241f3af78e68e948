//! Command-line driver for `svmix`.
//!
//! Every command reads an optional TOML configuration (`--config`) whose keys match the
//! long flags; flags win. Outputs are comma-separated tables with a header row, written to
//! `--output-dir`, else `$SVMIX_OUTPUT_DIR`, else the working directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "svmix", version, about = "Stochastic volatility in mean: simulate, fit, marginal likelihoods, report data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series and its log-volatility path.
    Simulate(CommandArgs),
    /// Run an MCMC sampler on a series.
    Fit(CommandArgs),
    /// Log marginal likelihoods of one or more models.
    Marglik(CommandArgs),
    /// Density grids, traces, autocorrelations and volatility bands for plotting.
    ReportData(CommandArgs),
}

#[derive(Debug, Args)]
pub struct CommandArgs {
    /// TOML file with any of the flag keys (snake_case) and an optional [priors] table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: RunConfig,
}

impl CommandArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.overrides.clone()))
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(&a.resolve()?),
        Command::Fit(a) => commands::fit::run(&a.resolve()?),
        Command::Marglik(a) => commands::marglik::run(&a.resolve()?),
        Command::ReportData(a) => commands::report::run(&a.resolve()?),
    }
}

/// Parses `args` (program name first) and runs; usage errors become configuration errors.
pub fn run_from<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(&cli)
}
