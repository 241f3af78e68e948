use std::path::Path;

use svmix::diagnostics::{quantile_sorted, summarize};
use svmix::samplers::{run_chain, run_chains, ChainOutput, McmcConfig};
use svmix::{DEFAULT_OFFSET, DEFAULT_ORDER};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, fmt, fmt_opt, read_series, write_csv, write_text};

/// Sampler settings from the configuration, with the defaults of a full-length run.
pub fn mcmc_config(cfg: &RunConfig) -> CliResult<McmcConfig> {
    let model = cfg.model_kind()?;
    let d = McmcConfig::default();
    Ok(McmcConfig {
        model,
        algorithm: cfg.algorithm_for(model)?,
        n_burnin: cfg.n_burnin.unwrap_or(d.n_burnin),
        n_draws: cfg.n_draws.unwrap_or(d.n_draws),
        order: cfg.order.unwrap_or(DEFAULT_ORDER),
        offset: cfg.offset.unwrap_or(DEFAULT_OFFSET),
        seed: cfg.seed.unwrap_or(d.seed),
        flat_proposal_scale: cfg.c0.unwrap_or(d.flat_proposal_scale),
        store_h_indices: cfg.h_indices_zero_based()?,
        path_thin: cfg.path_thin.unwrap_or(0),
        leverage_correction: cfg.leverage_correction.unwrap_or(true),
    })
}

pub fn load_data(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let path = cfg.data.as_ref().ok_or_else(|| CliError::Config("no data file given (use --data)".into()))?;
    read_series(path, cfg.column.as_deref())
}

/// The configuration as actually used, with every default spelled out.
fn resolved(cfg: &RunConfig, m: &McmcConfig, chains: usize) -> CliResult<RunConfig> {
    RunConfig {
        model: Some(m.model.name().into()),
        algorithm: Some(m.algorithm.name().into()),
        data: cfg.data.clone(),
        column: cfg.column.clone(),
        n_burnin: Some(m.n_burnin),
        n_draws: Some(m.n_draws),
        seed: Some(m.seed),
        order: Some(m.order),
        offset: Some(m.offset),
        c0: Some(m.flat_proposal_scale),
        h_indices: Some(m.store_h_indices.iter().map(|i| i + 1).collect()),
        path_thin: Some(m.path_thin),
        leverage_correction: Some(m.leverage_correction),
        chains: Some(chains),
        output_dir: Some(cfg.output_dir()),
        priors: cfg.priors.clone(),
        ..RunConfig::default()
    }
    .with_resolved_priors()
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let m = mcmc_config(cfg)?;
    let priors = cfg.prior_spec()?;
    let chains = cfg.chains.unwrap_or(1);
    if chains == 0 {
        return Err(CliError::Config("chains must be at least 1".into()));
    }
    let y = load_data(cfg)?;
    m.validate(y.len())?;

    let dir = cfg.output_dir();
    create_dir(&dir)?;
    write_text(&dir.join("config.toml"), &resolved(cfg, &m, chains)?.to_toml())?;
    if chains == 1 {
        write_chain(&dir, &run_chain(&y, &priors, &m)?, 1)
    } else {
        for (i, out) in run_chains(&y, &priors, &m, chains)?.iter().enumerate() {
            let sub = dir.join(format!("chain_{:02}", i + 1));
            create_dir(&sub)?;
            write_chain(&sub, out, i + 1)?;
        }
        Ok(())
    }
}

pub const SUMMARY_HEADER: [&str; 8] = ["quantity", "mean", "sd", "q025", "median", "q975", "inefficiency", "prob_positive"];

pub fn summary_row(name: &str, draws: &[f64]) -> CliResult<Vec<String>> {
    let s = summarize(draws)?;
    Ok(vec![
        name.to_owned(),
        fmt(s.mean),
        fmt(s.sd),
        fmt(s.q025),
        fmt(s.median),
        fmt(s.q975),
        fmt_opt(s.inefficiency),
        fmt(s.prob_positive),
    ])
}

/// Every file of one chain. Wall-clock time goes to `timing.csv` alone so that the other
/// files are reproducible byte for byte.
pub fn write_chain(dir: &Path, out: &ChainOutput, chain: usize) -> CliResult<()> {
    let mut header = vec!["iter"];
    header.extend(out.param_names.iter().copied());
    write_csv(
        &dir.join("draws_theta.csv"),
        &header,
        out.theta.iter().enumerate().map(|(i, row)| {
            let mut r = vec![(i + 1).to_string()];
            r.extend(row.iter().map(|v| fmt(*v)));
            r
        }),
    )?;

    let h_names: Vec<String> = out.h_indices.iter().map(|i| format!("h_{}", i + 1)).collect();
    if !h_names.is_empty() {
        let mut header = vec!["iter".to_owned()];
        header.extend(h_names.iter().cloned());
        write_csv(
            &dir.join("draws_h.csv"),
            &header,
            out.h_draws.iter().enumerate().map(|(i, row)| {
                let mut r = vec![(i + 1).to_string()];
                r.extend(row.iter().map(|v| fmt(*v)));
                r
            }),
        )?;
    }

    let mut rows = Vec::new();
    for name in out.param_names.iter().copied().chain(std::iter::once("sigma")) {
        rows.push(summary_row(name, &out.column(name).expect("known column"))?);
    }
    for (k, name) in h_names.iter().enumerate() {
        let col: Vec<f64> = out.h_draws.iter().map(|r| r[k]).collect();
        rows.push(summary_row(name, &col)?);
    }
    write_csv(&dir.join("summary.csv"), &SUMMARY_HEADER, rows)?;

    let corr = out.correction_accept.map(|c| c.rate());
    write_csv(
        &dir.join("sampler.csv"),
        &["key", "value"],
        vec![
            vec!["model".into(), out.model.name().into()],
            vec!["algorithm".into(), out.algorithm.name().into()],
            vec!["chain".into(), chain.to_string()],
            vec!["seed".into(), out.seed.to_string()],
            vec!["n_draws".into(), out.n_draws().to_string()],
            vec!["alpha_acceptance".into(), fmt(out.alpha_accept.rate())],
            vec!["correction_acceptance".into(), fmt_opt(corr)],
            vec!["flat_proposals".into(), out.flat_proposals.to_string()],
        ],
    )?;

    if !out.h_paths.is_empty() {
        let n = out.h_paths[0].len();
        write_csv(
            &dir.join("h_band.csv"),
            &["t", "lower", "median", "upper", "mean"],
            (0..n).map(|t| {
                let mut col: Vec<f64> = out.h_paths.iter().map(|p| p[t]).collect();
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                col.sort_by(f64::total_cmp);
                vec![
                    (t + 1).to_string(),
                    fmt(quantile_sorted(&col, 0.025)),
                    fmt(quantile_sorted(&col, 0.5)),
                    fmt(quantile_sorted(&col, 0.975)),
                    fmt(mean),
                ]
            }),
        )?;
    }

    write_csv(&dir.join("timing.csv"), &["key", "value"], vec![vec!["elapsed_secs".into(), format!("{:.3}", out.elapsed_secs)]])
}
