use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use svmix::diagnostics::{acf, volatility_proxy};
use svmix::mixture::{approx_density, exact_log_chisq1_density};
use svmix::{build_grid, MixtureTable, DEFAULT_OFFSET, DEFAULT_ORDER};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{column, create_dir, fmt, read_series, read_table, write_csv};

/// Grid of the density comparison: `u = −15, −14.99, …, 5`.
pub fn density_grid_u() -> impl Iterator<Item = f64> {
    (0..=2000).map(|k| -15.0 + 0.01 * k as f64)
}

/// Plot-ready tables from a `fit` directory:
///
/// | file               | columns                                   | needs             |
/// |--------------------|-------------------------------------------|-------------------|
/// | `density_grid.csv` | beta, u, exact, approx, diff              | nothing           |
/// | `traces.csv`       | iter, one column per parameter, sigma     | `draws_theta.csv` |
/// | `acf.csv`          | lag, one column per parameter, sigma      | `draws_theta.csv` |
/// | `band.csv`         | t, lower, median, upper, proxy            | `h_band.csv`, data |
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let out = cfg.output_dir();
    let fit_dir = cfg.fit_dir.clone().unwrap_or_else(|| out.clone());
    // Keys missing on the command line fall back to the fit's resolved configuration.
    let fit_cfg_path = fit_dir.join("config.toml");
    let cfg = if fit_cfg_path.exists() {
        let mut base = RunConfig::load(&fit_cfg_path)?;
        base.output_dir = None;
        base.overlay(cfg.clone())
    } else {
        cfg.clone()
    };
    create_dir(&out)?;

    let order = cfg.order.unwrap_or(DEFAULT_ORDER);
    let table = MixtureTable::standard();
    let mut rows = Vec::new();
    for &beta in cfg.betas.as_deref().unwrap_or(&[0.3, 0.5, 0.7]) {
        let grid = build_grid(beta, order, &table);
        for u in density_grid_u() {
            let exact = exact_log_chisq1_density(u, beta * beta, 1e-12)?;
            let approx = approx_density(u, &grid);
            rows.push(vec![fmt(beta), fmt(u), fmt(exact), fmt(approx), fmt(approx - exact)]);
        }
    }
    write_csv(&out.join("density_grid.csv"), &["beta", "u", "exact", "approx", "diff"], rows)?;

    let draws_path = fit_dir.join("draws_theta.csv");
    let mut beta_hat = 0.0;
    if draws_path.exists() {
        beta_hat = write_traces(&draws_path, &out, cfg.max_lag.unwrap_or(500))?;
    } else {
        eprintln!("note: {} not found; skipping traces and autocorrelations", draws_path.display());
    }

    let band_path = fit_dir.join("h_band.csv");
    if band_path.exists() {
        let y = match &cfg.data {
            Some(p) => read_series(p, cfg.column.as_deref())?,
            None => return Err(CliError::Config("the volatility band needs the data file (use --data)".into())),
        };
        let (header, band) = read_table(&band_path)?;
        if band.len() != y.len() {
            return Err(CliError::Data(format!("{} has {} rows but the series has {}", band_path.display(), band.len(), y.len())));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        let proxy = volatility_proxy(&y, beta_hat, 10, cfg.offset.unwrap_or(DEFAULT_OFFSET), 100_000, &mut rng)?;
        let lower = column(&header, &band, "lower", &band_path)?;
        let median = column(&header, &band, "median", &band_path)?;
        let upper = column(&header, &band, "upper", &band_path)?;
        write_csv(
            &out.join("band.csv"),
            &["t", "lower", "median", "upper", "proxy"],
            (0..y.len()).map(|t| vec![(t + 1).to_string(), fmt(lower[t]), fmt(median[t]), fmt(upper[t]), fmt(proxy.series[t])]),
        )?;
    } else {
        eprintln!("note: {} not found; fit with --path-thin to get the volatility band", band_path.display());
    }
    Ok(())
}

/// Writes traces and autocorrelations; returns the posterior mean of β (0 without β).
fn write_traces(path: &Path, out: &Path, max_lag: usize) -> CliResult<f64> {
    let (mut header, mut rows) = read_table(path)?;
    if let Some(k) = header.iter().position(|h| h == "sigma2") {
        header.push("sigma".into());
        for r in &mut rows {
            let s = r[k].sqrt();
            r.push(s);
        }
    }
    write_csv(
        &out.join("traces.csv"),
        &header,
        rows.iter().map(|r| {
            let mut v = vec![format!("{}", r[0] as u64)];
            v.extend(r[1..].iter().map(|x| fmt(*x)));
            v
        }),
    )?;

    let names = &header[1..];
    let cols: Vec<Option<Vec<f64>>> = (1..header.len())
        .map(|k| acf(&rows.iter().map(|r| r[k]).collect::<Vec<_>>(), max_lag).ok())
        .collect();
    let lags = cols.iter().flatten().map(|c| c.len()).max().unwrap_or(0);
    let mut acf_header = vec!["lag".to_owned()];
    acf_header.extend(names.iter().cloned());
    write_csv(
        &out.join("acf.csv"),
        &acf_header,
        (0..lags).map(|s| {
            let mut v = vec![s.to_string()];
            v.extend(cols.iter().map(|c| c.as_ref().map(|c| fmt(c[s])).unwrap_or_else(|| "NA".into())));
            v
        }),
    )?;

    Ok(match header.iter().position(|h| h == "beta") {
        Some(k) => rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64,
        None => 0.0,
    })
}
