use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use svmix::model::simulate as simulate_series;
use svmix::SvmParams;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::io::{create_dir, fmt, write_csv, write_text};

/// Writes `y.csv` (t, y), `truth.csv` (t, h) and `params.csv` (name, value).
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let n = cfg.n.unwrap_or(1000);
    let sigma = cfg.sigma.unwrap_or(0.3);
    let seed = cfg.seed.unwrap_or(0);
    let params = SvmParams::new(
        cfg.mu.unwrap_or(0.0),
        cfg.phi.unwrap_or(0.97),
        sigma * sigma,
        cfg.beta.unwrap_or(0.3),
        cfg.rho,
    )?;
    let (y, h) = simulate_series(&params, n, &mut ChaCha20Rng::seed_from_u64(seed))?;

    let dir = cfg.output_dir();
    create_dir(&dir)?;
    write_csv(&dir.join("y.csv"), &["t", "y"], y.iter().enumerate().map(|(t, v)| vec![(t + 1).to_string(), fmt(*v)]))?;
    write_csv(&dir.join("truth.csv"), &["t", "h"], h.h.iter().enumerate().map(|(t, v)| vec![(t + 1).to_string(), fmt(*v)]))?;
    let mut rows = vec![
        vec!["mu".into(), fmt(params.mu)],
        vec!["phi".into(), fmt(params.phi)],
        vec!["sigma".into(), fmt(sigma)],
        vec!["sigma2".into(), fmt(params.sigma2)],
        vec!["beta".into(), fmt(params.beta)],
    ];
    if let Some(rho) = params.rho {
        rows.push(vec!["rho".into(), fmt(rho)]);
    }
    rows.push(vec!["n".into(), n.to_string()]);
    rows.push(vec!["seed".into(), seed.to_string()]);
    write_csv(&dir.join("params.csv"), &["name", "value"], rows)?;

    let resolved = RunConfig {
        n: Some(n),
        mu: Some(params.mu),
        phi: Some(params.phi),
        sigma: Some(sigma),
        beta: Some(params.beta),
        rho: params.rho,
        seed: Some(seed),
        output_dir: Some(dir.clone()),
        ..RunConfig::default()
    };
    write_text(&dir.join("config.toml"), &resolved.to_toml())
}
