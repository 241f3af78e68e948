//! Chain summaries, inefficiency factors, autocorrelations and the moving-average
//! volatility proxy.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mixture::{expected_log_chisq1, McEstimate};

/// Shortest chain for which an inefficiency factor is reported.
pub const MIN_IF_LENGTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
    /// `None` when the chain is shorter than [`MIN_IF_LENGTH`] or constant.
    pub inefficiency: Option<f64>,
    pub prob_positive: f64,
}

/// Parzen lag window on `[0, 1]`.
#[inline]
pub fn parzen(x: f64) -> f64 {
    let x = x.abs();
    if x <= 0.5 {
        1.0 - 6.0 * x * x + 6.0 * x * x * x
    } else if x <= 1.0 {
        2.0 * (1.0 - x).powi(3)
    } else {
        0.0
    }
}

/// Sample autocorrelations at lags `0..=max_lag` (biased, divisor `n`).
pub fn acf(chain: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = chain.len();
    if n < 2 {
        return Err(Error::Domain("autocorrelation needs at least 2 draws".into()));
    }
    if chain.iter().all(|v| *v == chain[0]) {
        return Err(Error::Domain("autocorrelation of a constant chain is undefined".into()));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::Domain("autocorrelation of a constant chain is undefined".into()));
    }
    let max_lag = max_lag.min(n - 1);
    Ok((0..=max_lag)
        .map(|s| dev[..n - s].iter().zip(&dev[s..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// `1 + 2 Σ_{s≥1} K(s/B) ρ̂_s` with the Parzen window `K` and bandwidth
/// `B = ⌊√n⌋` unless given.
pub fn inefficiency_factor(chain: &[f64], bandwidth: Option<usize>) -> Result<f64> {
    if chain.len() < MIN_IF_LENGTH {
        return Err(Error::Domain(format!(
            "inefficiency factor needs at least {MIN_IF_LENGTH} draws, got {}",
            chain.len()
        )));
    }
    let b = bandwidth.unwrap_or_else(|| (chain.len() as f64).sqrt().floor() as usize).max(1);
    let rho = acf(chain, b)?;
    Ok(1.0 + 2.0 * (1..rho.len()).map(|s| parzen(s as f64 / b as f64) * rho[s]).sum::<f64>())
}

/// Linear-interpolation quantile of sorted data (`(n − 1)p` positioning).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(chain: &[f64]) -> Result<ChainSummary> {
    let n = chain.len();
    if n == 0 {
        return Err(Error::Domain("cannot summarize an empty chain".into()));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (chain.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = chain.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ChainSummary {
        mean,
        sd,
        q025: quantile_sorted(&sorted, 0.025),
        median: quantile_sorted(&sorted, 0.5),
        q975: quantile_sorted(&sorted, 0.975),
        inefficiency: inefficiency_factor(chain, None).ok(),
        prob_positive: chain.iter().filter(|&&v| v > 0.0).count() as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityProxy {
    pub series: Vec<f64>,
    /// Monte Carlo estimate of `E[log χ²₁(β̂²)]` that was subtracted.
    pub expectation: McEstimate,
}

/// Centered moving average of `z_t = log(y_t² + c) − E[log χ²₁(β̂²)]` over
/// `2·half_width + 1` periods; near the ends only the available terms are averaged.
pub fn volatility_proxy<R: Rng + ?Sized>(
    y: &[f64],
    beta_hat: f64,
    half_width: usize,
    offset: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<VolatilityProxy> {
    let n = y.len();
    if n <= 2 * half_width + 1 {
        return Err(Error::Domain(format!(
            "series of length {n} is too short for a window of half-width {half_width}"
        )));
    }
    let expectation = expected_log_chisq1(beta_hat, n_mc, rng)?;
    let z: Vec<f64> = y.iter().map(|v| (v * v + offset).ln() - expectation.mean).collect();
    let series = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half_width);
            let hi = (t + half_width).min(n - 1);
            z[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    Ok(VolatilityProxy { series, expectation })
}
