mod common;

use common::{grid_loglik, integrate, mean_var, normal_pdf, obs_pdf};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use svmix::model::simulate;
use svmix::particle_filter::{apf_loglik, apf_replicates, PfConfig, Resampling};
use svmix::SvmParams;

fn pf(n: usize) -> PfConfig {
    PfConfig { n_particles: n, resampling: Resampling::Systematic }
}

#[test]
fn single_observation_matches_quadrature() {
    let p = SvmParams { mu: -0.3, phi: 0.95, sigma2: 0.06, beta: 0.4, rho: None };
    let var0 = p.sigma2 / (1.0 - p.phi * p.phi);
    let y = 1.3;
    let f = |h: f64| obs_pdf(y, h, p.beta) * normal_pdf(h, p.mu, var0);
    let sd = var0.sqrt();
    let want = integrate(&f, p.mu - 12.0 * sd, p.mu + 12.0 * sd, 1e-13).ln();
    let got = apf_loglik(&[y], &p, &pf(80_000), &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
    assert!((got.loglik - want).abs() < 0.01, "{} vs {want}", got.loglik);
    assert_eq!(got.log_wbar.len(), 1);
}

#[test]
fn three_observations_match_tensor_quadrature() {
    let y = [0.8, -1.9, 0.4];
    for rho in [None, Some(-0.6)] {
        let p = SvmParams { mu: 0.0, phi: 0.97, sigma2: 0.09, beta: 0.5, rho };
        let want = grid_loglik(&y, p.mu, p.phi, p.sigma2, p.beta, p.rho_or_zero(), 801);
        let reps = apf_replicates(&y, &p, &pf(80_000), 5, 20).unwrap();
        let avg = reps.iter().map(|r| r.loglik).sum::<f64>() / 20.0;
        assert!((avg - want).abs() < 0.02, "ρ={rho:?}: {avg} vs {want}");
        for r in &reps {
            assert!(r.cdf_bar.iter().all(|w| (0.0..=1.0).contains(w)));
        }
    }
}

#[test]
fn variance_falls_with_more_particles() {
    let p = SvmParams { mu: 0.0, phi: 0.97, sigma2: 0.09, beta: 0.3, rho: Some(-0.4) };
    let (y, _) = simulate(&p, 20, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
    let var = |n: usize| {
        let ll: Vec<f64> = apf_replicates(&y, &p, &pf(n), 11, 20).unwrap().iter().map(|r| r.loglik).collect();
        mean_var(&ll).1
    };
    let (small, large) = (var(10_000), var(40_000));
    assert!(small > large, "{small} <= {large}");
}

#[test]
fn replicates_are_reproducible_and_multinomial_works() {
    let p = SvmParams { mu: 0.0, phi: 0.9, sigma2: 0.1, beta: 0.2, rho: None };
    let y = [0.1, 0.5, -0.3, 1.1];
    let a = apf_replicates(&y, &p, &pf(2_000), 4, 3).unwrap();
    let b = apf_replicates(&y, &p, &pf(2_000), 4, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].loglik, a[1].loglik);
    let cfg = PfConfig { n_particles: 20_000, resampling: Resampling::Multinomial };
    let m = apf_loglik(&y, &p, &cfg, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    let want = grid_loglik(&y, p.mu, p.phi, p.sigma2, p.beta, 0.0, 601);
    assert!((m.loglik - want).abs() < 0.05);
}

#[test]
fn estimates_are_finite_on_simulated_designs() {
    for seed in 0..100u64 {
        let beta = [0.3, 0.5, 0.7][seed as usize % 3];
        let rho = (seed % 2 == 0).then_some(-0.5);
        let p = SvmParams { mu: 0.0, phi: 0.97, sigma2: 0.09, beta, rho };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (y, _) = simulate(&p, 1000, &mut rng).unwrap();
        let out = apf_loglik(&y, &p, &pf(300), &mut rng).unwrap();
        assert!(out.loglik.is_finite() && out.log_wbar.iter().all(|v| v.is_finite()));
    }
}
