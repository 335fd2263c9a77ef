//! Empirical noise statistics against the closed-form tap variance
//! `1 / (2·CNR·T)` and the replica-overlap covariance.

use gnss_lasso::simulator::tap_noise_sigma;
use gnss_lasso::{CorrelatorConfig, CorrelatorSnapshot64, NoiseModel, SnapshotParams, Simulator};
use num_complex::Complex;

/// Noise realizations: simulated taps minus the noiseless taps.
fn noise_draws(sim: &Simulator, model: NoiseModel, trials: u64) -> Vec<Vec<Complex<f64>>> {
    let config = *sim.config();
    let mut clean = SnapshotParams::nominal(config, 0);
    clean.noise = NoiseModel::Noiseless;
    let mean: CorrelatorSnapshot64 = sim.simulate(&clean).unwrap();
    (0..trials)
        .map(|seed| {
            let mut p = SnapshotParams::nominal(config, 1000 + seed);
            p.noise = model;
            let s: CorrelatorSnapshot64 = sim.simulate(&p).unwrap();
            s.taps.iter().zip(&mean.taps).map(|(a, b)| a - b).collect()
        })
        .collect()
}

/// Per-tap standard deviation pooled over I and Q.
fn pooled_std(draws: &[Vec<Complex<f64>>], tap: usize) -> f64 {
    let count = 2.0 * draws.len() as f64;
    let sum_sq: f64 = draws.iter().map(|d| d[tap].re.powi(2) + d[tap].im.powi(2)).sum();
    (sum_sq / count).sqrt()
}

fn in_phase_correlation(draws: &[Vec<Complex<f64>>], a: usize, b: usize) -> f64 {
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for d in draws {
        sab += d[a].re * d[b].re;
        saa += d[a].re * d[a].re;
        sbb += d[b].re * d[b].re;
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn closed_form_sigma_at_nominal_conditions() {
    let sigma = tap_noise_sigma(50.0, 1e-3);
    assert!((sigma - 0.070_710_678).abs() < 1e-8);
    assert!((tap_noise_sigma(50.0, 2e-3) - sigma / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn sample_level_noise_matches_closed_form() {
    let config = CorrelatorConfig::nominal();
    let sim = Simulator::new(&config).unwrap();
    let draws = noise_draws(&sim, NoiseModel::SampleLevel, 10_000);
    let expected = tap_noise_sigma(50.0, config.span);
    for tap in 0..config.taps() {
        let s = pooled_std(&draws, tap);
        assert!((s / expected - 1.0).abs() < 0.02, "tap {tap}: {s} vs {expected}");
    }
    // Replicas 0.1 chip apart share 90% of their chips.
    let rho = in_phase_correlation(&draws, 5, 6);
    assert!((rho - 0.9).abs() < 0.03, "adjacent correlation {rho}");
    let rho = in_phase_correlation(&draws, 0, 10);
    assert!(rho.abs() < 0.05, "taps one chip apart: {rho}");
}

#[test]
fn tap_covariance_mode_has_the_same_statistics() {
    let config = CorrelatorConfig::nominal();
    let sim = Simulator::new(&config).unwrap();
    let draws = noise_draws(&sim, NoiseModel::TapCovariance, 20_000);
    let expected = tap_noise_sigma(50.0, config.span);
    for tap in 0..config.taps() {
        let s = pooled_std(&draws, tap);
        assert!((s / expected - 1.0).abs() < 0.02, "tap {tap}: {s} vs {expected}");
    }
    let nc = config.samples() as f64;
    let gram = sim.bank().gram();
    for (a, b) in [(5, 6), (5, 7), (2, 8)] {
        let exact = gram[a][b] as f64 / nc;
        let rho = in_phase_correlation(&draws, a, b);
        assert!((rho - exact).abs() < 0.02, "taps {a},{b}: {rho} vs {exact}");
    }
}

#[test]
fn doubling_integration_halves_noise_variance() {
    let short = CorrelatorConfig::nominal();
    let long = short.with_span(2e-3).unwrap();
    let var = |config: &CorrelatorConfig, model, trials| {
        let sim = Simulator::new(config).unwrap();
        let draws = noise_draws(&sim, model, trials);
        (0..config.taps()).map(|t| pooled_std(&draws, t).powi(2)).sum::<f64>() / config.taps() as f64
    };
    let ratio = var(&long, NoiseModel::TapCovariance, 10_000) / var(&short, NoiseModel::TapCovariance, 10_000);
    assert!((ratio - 0.5).abs() < 0.02, "covariance mode ratio {ratio}");
    let ratio = var(&long, NoiseModel::SampleLevel, 2_000) / var(&short, NoiseModel::SampleLevel, 2_000);
    assert!((ratio - 0.5).abs() < 0.05, "sample mode ratio {ratio}");
}
