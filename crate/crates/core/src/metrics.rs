//! Monte-Carlo evaluation: peak-sensitivity sweeps, detection error rate
//! and false-alarm campaigns, plus their CSV tables.
//!
//! Campaigns compute in `f64`. Every trial draws its randomness from a seed
//! derived from `(master_seed, scenario, trial)`, so results do not depend on
//! the worker count or scheduling.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{classify_trial, detect_peaks_with, Analyzer, DetectorRules, TrialOutcome, Verdict};
use crate::dictionary::{dictionary_for, CorrelatorConfig, GridConfig};
use crate::error::{Error, Result};
use crate::lasso::{SolverOptions, SparseSelector, DEFAULT_LAMBDA};
use crate::simulator::{NoiseModel, PeakSpec, Simulator, SnapshotParams};

/// Level at which the PSR detection bandwidth is read off.
pub const PSR_LEVEL: f64 = 0.7;

/// Settings shared by all campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CampaignSettings {
    pub master_seed: u64,
    pub cnr_dbhz: f64,
    pub lambda: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub threshold_frac: f64,
    #[serde(skip)]
    pub noise: NoiseModel,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        let opts = SolverOptions::<f64>::default();
        Self {
            master_seed: 0,
            cnr_dbhz: 50.0,
            lambda: DEFAULT_LAMBDA,
            tol: opts.tol,
            max_sweeps: opts.max_sweeps,
            threshold_frac: DetectorRules::default().threshold_frac,
            noise: NoiseModel::SampleLevel,
        }
    }
}

impl CampaignSettings {
    fn solver_options(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
        }
    }

    fn rules(&self) -> DetectorRules {
        DetectorRules::with_threshold(self.threshold_frac)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial of one stream.
pub fn trial_seed(master_seed: u64, stream: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ stream) ^ trial)
}

fn stream_key(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_u64, |h, &p| splitmix64(h ^ p))
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(())
}

/// Simulator plus analyzer for one `(integration span, Fp)` pair.
struct Pipeline {
    simulator: Simulator,
    analyzer: Analyzer<f64>,
}

impl Pipeline {
    fn new(config: &CorrelatorConfig, fp: usize, settings: &CampaignSettings) -> Result<Self> {
        let dict = dictionary_for::<f64>(config, fp)?;
        Ok(Self {
            simulator: Simulator::new(config)?,
            analyzer: Analyzer::new(&dict, settings.lambda, settings.solver_options(), settings.rules())?,
        })
    }

    fn selector(&self, params: &SnapshotParams) -> Result<SparseSelector<f64>> {
        let snapshot = self.simulator.simulate::<f64>(params)?;
        Ok(self.analyzer.selector(&snapshot)?.0)
    }
}

/// Pipelines keyed by `(span bits, Fp)`, built once per campaign.
struct PipelineCache {
    entries: HashMap<(u64, usize), Pipeline>,
}

impl PipelineCache {
    fn build(base: &CorrelatorConfig, keys: &[(f64, usize)], settings: &CampaignSettings) -> Result<Self> {
        let mut entries = HashMap::new();
        for &(span, fp) in keys {
            let key = (span.to_bits(), fp);
            if let std::collections::hash_map::Entry::Vacant(slot) = entries.entry(key) {
                slot.insert(Pipeline::new(&base.with_span(span)?, fp, settings)?);
            }
        }
        Ok(Self { entries })
    }

    fn get(&self, span: f64, fp: usize) -> &Pipeline {
        &self.entries[&(span.to_bits(), fp)]
    }
}

// ---------------------------------------------------------------- PSR

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsrSettings {
    pub observed_tap: f64,
    pub relative_power_db: f64,
    pub sweep_step: f64,
    /// Snapshots averaged per sweep point.
    pub repeats: usize,
}

impl Default for PsrSettings {
    fn default() -> Self {
        Self {
            observed_tap: 0.3,
            relative_power_db: 0.0,
            sweep_step: 0.01,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsrCurve {
    pub observed_tap: f64,
    pub sweep_delays: Vec<f64>,
    /// Detector-normalized magnitude at the observed tap.
    pub responses: Vec<f64>,
    pub level: f64,
    /// Width of the above-level region around the observed tap.
    pub detection_bandwidth: f64,
    /// Edges of that region, when it exists.
    pub band: Option<(f64, f64)>,
}

/// Sweeps a spoofer across the tap span with the authentic peak fixed at the
/// prompt and records the response of one tap.
pub fn run_psr_sweep(
    config: &CorrelatorConfig,
    grid: &GridConfig,
    psr: &PsrSettings,
    settings: &CampaignSettings,
) -> Result<PsrCurve> {
    let tap = config
        .tap_index_of(psr.observed_tap)
        .ok_or_else(|| Error::invalid(format!("observed tap {} is not on the correlator grid", psr.observed_tap)))?;
    if !(psr.sweep_step > 0.0) {
        return Err(Error::invalid("sweep step must be positive"));
    }
    check_trials(psr.repeats)?;
    let pipeline = Pipeline::new(config, grid.fp, settings)?;

    let half = config.delta_el / 2.0;
    let points = (2.0 * half / psr.sweep_step + 1e-9).floor() as usize + 1;
    let sweep_delays: Vec<f64> = (0..points).map(|k| -half + k as f64 * psr.sweep_step).collect();
    let stream = stream_key(&[1, psr.observed_tap.to_bits(), psr.relative_power_db.to_bits(), grid.fp as u64]);

    let responses = sweep_delays
        .par_iter()
        .enumerate()
        .map(|(k, &delay)| {
            let mut total = 0.0;
            for r in 0..psr.repeats {
                let params = SnapshotParams {
                    authentic: PeakSpec::unit(0.0),
                    spoofer: Some(PeakSpec::from_db(delay, psr.relative_power_db)),
                    cnr_dbhz: settings.cnr_dbhz,
                    config: *config,
                    seed: trial_seed(settings.master_seed, stream, (k * psr.repeats + r) as u64),
                    noise: settings.noise,
                };
                let sel = pipeline.selector(&params)?;
                let peak = sel.max_magnitude();
                if peak > 0.0 {
                    total += sel.coeffs[tap] / peak;
                }
            }
            Ok(total / psr.repeats as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let band = level_band(&sweep_delays, &responses, psr.observed_tap, PSR_LEVEL);
    Ok(PsrCurve {
        observed_tap: psr.observed_tap,
        detection_bandwidth: band.map_or(0.0, |(lo, hi)| hi - lo),
        band,
        sweep_delays,
        responses,
        level: PSR_LEVEL,
    })
}

/// Region around `center` where `values ≥ level`, with edges linearly
/// interpolated between samples. `None` if the sample nearest `center` is
/// below the level.
pub fn level_band(xs: &[f64], values: &[f64], center: f64, level: f64) -> Option<(f64, f64)> {
    let start = (0..xs.len()).min_by(|&a, &b| (xs[a] - center).abs().total_cmp(&(xs[b] - center).abs()))?;
    if values[start] < level {
        return None;
    }
    let crossing = |inside: usize, outside: usize| {
        let t = (values[inside] - level) / (values[inside] - values[outside]);
        xs[inside] + t * (xs[outside] - xs[inside])
    };
    let mut lo = start;
    while lo > 0 && values[lo - 1] >= level {
        lo -= 1;
    }
    let mut hi = start;
    while hi + 1 < xs.len() && values[hi + 1] >= level {
        hi += 1;
    }
    let left = if lo > 0 { crossing(lo, lo - 1) } else { xs[0] };
    let right = if hi + 1 < xs.len() {
        crossing(hi, hi + 1)
    } else {
        xs[xs.len() - 1]
    };
    Some((left, right))
}

pub fn write_psr_csv<W: Write>(curve: &PsrCurve, mut out: W) -> Result<()> {
    writeln!(out, "sweep_delay,response")?;
    for (d, r) in curve.sweep_delays.iter().zip(&curve.responses) {
        writeln!(out, "{d},{r}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------- DER

/// How the spoofer delay is chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DelayPolicy {
    Fixed(f64),
    /// Uniform over `{step, 2·step, …, max}`.
    UniformGrid { step: f64, max: f64 },
}

impl DelayPolicy {
    /// Uniform on the 0.01-chip grid over (0, 1].
    pub fn fine_grid() -> Self {
        DelayPolicy::UniformGrid { step: 0.01, max: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DelayPolicy::Fixed(d) if !d.is_finite() => Err(Error::invalid("spoofer delay must be finite")),
            DelayPolicy::UniformGrid { step, max } if !(step > 0.0 && max >= step) => {
                Err(Error::invalid("uniform delay grid needs 0 < step ≤ max"))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, seed: u64) -> f64 {
        match *self {
            DelayPolicy::Fixed(d) => d,
            DelayPolicy::UniformGrid { step, max } => {
                let points = (max / step + 1e-9).floor() as u64;
                let k = ChaCha8Rng::seed_from_u64(seed).random_range(1..=points);
                k as f64 * step
            }
        }
    }

    fn key(&self) -> u64 {
        match *self {
            DelayPolicy::Fixed(d) => stream_key(&[1, d.to_bits()]),
            DelayPolicy::UniformGrid { step, max } => stream_key(&[2, step.to_bits(), max.to_bits()]),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DelayPolicy::Fixed(d) => format!("fixed:{d}"),
            DelayPolicy::UniformGrid { step, max } => format!("uniform:{step}:{max}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerScenario {
    pub relative_power_db: f64,
    /// Coherent integration length in seconds.
    pub span: f64,
    pub fp: usize,
    pub delay_policy: DelayPolicy,
}

impl DerScenario {
    /// Trials of scenarios differing only in `fp` share their random draws.
    fn stream(&self) -> u64 {
        stream_key(&[2, self.relative_power_db.to_bits(), self.span.to_bits(), self.delay_policy.key()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerRow {
    pub scenario: DerScenario,
    pub trials: usize,
    pub misses: usize,
}

impl DerRow {
    pub fn der(&self) -> f64 {
        self.misses as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerTable {
    pub master_seed: u64,
    pub rows: Vec<DerRow>,
}

/// Runs `trials` spoofed snapshots per scenario and counts spoofer misses.
pub fn run_der_campaign(
    config: &CorrelatorConfig,
    scenarios: &[DerScenario],
    trials: usize,
    settings: &CampaignSettings,
) -> Result<DerTable> {
    check_trials(trials)?;
    for s in scenarios {
        s.delay_policy.validate()?;
        GridConfig::new(config, s.fp)?;
    }
    let keys: Vec<(f64, usize)> = scenarios.iter().map(|s| (s.span, s.fp)).collect();
    let cache = PipelineCache::build(config, &keys, settings)?;
    let rules = settings.rules();

    let rows = scenarios
        .iter()
        .map(|scenario| {
            let pipeline = cache.get(scenario.span, scenario.fp);
            let sim_config = pipeline.simulator.config();
            let stream = scenario.stream();
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(settings.master_seed, stream, t as u64);
                    let delay = scenario.delay_policy.draw(splitmix64(seed ^ 0xD1));
                    let params = SnapshotParams {
                        authentic: PeakSpec::unit(0.0),
                        spoofer: Some(PeakSpec::from_db(delay, scenario.relative_power_db)),
                        cnr_dbhz: settings.cnr_dbhz,
                        config: *sim_config,
                        seed,
                        noise: settings.noise,
                    };
                    let report = detect_peaks_with(&pipeline.selector(&params)?, &rules)?;
                    Ok(classify_trial(&report, delay, sim_config))
                })
                .collect::<Result<Vec<TrialOutcome>>>()?;
            Ok(DerRow {
                scenario: *scenario,
                trials,
                misses: outcomes.iter().filter(|&&o| o == TrialOutcome::Miss).count(),
            })
        })
        .collect::<Result<Vec<DerRow>>>()?;
    Ok(DerTable {
        master_seed: settings.master_seed,
        rows,
    })
}

pub fn write_der_csv<W: Write>(table: &DerTable, mut out: W) -> Result<()> {
    writeln!(out, "power_db,length_ms,Fp,delay_policy,trials,misses,der")?;
    for row in &table.rows {
        let s = &row.scenario;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.relative_power_db,
            span_ms(s.span),
            s.fp,
            s.delay_policy.label(),
            row.trials,
            row.misses,
            row.der()
        )?;
    }
    Ok(())
}

fn span_ms(span: f64) -> f64 {
    (span * 1e3 * 1e9).round() / 1e9
}

// ---------------------------------------------------------------- PFA

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfaRow {
    pub threshold: f64,
    pub trials: usize,
    pub false_alarms: usize,
    pub paired_trials: usize,
    pub paired_misses: usize,
}

impl PfaRow {
    pub fn pfa(&self) -> f64 {
        self.false_alarms as f64 / self.trials as f64
    }

    pub fn paired_der(&self) -> f64 {
        self.paired_misses as f64 / self.paired_trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfaCurve {
    pub fp: usize,
    pub master_seed: u64,
    pub rows: Vec<PfaRow>,
}

/// Relative power of the paired worst-case spoofer.
pub const WORST_CASE_POWER_DB: f64 = -6.0;

/// Authentic-only trials give the false-alarm rate; worst-case spoofed trials
/// (−6 dB, uniform fine-grid delay, the config's span) give the paired DER.
/// Each trial is solved once and re-thresholded at every level.
pub fn run_pfa_campaign(
    config: &CorrelatorConfig,
    fp: usize,
    thresholds: &[f64],
    trials: usize,
    settings: &CampaignSettings,
) -> Result<PfaCurve> {
    check_trials(trials)?;
    if thresholds.is_empty() {
        return Err(Error::invalid("at least one threshold required"));
    }
    let rule_set: Vec<DetectorRules> = thresholds
        .iter()
        .map(|&t| {
            let r = DetectorRules::with_threshold(t);
            if t > 0.0 && t < 1.0 {
                Ok(r)
            } else {
                Err(Error::invalid(format!("threshold {t} must lie strictly between 0 and 1")))
            }
        })
        .collect::<Result<_>>()?;
    let pipeline = Pipeline::new(config, fp, settings)?;

    let clean_stream = stream_key(&[3, config.span.to_bits()]);
    let alarms: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut params = SnapshotParams::nominal(*config, trial_seed(settings.master_seed, clean_stream, t as u64));
            params.cnr_dbhz = settings.cnr_dbhz;
            params.noise = settings.noise;
            let sel = pipeline.selector(&params)?;
            rule_set
                .iter()
                .map(|r| Ok(detect_peaks_with(&sel, r)?.verdict == Verdict::Spoofed))
                .collect()
        })
        .collect::<Result<_>>()?;

    let worst = DerScenario {
        relative_power_db: WORST_CASE_POWER_DB,
        span: config.span,
        fp,
        delay_policy: DelayPolicy::fine_grid(),
    };
    let worst_stream = worst.stream();
    let misses: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(settings.master_seed, worst_stream, t as u64);
            let delay = worst.delay_policy.draw(splitmix64(seed ^ 0xD1));
            let params = SnapshotParams {
                authentic: PeakSpec::unit(0.0),
                spoofer: Some(PeakSpec::from_db(delay, worst.relative_power_db)),
                cnr_dbhz: settings.cnr_dbhz,
                config: *config,
                seed,
                noise: settings.noise,
            };
            let sel = pipeline.selector(&params)?;
            rule_set
                .iter()
                .map(|r| Ok(classify_trial(&detect_peaks_with(&sel, r)?, delay, config) == TrialOutcome::Miss))
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows = thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| PfaRow {
            threshold,
            trials,
            false_alarms: alarms.iter().filter(|a| a[i]).count(),
            paired_trials: trials,
            paired_misses: misses.iter().filter(|m| m[i]).count(),
        })
        .collect();
    Ok(PfaCurve {
        fp,
        master_seed: settings.master_seed,
        rows,
    })
}

pub fn write_pfa_csv<W: Write>(curve: &PfaCurve, mut out: W) -> Result<()> {
    writeln!(out, "threshold,trials,false_alarms,pfa,paired_der")?;
    for row in &curve.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.threshold,
            row.trials,
            row.false_alarms,
            row.pfa(),
            row.paired_der()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_across_streams_and_trials() {
        let a = trial_seed(7, 1, 0);
        assert_ne!(a, trial_seed(7, 1, 1));
        assert_ne!(a, trial_seed(7, 2, 0));
        assert_ne!(a, trial_seed(8, 1, 0));
        assert_eq!(a, trial_seed(7, 1, 0));
    }

    #[test]
    fn uniform_policy_stays_on_grid() {
        let p = DelayPolicy::fine_grid();
        for s in 0..500 {
            let d = p.draw(s);
            assert!(d > 0.0 && d <= 1.0 + 1e-12);
            assert!(((d / 0.01) - (d / 0.01).round()).abs() < 1e-9);
        }
        assert_eq!(DelayPolicy::Fixed(0.3).draw(9), 0.3);
    }

    #[test]
    fn band_interpolates_crossings() {
        let xs = [0.0, 0.1, 0.2, 0.3, 0.4];
        let v = [0.0, 0.6, 1.0, 0.8, 0.2];
        let (lo, hi) = level_band(&xs, &v, 0.2, 0.7).unwrap();
        assert!((lo - 0.125).abs() < 1e-12);
        assert!((hi - (0.3 + 0.1 / 6.0)).abs() < 1e-12);
        assert!(level_band(&xs, &v, 0.1, 0.7).is_none());
    }

    #[test]
    fn zero_trials_rejected() {
        let config = CorrelatorConfig::nominal();
        let s = [DerScenario {
            relative_power_db: 0.0,
            span: 1e-3,
            fp: 1,
            delay_policy: DelayPolicy::Fixed(0.3),
        }];
        assert!(run_der_campaign(&config, &s, 0, &CampaignSettings::default()).is_err());
        assert!(run_pfa_campaign(&config, 1, &[0.3], 0, &CampaignSettings::default()).is_err());
        assert!(run_pfa_campaign(&config, 1, &[1.2], 5, &CampaignSettings::default()).is_err());
    }

    #[test]
    fn span_label_in_milliseconds() {
        assert_eq!(span_ms(1e-3), 1.0);
        assert_eq!(span_ms(0.015), 15.0);
    }
}
