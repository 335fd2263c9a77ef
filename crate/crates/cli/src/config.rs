//! Run configuration: a TOML file whose every key defaults to the nominal
//! simulation parameters, so an empty file reproduces the nominal scenario.

use std::path::Path;

use gnss_lasso::metrics::{CampaignSettings, DelayPolicy, DerScenario, PsrSettings};
use gnss_lasso::{CorrelatorConfig, GridConfig, NoiseModel, PeakSpec, SnapshotParams, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub correlator: CorrelatorSection,
    pub grid: GridSection,
    pub signal: SignalSection,
    pub solver: SolverSection,
    pub detector: DetectorSection,
    pub campaign: CampaignSection,
    pub psr: PsrSection,
    pub der: DerSection,
    pub pfa: PfaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelatorSection {
    /// Early-minus-late span in chips.
    pub delta_el: f64,
    /// Tap spacing in chips.
    pub spacing: f64,
    pub fs_hz: f64,
    pub span_ms: f64,
    pub prn: u8,
}

impl Default for CorrelatorSection {
    fn default() -> Self {
        Self {
            delta_el: 1.0,
            spacing: 0.1,
            fs_hz: 25e6,
            span_ms: 1.0,
            prn: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub fp: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { fp: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// White noise per sample, passed through the replica bank.
    #[default]
    Sample,
    /// Tap noise drawn from the replica covariance directly.
    Covariance,
    None,
}

impl From<NoiseKind> for NoiseModel {
    fn from(kind: NoiseKind) -> Self {
        match kind {
            NoiseKind::Sample => NoiseModel::SampleLevel,
            NoiseKind::Covariance => NoiseModel::TapCovariance,
            NoiseKind::None => NoiseModel::Noiseless,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakSection {
    pub enabled: bool,
    pub code_phase: f64,
    /// Power relative to the unit authentic reference.
    pub power_db: f64,
    pub carrier_phase: f64,
}

impl Default for PeakSection {
    fn default() -> Self {
        Self {
            enabled: true,
            code_phase: 0.0,
            power_db: 0.0,
            carrier_phase: 0.0,
        }
    }
}

impl PeakSection {
    fn spec(&self) -> Result<PeakSpec, CliError> {
        if !self.power_db.is_finite() {
            return Err(CliError::config("peak power_db must be finite"));
        }
        Ok(PeakSpec::new(self.code_phase, 10f64.powf(self.power_db / 10.0), self.carrier_phase)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub cnr_dbhz: f64,
    pub noise: NoiseKind,
    pub authentic: PeakSection,
    pub spoofer: PeakSection,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            cnr_dbhz: 50.0,
            noise: NoiseKind::Sample,
            authentic: PeakSection::default(),
            spoofer: PeakSection {
                code_phase: 0.34,
                power_db: -3.0,
                ..PeakSection::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub lambda: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let opts = SolverOptions::<f64>::default();
        Self {
            lambda: gnss_lasso::lasso::DEFAULT_LAMBDA,
            tol: opts.tol,
            max_sweeps: opts.max_sweeps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub threshold: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            threshold: gnss_lasso::detector::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            trials: 300,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsrSection {
    pub observed_tap: f64,
    pub power_db: f64,
    pub step: f64,
    pub span_ms: f64,
    /// Noisy snapshots averaged per sweep point.
    pub repeats: usize,
}

impl Default for PsrSection {
    fn default() -> Self {
        Self {
            observed_tap: 0.3,
            power_db: 0.0,
            step: 0.01,
            span_ms: 20.0,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayKind {
    /// Uniform on `{step, 2·step, …, max}` per trial.
    Uniform,
    /// One scenario per listed delay.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerSection {
    pub powers_db: Vec<f64>,
    pub lengths_ms: Vec<f64>,
    pub delays: DelayKind,
    pub uniform_step: f64,
    pub uniform_max: f64,
    pub fixed_delays: Vec<f64>,
}

impl Default for DerSection {
    fn default() -> Self {
        Self {
            powers_db: vec![-6.0, -3.0, 0.0],
            lengths_ms: vec![1.0, 5.0, 10.0, 15.0, 20.0],
            delays: DelayKind::Uniform,
            uniform_step: 0.01,
            uniform_max: 1.0,
            fixed_delays: (1..=10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfaSection {
    pub thresholds: Vec<f64>,
}

impl Default for PfaSection {
    fn default() -> Self {
        Self {
            thresholds: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// Checks every section, including what the library would reject later.
    pub fn validate(&self) -> Result<(), CliError> {
        let correlator = self.correlator()?;
        GridConfig::new(&correlator, self.grid.fp)?;
        if !self.signal.cnr_dbhz.is_finite() {
            return Err(CliError::config("signal.cnr_dbhz must be finite"));
        }
        self.signal.authentic.spec()?;
        self.signal.spoofer.spec()?;
        let s = &self.solver;
        if !(s.lambda.is_finite() && s.lambda >= 0.0) {
            return Err(CliError::config("solver.lambda must be non-negative"));
        }
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(CliError::config("solver.tol must be positive"));
        }
        if s.max_sweeps == 0 {
            return Err(CliError::config("solver.max_sweeps must be at least 1"));
        }
        check_threshold("detector.threshold", self.detector.threshold)?;
        if self.campaign.trials == 0 {
            return Err(CliError::config("campaign.trials must be at least 1"));
        }
        let p = &self.psr;
        if !(p.step.is_finite() && p.step > 0.0) {
            return Err(CliError::config("psr.step must be positive"));
        }
        if p.repeats == 0 {
            return Err(CliError::config("psr.repeats must be at least 1"));
        }
        if !p.power_db.is_finite() {
            return Err(CliError::config("psr.power_db must be finite"));
        }
        let psr_config = correlator.with_span(p.span_ms * 1e-3)?;
        if psr_config.tap_index_of(p.observed_tap).is_none() {
            return Err(CliError::config(format!(
                "psr.observed_tap {} is not a correlator tap",
                p.observed_tap
            )));
        }
        let d = &self.der;
        if d.powers_db.is_empty() || d.lengths_ms.is_empty() {
            return Err(CliError::config("der.powers_db and der.lengths_ms must be non-empty"));
        }
        if d.powers_db.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("der.powers_db must be finite"));
        }
        for &ms in &d.lengths_ms {
            correlator.with_span(ms * 1e-3)?;
        }
        match d.delays {
            DelayKind::Uniform => {
                if !(d.uniform_step > 0.0 && d.uniform_max >= d.uniform_step && d.uniform_max.is_finite()) {
                    return Err(CliError::config("der needs 0 < uniform_step ≤ uniform_max"));
                }
            }
            DelayKind::Fixed => {
                if d.fixed_delays.is_empty() || d.fixed_delays.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::config("der.fixed_delays must be a non-empty list of delays"));
                }
            }
        }
        if self.pfa.thresholds.is_empty() {
            return Err(CliError::config("pfa.thresholds must be non-empty"));
        }
        for &t in &self.pfa.thresholds {
            check_threshold("pfa.thresholds", t)?;
        }
        Ok(())
    }

    pub fn correlator(&self) -> Result<CorrelatorConfig, CliError> {
        let c = &self.correlator;
        Ok(CorrelatorConfig::new(c.delta_el, c.spacing, c.fs_hz, c.span_ms * 1e-3, c.prn)?)
    }

    pub fn solver_options(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol: self.solver.tol,
            max_sweeps: self.solver.max_sweeps,
        }
    }

    pub fn campaign_settings(&self) -> CampaignSettings {
        CampaignSettings {
            master_seed: self.campaign.master_seed,
            cnr_dbhz: self.signal.cnr_dbhz,
            lambda: self.solver.lambda,
            tol: self.solver.tol,
            max_sweeps: self.solver.max_sweeps,
            threshold_frac: self.detector.threshold,
            noise: self.signal.noise.into(),
        }
    }

    pub fn snapshot_params(&self) -> Result<SnapshotParams, CliError> {
        let spoofer = &self.signal.spoofer;
        Ok(SnapshotParams {
            authentic: self.signal.authentic.spec()?,
            spoofer: if spoofer.enabled { Some(spoofer.spec()?) } else { None },
            cnr_dbhz: self.signal.cnr_dbhz,
            config: self.correlator()?,
            seed: self.campaign.master_seed,
            noise: self.signal.noise.into(),
        })
    }

    pub fn psr_settings(&self) -> PsrSettings {
        PsrSettings {
            observed_tap: self.psr.observed_tap,
            relative_power_db: self.psr.power_db,
            sweep_step: self.psr.step,
            repeats: self.psr.repeats,
        }
    }

    /// Powers × lengths (× fixed delays), all at the configured Fp.
    pub fn der_scenarios(&self) -> Vec<DerScenario> {
        let d = &self.der;
        let policies: Vec<DelayPolicy> = match d.delays {
            DelayKind::Uniform => vec![DelayPolicy::UniformGrid {
                step: d.uniform_step,
                max: d.uniform_max,
            }],
            DelayKind::Fixed => d.fixed_delays.iter().map(|&v| DelayPolicy::Fixed(v)).collect(),
        };
        let mut out = Vec::new();
        for &power in &d.powers_db {
            for &ms in &d.lengths_ms {
                for &policy in &policies {
                    out.push(DerScenario {
                        relative_power_db: power,
                        span: ms * 1e-3,
                        fp: self.grid.fp,
                        delay_policy: policy,
                    });
                }
            }
        }
        out
    }
}

fn check_threshold(name: &str, t: f64) -> Result<(), CliError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} value {t} must lie strictly between 0 and 1")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_nominal_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.correlator().unwrap(), CorrelatorConfig::nominal());
        assert_eq!(c.solver.lambda, 0.3009);
        assert_eq!(c.detector.threshold, 0.3);
        assert_eq!(c.der_scenarios().len(), 15);
    }

    #[test]
    fn dump_round_trips() {
        let mut c = RunConfig::default();
        c.grid.fp = 5;
        c.signal.noise = NoiseKind::Covariance;
        c.der.delays = DelayKind::Fixed;
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[correlator]\nspacing = 0.3",
            "[grid]\nfp = 0",
            "[solver]\nlambda = -1.0",
            "[detector]\nthreshold = 1.0",
            "[campaign]\ntrials = 0",
            "[psr]\nobserved_tap = 0.33",
            "[pfa]\nthresholds = []",
            "[signal.spoofer]\npower_db = nan",
            "[unknown]\nx = 1",
        ] {
            assert_eq!(RunConfig::parse(text).unwrap_err().exit_code(), 2, "{text}");
        }
    }
}
