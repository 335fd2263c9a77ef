//! Peak extraction and the clean/spoofed verdict.

use num_complex::Complex;
use serde::Serialize;

use crate::dictionary::{CorrelatorConfig, Dictionary};
use crate::error::{Error, Result};
use crate::lasso::{solve_iq_lasso, solve_multi_lasso, Design, MultiDesign, SolverOptions, SparseSelector};
use crate::scalar::Scalar;
use crate::simulator::CorrelatorSnapshot;

/// Default relative detection threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.30;

/// Rules turning a selector into a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorRules {
    /// Fraction of the largest magnitude a coefficient must reach.
    pub threshold_frac: f64,
    /// Candidates within `residual_merge_taps` of the main peak and below
    /// this relative magnitude are folded into the main peak.
    pub residual_merge_level: f64,
    pub residual_merge_taps: usize,
}

impl Default for DetectorRules {
    fn default() -> Self {
        Self {
            threshold_frac: DEFAULT_THRESHOLD,
            residual_merge_level: 0.5,
            residual_merge_taps: 1,
        }
    }
}

impl DetectorRules {
    pub fn with_threshold(threshold_frac: f64) -> Self {
        Self {
            threshold_frac,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold_frac > 0.0 && self.threshold_frac < 1.0) {
            return Err(Error::invalid(format!(
                "threshold {} must lie strictly between 0 and 1",
                self.threshold_frac
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Clean,
    Spoofed,
}

/// The strongest candidate is the one a receiver would be following; the
/// other is reported as auxiliary. Neither label claims authenticity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakRole {
    Tracked,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    /// 0-based correlator tap.
    pub tap_index: usize,
    pub coarse_delay: f64,
    pub fine_delay: Option<f64>,
    /// Magnitude relative to the largest coefficient.
    pub magnitude: f64,
    pub role: PeakRole,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub candidates: Vec<Candidate>,
    pub verdict: Verdict,
    pub threshold_frac: f64,
    /// Divisor applied to the selector magnitudes.
    pub normalization: f64,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn candidate_taps(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.tap_index).collect()
    }
}

/// Thresholds a per-tap selector with the default rules at `threshold_frac`.
pub fn detect_peaks<T: Scalar>(selector: &SparseSelector<T>, threshold_frac: f64) -> Result<DetectionReport> {
    detect_peaks_with(selector, &DetectorRules::with_threshold(threshold_frac))
}

pub fn detect_peaks_with<T: Scalar>(selector: &SparseSelector<T>, rules: &DetectorRules) -> Result<DetectionReport> {
    rules.validate()?;
    if selector.is_empty() {
        return Err(Error::DegenerateInput("empty selector".into()));
    }
    let mags: Vec<f64> = selector.coeffs.iter().map(|c| c.abs().to_f64_lossy()).collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::DegenerateInput("selector has no non-zero coefficient".into()));
    }
    let rel: Vec<f64> = mags.iter().map(|m| m / peak).collect();

    let mut order: Vec<usize> = (0..rel.len()).filter(|&i| rel[i] >= rules.threshold_frac).collect();
    // Stable sort keeps the lower tap first on equal magnitudes.
    order.sort_by(|&a, &b| rel[b].total_cmp(&rel[a]));

    let main = order[0];
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| {
            i == main || !(i.abs_diff(main) <= rules.residual_merge_taps && rel[i] < rules.residual_merge_level)
        })
        .take(2)
        .collect();

    let candidates: Vec<Candidate> = kept
        .iter()
        .enumerate()
        .map(|(rank, &i)| Candidate {
            tap_index: i,
            coarse_delay: selector.delays[i],
            fine_delay: selector.fine_delays.as_ref().map(|f| f[i]),
            magnitude: rel[i],
            role: if rank == 0 {
                PeakRole::Tracked
            } else {
                PeakRole::Auxiliary
            },
        })
        .collect();
    let verdict = if candidates.len() >= 2 {
        Verdict::Spoofed
    } else {
        Verdict::Clean
    };
    Ok(DetectionReport {
        candidates,
        verdict,
        threshold_frac: rules.threshold_frac,
        normalization: peak,
    })
}

/// Outcome of one simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialOutcome {
    Hit,
    Miss,
}

/// A hit needs a candidate on the tap nearest the true spoofer delay.
pub fn classify_trial(report: &DetectionReport, true_spoof_delay: f64, config: &CorrelatorConfig) -> TrialOutcome {
    let target = config.nearest_tap(true_spoof_delay);
    if report.candidates.iter().any(|c| c.tap_index == target) {
        TrialOutcome::Hit
    } else {
        TrialOutcome::Miss
    }
}

/// Scales a snapshot so its largest tap magnitude is one. Returns the
/// normalized snapshot and the divisor.
pub fn normalize_snapshot<T: Scalar>(snapshot: &CorrelatorSnapshot<T>) -> Result<(CorrelatorSnapshot<T>, T)> {
    let peak = snapshot.taps.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    if !(peak > T::zero() && peak.is_finite()) {
        return Err(Error::DegenerateInput("snapshot has no signal".into()));
    }
    Ok((snapshot.scaled(Complex::new(peak.recip(), T::zero())), peak))
}

#[derive(Debug, Clone)]
enum Engine<T> {
    Single(Design<T>),
    Multi(MultiDesign<T>),
}

/// Snapshot in, selector and report out: normalization, single- or
/// multi-LASSO depending on the dictionary's p-factor, then thresholding.
#[derive(Debug, Clone)]
pub struct Analyzer<T> {
    config: CorrelatorConfig,
    engine: Engine<T>,
    lambda: T,
    opts: SolverOptions<T>,
    rules: DetectorRules,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis<T> {
    pub selector: SparseSelector<T>,
    pub report: DetectionReport,
    /// 1-based winning sub-dictionary per tap for multi-LASSO runs.
    pub winning_k: Option<Vec<usize>>,
}

impl<T: Scalar> Analyzer<T> {
    pub fn new(dict: &Dictionary<T>, lambda: T, opts: SolverOptions<T>, rules: DetectorRules) -> Result<Self> {
        rules.validate()?;
        let engine = if dict.grid.fp == 1 {
            Engine::Single(Design::from_dictionary(dict))
        } else {
            Engine::Multi(MultiDesign::from_dictionary(dict)?)
        };
        Ok(Self {
            config: dict.config,
            engine,
            lambda,
            opts,
            rules,
        })
    }

    pub fn config(&self) -> &CorrelatorConfig {
        &self.config
    }

    pub fn rules(&self) -> &DetectorRules {
        &self.rules
    }

    /// Normalized-input selector, plus winning K for multi-LASSO.
    pub fn selector(&self, snapshot: &CorrelatorSnapshot<T>) -> Result<(SparseSelector<T>, Option<Vec<usize>>)> {
        if snapshot.taps.len() != self.config.taps() {
            return Err(Error::invalid(format!(
                "snapshot has {} taps, analyzer expects {}",
                snapshot.taps.len(),
                self.config.taps()
            )));
        }
        let (y, _) = normalize_snapshot(snapshot)?;
        match &self.engine {
            Engine::Single(design) => Ok((solve_iq_lasso(design, &y, self.lambda, &self.opts)?, None)),
            Engine::Multi(design) => {
                let lambdas = vec![self.lambda; design.fp()];
                let out = solve_multi_lasso(design, &y, &lambdas, &self.opts)?;
                Ok((out.selector, Some(out.winning_k)))
            }
        }
    }

    pub fn analyze(&self, snapshot: &CorrelatorSnapshot<T>) -> Result<Analysis<T>> {
        let (selector, winning_k) = self.selector(snapshot)?;
        let report = detect_peaks_with(&selector, &self.rules)?;
        Ok(Analysis {
            selector,
            report,
            winning_k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn selector(coeffs: Vec<f64>) -> SparseSelector<f64> {
        let config = CorrelatorConfig::nominal();
        SparseSelector {
            delays: config.tap_delays(),
            coeffs,
            fine_delays: None,
            sweeps: 1,
            kkt_residual: 0.0,
        }
    }

    fn taps(pairs: &[(usize, f64)]) -> Vec<f64> {
        let mut v = vec![0.0; 11];
        for &(i, m) in pairs {
            v[i] = m;
        }
        v
    }

    #[test]
    fn single_peak_is_clean() {
        let r = detect_peaks(&selector(taps(&[(5, 0.8), (9, 0.1)])), 0.3).unwrap();
        assert_eq!(r.verdict, Verdict::Clean);
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.candidates[0].role, PeakRole::Tracked);
        assert!((r.normalization - 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_separated_peaks_are_spoofed() {
        let r = detect_peaks(&selector(taps(&[(5, 1.0), (8, 0.42)])), 0.3).unwrap();
        assert_eq!(r.verdict, Verdict::Spoofed);
        assert_eq!(r.candidate_taps(), vec![5, 8]);
        assert!((r.candidates[1].coarse_delay - 0.3).abs() < 1e-12);
        assert_eq!(r.candidates[1].role, PeakRole::Auxiliary);
    }

    #[test]
    fn split_peak_below_threshold_is_clean() {
        let r = detect_peaks(&selector(taps(&[(5, 1.0), (8, 0.25), (9, 0.2)])), 0.3).unwrap();
        assert_eq!(r.verdict, Verdict::Clean);
    }

    #[test]
    fn adjacent_weak_residual_merges_into_main_peak() {
        let r = detect_peaks(&selector(taps(&[(5, 1.0), (6, 0.45)])), 0.3).unwrap();
        assert_eq!(r.verdict, Verdict::Clean);
        let r = detect_peaks(&selector(taps(&[(5, 1.0), (6, 0.55)])), 0.3).unwrap();
        assert_eq!(r.verdict, Verdict::Spoofed);
    }

    #[test]
    fn at_most_two_candidates() {
        let r = detect_peaks(&selector(taps(&[(1, 0.9), (5, 1.0), (9, 0.8)])), 0.3).unwrap();
        assert_eq!(r.candidate_taps(), vec![5, 1]);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        assert!(matches!(
            detect_peaks(&selector(vec![0.0; 11]), 0.3),
            Err(Error::DegenerateInput(_))
        ));
        assert!(detect_peaks(&selector(taps(&[(5, 1.0)])), 0.0).is_err());
        assert!(detect_peaks(&selector(taps(&[(5, 1.0)])), 1.0).is_err());
    }

    #[test]
    fn classification_uses_nearest_tap() {
        let config = CorrelatorConfig::nominal();
        let spoofed = detect_peaks(&selector(taps(&[(5, 1.0), (8, 0.42)])), 0.3).unwrap();
        assert_eq!(classify_trial(&spoofed, 0.34, &config), TrialOutcome::Hit);
        let clean = detect_peaks(&selector(taps(&[(5, 1.0)])), 0.3).unwrap();
        assert_eq!(classify_trial(&clean, 0.34, &config), TrialOutcome::Miss);
        let wrong = detect_peaks(&selector(taps(&[(5, 1.0), (9, 0.6)])), 0.3).unwrap();
        assert_eq!(classify_trial(&wrong, 0.30, &config), TrialOutcome::Miss);
    }

    #[test]
    fn json_carries_report_fields() {
        let r = detect_peaks(&selector(taps(&[(5, 1.0), (8, 0.42)])), 0.3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["verdict"], "spoofed");
        assert_eq!(v["candidates"][1]["tap_index"], 8);
        assert_eq!(v["threshold_frac"], 0.3);
        assert!(v["candidates"][0]["fine_delay"].is_null());
    }

    #[test]
    fn normalization_sets_unit_peak() {
        let config = CorrelatorConfig::nominal();
        let t = (0..11).map(|i| Complex::new(i as f64, -2.0)).collect();
        let snap = CorrelatorSnapshot::new(t, config, "x").unwrap();
        let (n, div) = normalize_snapshot(&snap).unwrap();
        assert!((div - (100.0f64 + 4.0).sqrt()).abs() < 1e-12);
        assert!((n.taps[10].norm() - 1.0).abs() < 1e-12);
        let zero = CorrelatorSnapshot::new(vec![Complex::new(0.0, 0.0); 11], config, "z").unwrap();
        assert!(normalize_snapshot(&zero).is_err());
    }
}
