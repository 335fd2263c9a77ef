//! Synthetic correlator-tap snapshots: authentic peak, optional spoofer
//! peak and CNR-calibrated noise, all passed through the replica bank.
//!
//! Noise is specified against a unit-amplitude reference signal: the
//! complex per-sample noise variance is `fs / 10^(CNR/10)`, split evenly
//! between I and Q, so each tap component ends up with variance
//! `1 / (2 · 10^(CNR/10) · T)`.

use std::io::{BufRead, Write};

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codegen::sample_code;
use crate::dictionary::{build_replica_bank, CorrelatorConfig, ReplicaBank};
use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::scalar::Scalar;

/// One correlation peak in the received signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSpec {
    /// Delay relative to the prompt estimate, in chips.
    pub code_phase: f64,
    /// Linear power relative to the unit-amplitude reference.
    pub power: f64,
    /// Carrier phase offset in radians.
    pub carrier_phase: f64,
}

impl PeakSpec {
    pub fn new(code_phase: f64, power: f64, carrier_phase: f64) -> Result<Self> {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::invalid(format!("peak power {power} must be non-negative")));
        }
        if !(code_phase.is_finite() && carrier_phase.is_finite()) {
            return Err(Error::invalid("peak delay and carrier phase must be finite"));
        }
        Ok(Self {
            code_phase,
            power,
            carrier_phase,
        })
    }

    /// Unit-power, zero-phase peak.
    pub fn unit(code_phase: f64) -> Self {
        Self {
            code_phase,
            power: 1.0,
            carrier_phase: 0.0,
        }
    }

    /// Peak at `relative_power_db = 10·log10(ρ_S/ρ_A)` against a unit authentic.
    pub fn from_db(code_phase: f64, relative_power_db: f64) -> Self {
        Self {
            code_phase,
            power: 10f64.powf(relative_power_db / 10.0),
            carrier_phase: 0.0,
        }
    }

    pub fn with_carrier_phase(mut self, carrier_phase: f64) -> Self {
        self.carrier_phase = carrier_phase;
        self
    }
}

/// How thermal noise reaches the taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// No noise at all.
    Noiseless,
    /// White noise per sample, correlated through the replica bank.
    #[default]
    SampleLevel,
    /// Tap noise drawn directly from the `C·Cᵀ` covariance. Same distribution
    /// as `SampleLevel`, at `O(n²)` instead of `O(n·N_c)` per snapshot.
    TapCovariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotParams {
    pub authentic: PeakSpec,
    pub spoofer: Option<PeakSpec>,
    pub cnr_dbhz: f64,
    pub config: CorrelatorConfig,
    pub seed: u64,
    pub noise: NoiseModel,
}

impl SnapshotParams {
    /// Authentic unit peak at the prompt, no spoofer, 50 dB-Hz.
    pub fn nominal(config: CorrelatorConfig, seed: u64) -> Self {
        Self {
            authentic: PeakSpec::unit(0.0),
            spoofer: None,
            cnr_dbhz: 50.0,
            config,
            seed,
            noise: NoiseModel::SampleLevel,
        }
    }
}

/// Per-component standard deviation of the noise on one tap.
pub fn tap_noise_sigma(cnr_dbhz: f64, span: f64) -> f64 {
    (1.0 / (2.0 * 10f64.powf(cnr_dbhz / 10.0) * span)).sqrt()
}

/// One channel's complex correlator outputs for one coherent integration.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSnapshot<T> {
    pub taps: Vec<Complex<T>>,
    pub config: CorrelatorConfig,
    /// Opaque channel/epoch label; must not contain commas or newlines.
    pub label: String,
}

impl<T: Scalar> CorrelatorSnapshot<T> {
    pub fn new(taps: Vec<Complex<T>>, config: CorrelatorConfig, label: impl Into<String>) -> Result<Self> {
        if taps.len() != config.taps() {
            return Err(Error::invalid(format!(
                "{} taps supplied for a {}-tap bank",
                taps.len(),
                config.taps()
            )));
        }
        Ok(Self {
            taps,
            config,
            label: label.into(),
        })
    }

    pub fn in_phase(&self) -> Vec<T> {
        self.taps.iter().map(|z| z.re).collect()
    }

    pub fn quadrature(&self) -> Vec<T> {
        self.taps.iter().map(|z| z.im).collect()
    }

    /// Multiplies every tap by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            taps: self.taps.iter().map(|z| z * factor).collect(),
            config: self.config,
            label: self.label.clone(),
        }
    }
}

/// Replica bank plus cached noise factor, reusable across many snapshots.
#[derive(Debug, Clone)]
pub struct Simulator {
    bank: ReplicaBank,
    /// Cholesky factor of `C·Cᵀ / N_c²`, row-major.
    covariance_factor: Vec<f64>,
}

impl Simulator {
    pub fn new(config: &CorrelatorConfig) -> Result<Self> {
        Self::from_bank(build_replica_bank(config)?)
    }

    pub fn from_bank(bank: ReplicaBank) -> Result<Self> {
        let n = bank.rows().len();
        let nc = bank.samples() as f64;
        let cov: Vec<f64> = bank
            .gram()
            .into_iter()
            .flatten()
            .map(|g| g as f64 / (nc * nc))
            .collect();
        let covariance_factor = cholesky(&cov, n)
            .ok_or_else(|| Error::invalid("replica bank covariance is singular"))?;
        Ok(Self {
            bank,
            covariance_factor,
        })
    }

    pub fn bank(&self) -> &ReplicaBank {
        &self.bank
    }

    pub fn config(&self) -> &CorrelatorConfig {
        self.bank.config()
    }

    pub fn simulate<T: Scalar>(&self, params: &SnapshotParams) -> Result<CorrelatorSnapshot<T>> {
        let config = self.bank.config();
        if params.config != *config {
            return Err(Error::invalid("snapshot parameters were built for a different bank"));
        }
        if !params.cnr_dbhz.is_finite() {
            return Err(Error::invalid("CNR must be finite"));
        }
        let n = config.taps();
        let nc = self.bank.samples() as f64;

        let mut taps = vec![Complex::new(0.0f64, 0.0); n];
        for peak in std::iter::once(&params.authentic).chain(params.spoofer.iter()) {
            let signal = sample_code(self.bank.code(), config.fs, config.span, -peak.code_phase)?;
            let gain = Complex::from_polar(peak.power.sqrt(), peak.carrier_phase);
            for (tap, corr) in taps.iter_mut().zip(self.bank.correlate(&signal.samples)) {
                *tap += gain * (corr as f64 / nc);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let cnr = 10f64.powf(params.cnr_dbhz / 10.0);
        match params.noise {
            NoiseModel::Noiseless => {}
            NoiseModel::SampleLevel => {
                let sigma = (config.fs / (2.0 * cnr)).sqrt();
                let samples = self.bank.samples();
                let mut noise_i = Vec::with_capacity(samples);
                let mut noise_q = Vec::with_capacity(samples);
                for _ in 0..samples {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    noise_i.push(sigma * a);
                    noise_q.push(sigma * b);
                }
                for (tap, row) in taps.iter_mut().zip(self.bank.rows()) {
                    let (mut si, mut sq) = (0.0, 0.0);
                    for ((&c, &a), &b) in row.iter().zip(&noise_i).zip(&noise_q) {
                        let c = f64::from(c);
                        si += c * a;
                        sq += c * b;
                    }
                    *tap += Complex::new(si / nc, sq / nc);
                }
            }
            NoiseModel::TapCovariance => {
                let sigma = (config.fs / (2.0 * cnr)).sqrt();
                let z: Vec<(f64, f64)> = (0..n)
                    .map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect();
                let l = &self.covariance_factor;
                for (i, tap) in taps.iter_mut().enumerate() {
                    let (mut si, mut sq) = (0.0, 0.0);
                    for (k, &(a, b)) in z.iter().enumerate().take(i + 1) {
                        si += l[i * n + k] * a;
                        sq += l[i * n + k] * b;
                    }
                    *tap += Complex::new(sigma * si, sigma * sq);
                }
            }
        }

        let taps = taps
            .into_iter()
            .map(|z| Complex::new(T::of(z.re), T::of(z.im)))
            .collect();
        CorrelatorSnapshot::new(taps, *config, format!("prn{}", config.prn))
    }
}

/// Synthesizes one snapshot against an already built replica bank.
pub fn simulate_snapshot<T: Scalar>(
    params: &SnapshotParams,
    bank: &ReplicaBank,
) -> Result<CorrelatorSnapshot<T>> {
    Simulator::from_bank(bank.clone())?.simulate(params)
}

/// Writes `n,delta_EL,d,fs,T,prn,label` then one `tap_delay,I,Q` line per tap.
pub fn save_snapshot<T: Scalar, W: Write>(snapshot: &CorrelatorSnapshot<T>, mut out: W) -> Result<()> {
    if snapshot.label.contains([',', '\n', '\r']) {
        return Err(Error::invalid("snapshot label may not contain commas or newlines"));
    }
    let c = &snapshot.config;
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        c.taps(),
        c.delta_el,
        c.spacing,
        c.fs,
        c.span,
        c.prn,
        snapshot.label
    )?;
    for (i, z) in snapshot.taps.iter().enumerate() {
        writeln!(out, "{},{},{}", c.tap_delay(i), z.re, z.im)?;
    }
    Ok(())
}

pub fn load_snapshot<T: Scalar, R: BufRead>(input: R) -> Result<CorrelatorSnapshot<T>> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::parse(1, "empty file, expected header")),
    };
    let fields: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if fields.len() != 7 {
        return Err(Error::parse(
            1,
            format!("header needs 7 fields n,delta_EL,d,fs,T,prn,label; found {}", fields.len()),
        ));
    }
    let real = |k: usize, name: &str| -> Result<f64> {
        fields[k]
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("{name} is not numeric: {:?}", fields[k])))
    };
    let n: usize = fields[0]
        .trim()
        .parse()
        .map_err(|_| Error::parse(1, format!("n is not an integer: {:?}", fields[0])))?;
    let prn: u8 = fields[5]
        .trim()
        .parse()
        .map_err(|_| Error::parse(1, format!("prn is not an integer: {:?}", fields[5])))?;
    let config = CorrelatorConfig::new(real(1, "delta_EL")?, real(2, "d")?, real(3, "fs")?, real(4, "T")?, prn)
        .map_err(|e| Error::parse(1, e.to_string()))?;
    if config.taps() != n {
        return Err(Error::parse(
            1,
            format!("header declares n={n} but delta_EL/d + 1 = {}", config.taps()),
        ));
    }

    let mut taps = Vec::with_capacity(n);
    let mut lineno = 1;
    for line in lines {
        let line = line?;
        lineno += 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if taps.len() == n {
            return Err(Error::parse(lineno, format!("more than the declared {n} tap rows")));
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::parse(lineno, format!("expected tap_delay,I,Q; found {} fields", cols.len())));
        }
        let delay: f64 = cols[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("tap delay is not numeric: {:?}", cols[0])))?;
        let expected = config.tap_delay(taps.len());
        if (delay - expected).abs() > 1e-9 {
            return Err(Error::parse(
                lineno,
                format!("tap delay {delay} does not match the bank geometry ({expected})"),
            ));
        }
        let part = |s: &str, name: &str| -> Result<T> {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::parse(lineno, format!("{name} is not numeric: {s:?}")))
        };
        taps.push(Complex::new(part(cols[1], "I")?, part(cols[2], "Q")?));
    }
    if taps.len() != n {
        return Err(Error::parse(
            lineno + 1,
            format!("header declares n={n} taps but the file has {}", taps.len()),
        ));
    }
    Ok(CorrelatorSnapshot {
        taps,
        config,
        label: fields[6].to_string(),
    })
}
