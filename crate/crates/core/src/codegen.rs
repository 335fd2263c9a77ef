//! GPS C/A spreading codes and sampled, code-phase-shifted replicas.
//!
//! Chips are stored as `i8` in `{+1, -1}` with binary 0 mapped to +1 and
//! binary 1 mapped to -1. Every correlation downstream is an integer dot
//! product of such sequences, which keeps dictionaries bit-reproducible.

use crate::error::{Error, Result};

/// C/A code length in chips.
pub const CA_CODE_LENGTH: usize = 1023;

/// C/A chipping rate in chips per second.
pub const CHIP_RATE_HZ: f64 = 1.023e6;

/// G2 output taps (1-based register stages) selecting each PRN's phase.
const G2_PHASE_TAPS: [(usize, usize); 32] = [
    (2, 6),
    (3, 7),
    (4, 8),
    (5, 9),
    (1, 9),
    (2, 10),
    (1, 8),
    (2, 9),
    (3, 10),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (1, 4),
    (2, 5),
    (3, 6),
    (4, 7),
    (5, 8),
    (6, 9),
    (1, 3),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 6),
    (2, 7),
    (3, 8),
    (4, 9),
];

/// One satellite's 1023-chip Gold code in ±1 form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaCode {
    prn: u8,
    chips: Vec<i8>,
}

impl CaCode {
    pub fn prn(&self) -> u8 {
        self.prn
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    /// Chip at an arbitrary (possibly negative) index, taken modulo the period.
    pub fn chip(&self, index: i64) -> i8 {
        self.chips[index.rem_euclid(CA_CODE_LENGTH as i64) as usize]
    }
}

/// Generates the C/A code for `prn` (1..=32) with the G1/G2 register pair.
///
/// G1 has feedback taps 3 and 10, G2 has taps 2, 3, 6, 8, 9 and 10; both
/// start from the all-ones state. Each chip is the G1 output XOR the
/// modulo-2 sum of the two PRN-specific G2 phase taps.
pub fn generate_ca_code(prn: u8) -> Result<CaCode> {
    if !(1..=32).contains(&prn) {
        return Err(Error::invalid(format!("PRN {prn} outside 1..=32")));
    }
    let (s1, s2) = G2_PHASE_TAPS[prn as usize - 1];

    // Index 0 holds stage 1.
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut chips = Vec::with_capacity(CA_CODE_LENGTH);
    for _ in 0..CA_CODE_LENGTH {
        let bit = g1[9] ^ g2[s1 - 1] ^ g2[s2 - 1];
        chips.push(if bit == 0 { 1 } else { -1 });

        let f1 = g1[2] ^ g1[9];
        let f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.rotate_right(1);
        g2.rotate_right(1);
        g1[0] = f1;
        g2[0] = f2;
    }
    Ok(CaCode { prn, chips })
}

/// A code sampled at `fs` over a coherent span, shifted by `code_phase` chips.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCode {
    pub samples: Vec<i8>,
    pub fs: f64,
    pub span: f64,
    pub code_phase: f64,
}

impl SampledCode {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Number of samples in a coherent span, `round(fs * span)`.
pub fn samples_per_span(fs: f64, span: f64) -> Result<usize> {
    if !(fs.is_finite() && fs > CHIP_RATE_HZ) {
        return Err(Error::invalid(format!(
            "sampling frequency {fs} Hz must exceed the chip rate"
        )));
    }
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::invalid(format!("coherent span {span} s must be positive")));
    }
    Ok((fs * span).round() as usize)
}

/// Samples `code` so that sample `m` holds the chip active at
/// `m / fs * 1.023e6 - code_phase` (floor, modulo the code period).
pub fn sample_code(code: &CaCode, fs: f64, span: f64, code_phase: f64) -> Result<SampledCode> {
    let count = samples_per_span(fs, span)?;
    if !code_phase.is_finite() {
        return Err(Error::invalid("code phase must be finite"));
    }
    let phase = code_phase.rem_euclid(CA_CODE_LENGTH as f64);
    let samples = (0..count)
        .map(|m| {
            // Multiply before dividing so whole-period sample counts land on exact integers.
            let t = (m as f64 * CHIP_RATE_HZ) / fs - phase;
            code.chip(t.floor() as i64)
        })
        .collect();
    Ok(SampledCode {
        samples,
        fs,
        span,
        code_phase,
    })
}

/// Integer dot product of two ±1 sequences of equal length.
pub(crate) fn chip_dot(a: &[i8], b: &[i8]) -> i64 {
    debug_assert_eq!(a.len(), b.len());
    // i32 partial sums over blocks keep the inner loop vectorizable.
    a.chunks(1 << 16)
        .zip(b.chunks(1 << 16))
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(&u, &v)| i32::from(u) * i32::from(v))
                .sum::<i32>() as i64
        })
        .sum()
}
