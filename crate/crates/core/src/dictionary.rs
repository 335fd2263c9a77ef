//! Correlator replica bank, high-resolution signal grid and the triangle
//! dictionary obtained by correlating the two.
//!
//! Delays follow the correlator convention: tap `i` (1-based) sits at
//! `δ_i = (i-1)·d - δ_EL/2` chips and dictionary column `j` at
//! `γ_j = (j-1-⌊Fp/2⌋)·d/Fp - δ_EL/2` chips. Storage is 0-based.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::Serialize;

use crate::codegen::{chip_dot, generate_ca_code, sample_code, samples_per_span, CaCode};
use crate::error::{Error, Result};
use crate::scalar::{triangle, Scalar};

const INTEGRALITY_EPS: f64 = 1e-9;

/// Geometry of one channel's correlator bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorConfig {
    /// Early-to-late span in chips.
    pub delta_el: f64,
    /// Correlator spacing in chips.
    pub spacing: f64,
    /// Sampling frequency in Hz.
    pub fs: f64,
    /// Coherent integration span in seconds.
    pub span: f64,
    pub prn: u8,
    taps: usize,
}

impl CorrelatorConfig {
    pub fn new(delta_el: f64, spacing: f64, fs: f64, span: f64, prn: u8) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(format!("correlator spacing {spacing} must be positive")));
        }
        if !(delta_el.is_finite() && delta_el >= spacing) {
            return Err(Error::invalid(format!(
                "early-late span {delta_el} must be at least the spacing {spacing}"
            )));
        }
        let ratio = delta_el / spacing;
        if (ratio - ratio.round()).abs() > INTEGRALITY_EPS * ratio.max(1.0) {
            return Err(Error::invalid(format!(
                "early-late span {delta_el} is not a whole number of spacings {spacing}"
            )));
        }
        samples_per_span(fs, span)?;
        if !(1..=32).contains(&prn) {
            return Err(Error::invalid(format!("PRN {prn} outside 1..=32")));
        }
        Ok(Self {
            delta_el,
            spacing,
            fs,
            span,
            prn,
            taps: ratio.round() as usize + 1,
        })
    }

    /// Nominal geometry: 1.0 chip span, 0.1 chip spacing, 25 MHz, 1 ms, PRN 1.
    pub fn nominal() -> Self {
        Self::new(1.0, 0.1, 25e6, 1e-3, 1).expect("nominal geometry is valid")
    }

    /// Same geometry with a different coherent span.
    pub fn with_span(&self, span: f64) -> Result<Self> {
        Self::new(self.delta_el, self.spacing, self.fs, span, self.prn)
    }

    /// Number of correlator taps `n`.
    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn samples(&self) -> usize {
        (self.fs * self.span).round() as usize
    }

    /// Delay of 0-based tap `index` in chips.
    pub fn tap_delay(&self, index: usize) -> f64 {
        index as f64 * self.spacing - self.delta_el / 2.0
    }

    pub fn tap_delays(&self) -> Vec<f64> {
        (0..self.taps).map(|i| self.tap_delay(i)).collect()
    }

    /// Index of the tap nearest to `delay`, clamped to the bank. Exact
    /// midpoints round toward zero delay.
    pub fn nearest_tap(&self, delay: f64) -> usize {
        let offset = (delay + self.delta_el / 2.0) / self.spacing;
        let center = self.delta_el / 2.0 / self.spacing;
        let rel = offset - center;
        let frac = rel - rel.trunc();
        let rounded = if (frac.abs() - 0.5).abs() < 1e-9 {
            rel.trunc()
        } else {
            rel.round()
        };
        let idx = (rounded + center).round();
        idx.clamp(0.0, (self.taps - 1) as f64) as usize
    }

    /// Index of the tap whose delay equals `delay` within rounding, if any.
    pub fn tap_index_of(&self, delay: f64) -> Option<usize> {
        let idx = ((delay + self.delta_el / 2.0) / self.spacing).round();
        if idx < 0.0 || idx >= self.taps as f64 {
            return None;
        }
        let idx = idx as usize;
        ((self.tap_delay(idx) - delay).abs() < 1e-9).then_some(idx)
    }
}

/// High-resolution signal grid geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    /// p-factor `Fp`.
    pub fp: usize,
    /// Grid size `p = n·Fp`.
    pub p: usize,
    /// Fine spacing `d/Fp` in chips.
    pub fine_spacing: f64,
    delta_el: f64,
}

impl GridConfig {
    pub fn new(config: &CorrelatorConfig, fp: usize) -> Result<Self> {
        if fp == 0 {
            return Err(Error::invalid("p-factor must be a positive integer"));
        }
        Ok(Self {
            fp,
            p: config.taps() * fp,
            fine_spacing: config.spacing / fp as f64,
            delta_el: config.delta_el,
        })
    }

    /// Delay of 0-based column `j` in chips.
    pub fn column_delay(&self, j: usize) -> f64 {
        (j as f64 - (self.fp / 2) as f64) * self.fine_spacing - self.delta_el / 2.0
    }

    pub fn column_delays(&self) -> Vec<f64> {
        (0..self.p).map(|j| self.column_delay(j)).collect()
    }

    /// Offset of sub-dictionary `k` (1-based) from the coarse tap grid.
    pub fn sub_offset(&self, k: usize) -> f64 {
        (k as f64 - 1.0 - (self.fp / 2) as f64) * self.fine_spacing
    }
}

/// The `n × N_c` bank of shifted local replicas.
#[derive(Debug, Clone)]
pub struct ReplicaBank {
    config: CorrelatorConfig,
    code: CaCode,
    rows: Vec<Vec<i8>>,
}

impl ReplicaBank {
    pub fn config(&self) -> &CorrelatorConfig {
        &self.config
    }

    pub fn code(&self) -> &CaCode {
        &self.code
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    pub fn samples(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Integer correlations of every replica with `signal`.
    pub fn correlate(&self, signal: &[i8]) -> Vec<i64> {
        self.rows.iter().map(|r| chip_dot(r, signal)).collect()
    }

    /// Integer Gram matrix `C·Cᵀ`.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        self.rows
            .iter()
            .map(|a| self.rows.iter().map(|b| chip_dot(a, b)).collect())
            .collect()
    }
}

/// Samples one local replica per tap; row `i` is shifted to delay `δ_i`.
pub fn build_replica_bank(config: &CorrelatorConfig) -> Result<ReplicaBank> {
    let checked = CorrelatorConfig::new(
        config.delta_el,
        config.spacing,
        config.fs,
        config.span,
        config.prn,
    )?;
    let code = generate_ca_code(checked.prn)?;
    let rows = checked
        .tap_delays()
        .into_iter()
        .map(|delay| sample_code(&code, checked.fs, checked.span, -delay).map(|s| s.samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicaBank {
        config: checked,
        code,
        rows,
    })
}

/// The `N_c × p` grid of noiseless received signals, stored column-wise.
#[derive(Debug, Clone)]
pub struct SignalGrid {
    grid: GridConfig,
    columns: Vec<Vec<i8>>,
}

impl SignalGrid {
    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn columns(&self) -> &[Vec<i8>] {
        &self.columns
    }
}

pub fn build_signal_grid(config: &CorrelatorConfig, grid: &GridConfig) -> Result<SignalGrid> {
    if grid.p != config.taps() * grid.fp {
        return Err(Error::invalid(format!(
            "grid size {} does not equal n·Fp = {}·{}",
            grid.p,
            config.taps(),
            grid.fp
        )));
    }
    let code = generate_ca_code(config.prn)?;
    let columns = grid
        .column_delays()
        .into_iter()
        .map(|delay| sample_code(&code, config.fs, config.span, -delay).map(|s| s.samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(SignalGrid {
        grid: *grid,
        columns,
    })
}

/// Normalized triangle dictionary `M = C·S / N_c` with its geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    pub matrix: Array2<T>,
    pub config: CorrelatorConfig,
    pub grid: GridConfig,
}

impl<T: Scalar> Dictionary<T> {
    pub fn taps(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn columns(&self) -> usize {
        self.matrix.ncols()
    }

    /// Worst deviation from the ideal triangle `Λ(γ_j - δ_i)`.
    pub fn max_triangle_error(&self) -> T {
        let mut worst = T::zero();
        for ((i, j), &m) in self.matrix.indexed_iter() {
            let ideal = triangle(T::of(self.grid.column_delay(j) - self.config.tap_delay(i)));
            worst = worst.max((m - ideal).abs());
        }
        worst
    }
}

pub fn build_dictionary<T: Scalar>(bank: &ReplicaBank, signals: &SignalGrid) -> Result<Dictionary<T>> {
    let samples = bank.samples();
    if let Some(col) = signals.columns.iter().find(|c| c.len() != samples) {
        return Err(Error::invalid(format!(
            "replica length {samples} does not match signal length {}",
            col.len()
        )));
    }
    if signals.grid.p != bank.rows.len() * signals.grid.fp {
        return Err(Error::invalid("signal grid was not built for this replica bank"));
    }
    let scale = T::of(samples as f64).recip();
    let matrix = Array2::from_shape_fn((bank.rows.len(), signals.columns.len()), |(i, j)| {
        T::of(chip_dot(&bank.rows[i], &signals.columns[j]) as f64) * scale
    });
    Ok(Dictionary {
        matrix,
        config: bank.config,
        grid: signals.grid,
    })
}

/// Builds the sampled-code dictionary for `config` at p-factor `fp`.
pub fn dictionary_for<T: Scalar>(config: &CorrelatorConfig, fp: usize) -> Result<Dictionary<T>> {
    let grid = GridConfig::new(config, fp)?;
    let bank = build_replica_bank(config)?;
    let signals = build_signal_grid(config, &grid)?;
    build_dictionary(&bank, &signals)
}

/// Dictionary whose entries are the ideal triangle; test reference only.
pub fn ideal_dictionary<T: Scalar>(config: &CorrelatorConfig, fp: usize) -> Result<Dictionary<T>> {
    let grid = GridConfig::new(config, fp)?;
    let matrix = Array2::from_shape_fn((config.taps(), grid.p), |(i, j)| {
        triangle(T::of(grid.column_delay(j) - config.tap_delay(i)))
    });
    Ok(Dictionary {
        matrix,
        config: *config,
        grid,
    })
}

/// One de-interleaved square slice `M_K` of a fat dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDictionary<T> {
    /// 1-based sub-dictionary index.
    pub k: usize,
    pub matrix: Array2<T>,
    /// Fine delay of each column.
    pub column_delays: Vec<f64>,
}

/// Splits `M` into `Fp` matrices; `M_K` takes columns `K, K+Fp, K+2Fp, …`.
pub fn decimate_dictionary<T: Scalar>(dict: &Dictionary<T>) -> Result<Vec<SubDictionary<T>>> {
    let n = dict.taps();
    let p = dict.columns();
    if n == 0 || !p.is_multiple_of(n) {
        return Err(Error::invalid(format!("{p} columns are not a multiple of {n} taps")));
    }
    let fp = p / n;
    if fp != dict.grid.fp {
        return Err(Error::invalid(format!(
            "column count implies Fp = {fp}, grid says {}",
            dict.grid.fp
        )));
    }
    Ok((1..=fp)
        .map(|k| {
            let cols: Vec<usize> = (k - 1..p).step_by(fp).collect();
            let matrix = Array2::from_shape_fn((n, cols.len()), |(i, c)| dict.matrix[(i, cols[c])]);
            SubDictionary {
                k,
                matrix,
                column_delays: cols.iter().map(|&j| dict.grid.column_delay(j)).collect(),
            }
        })
        .collect())
}

/// Inverse of [`decimate_dictionary`].
pub fn interleave<T: Scalar>(subs: &[SubDictionary<T>]) -> Result<Array2<T>> {
    let fp = subs.len();
    let first = subs
        .first()
        .ok_or_else(|| Error::invalid("no sub-dictionaries to interleave"))?;
    let shape = first.matrix.dim();
    if subs.iter().any(|s| s.matrix.dim() != shape) {
        return Err(Error::invalid("sub-dictionaries differ in shape"));
    }
    let (n, w) = shape;
    Ok(Array2::from_shape_fn((n, w * fp), |(i, j)| subs[j % fp].matrix[(i, j / fp)]))
}

/// Writes the dictionary as CSV: one header line of geometry values
/// `n,p,Fp,delta_EL,d,fs,T,prn`, then `n` rows of `p` entries.
pub fn write_dictionary_csv<T: Scalar, W: Write>(dict: &Dictionary<T>, mut out: W) -> Result<()> {
    let c = &dict.config;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        dict.taps(),
        dict.columns(),
        dict.grid.fp,
        c.delta_el,
        c.spacing,
        c.fs,
        c.span,
        c.prn
    )?;
    let mut line = String::new();
    for row in dict.matrix.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{v}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_dictionary_csv<T: Scalar, R: BufRead>(input: R) -> Result<Dictionary<T>> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))?;
    let header = header?;
    let fields: Vec<&str> = header.trim().split(',').collect();
    if fields.len() != 8 {
        return Err(Error::parse(1, format!("expected 8 header fields, found {}", fields.len())));
    }
    let num = |k: usize| -> Result<f64> {
        fields[k]
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(1, format!("field {} is not numeric: {:?}", k + 1, fields[k])))
    };
    let int = |k: usize| -> Result<usize> {
        fields[k]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(1, format!("field {} is not an integer: {:?}", k + 1, fields[k])))
    };
    let (n, p, fp) = (int(0)?, int(1)?, int(2)?);
    let prn = u8::try_from(int(7)?).map_err(|_| Error::parse(1, "PRN out of range"))?;
    let config = CorrelatorConfig::new(num(3)?, num(4)?, num(5)?, num(6)?, prn)
        .map_err(|e| Error::parse(1, e.to_string()))?;
    let grid = GridConfig::new(&config, fp).map_err(|e| Error::parse(1, e.to_string()))?;
    if config.taps() != n || grid.p != p {
        return Err(Error::parse(1, format!("declared size {n}×{p} disagrees with geometry")));
    }
    let mut data = Vec::with_capacity(n * p);
    let mut rows = 0;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if rows == n {
            return Err(Error::parse(lineno, format!("more than {n} rows")));
        }
        let before = data.len();
        for tok in line.trim().split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric entry {tok:?}")))?;
            data.push(T::of(v));
        }
        if data.len() - before != p {
            return Err(Error::parse(
                lineno,
                format!("expected {p} entries, found {}", data.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(rows + 2, format!("expected {n} rows, found {rows}")));
    }
    let matrix = Array2::from_shape_vec((n, p), data).expect("shape checked above");
    Ok(Dictionary { matrix, config, grid })
}
