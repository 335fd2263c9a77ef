//! Sparse-recovery detection of GNSS spoofing from a bank of correlator taps.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below fix the precision for callers that do not care.

pub mod codegen;
pub mod detector;
pub mod dictionary;
pub mod error;
pub mod lasso;
mod linalg;
pub mod metrics;
pub mod scalar;
pub mod simulator;

pub use codegen::{generate_ca_code, sample_code, CaCode, SampledCode};
pub use detector::{
    classify_trial, detect_peaks, detect_peaks_with, normalize_snapshot, Analysis, Analyzer, Candidate,
    DetectionReport, DetectorRules, PeakRole, TrialOutcome, Verdict,
};
pub use dictionary::{
    build_dictionary, build_replica_bank, build_signal_grid, decimate_dictionary, dictionary_for, read_dictionary_csv,
    write_dictionary_csv, CorrelatorConfig, Dictionary, GridConfig, ReplicaBank, SignalGrid, SubDictionary,
};
pub use error::{Component, Error, Result};
pub use lasso::{
    solve_iq_lasso, solve_lasso, solve_multi_lasso, Design, LassoProblem, MultiDesign, MultiLassoOutput,
    SolverOptions, SparseSelector,
};
pub use scalar::Scalar;
pub use simulator::{
    load_snapshot, save_snapshot, simulate_snapshot, CorrelatorSnapshot, NoiseModel, PeakSpec, Simulator,
    SnapshotParams,
};

pub type Dictionary64 = Dictionary<f64>;
pub type Dictionary32 = Dictionary<f32>;
pub type SubDictionary64 = SubDictionary<f64>;
pub type SubDictionary32 = SubDictionary<f32>;
pub type Design64 = Design<f64>;
pub type Design32 = Design<f32>;
pub type MultiDesign64 = MultiDesign<f64>;
pub type MultiDesign32 = MultiDesign<f32>;
pub type SparseSelector64 = SparseSelector<f64>;
pub type SparseSelector32 = SparseSelector<f32>;
pub type CorrelatorSnapshot64 = CorrelatorSnapshot<f64>;
pub type CorrelatorSnapshot32 = CorrelatorSnapshot<f32>;
pub type Analyzer64 = Analyzer<f64>;
pub type Analyzer32 = Analyzer<f32>;
