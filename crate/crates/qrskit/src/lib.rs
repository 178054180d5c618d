//! ECG P-QRS-T peak detection built on a Daubechies wavelet decomposition.
//!
//! The pipeline decomposes a single-lead ECG into eight detail sub-bands,
//! fuses the QRS-dominant mid scales, sharpens them with a five-point
//! derivative, squares, integrates over a moving window and thresholds at
//! max times mean to find beat windows; labeled peaks are then read off the
//! original signal and screened against normal-sinus-rhythm ranges.
//!
//! See the `cli` module (or the `qrskit` binary) for the command-line
//! surface; everything it does is available as library calls.

pub mod analysis;
pub mod cli;
pub mod detector;
pub mod error;
pub mod plot;
pub mod signal_io;
pub mod synth;
pub mod wavelet;

pub use analysis::{
    builtin_rules, diagnose, measure_amplitudes, measure_intervals, Amplitudes, DiagnosisReport,
    Flag, IntervalSet, RuleTable,
};
pub use detector::{detect, DetectionTrace, DetectorConfig, Peak, PeakLabel, PeakSet};
pub use error::{Error, Result};
pub use signal_io::{load_signal, save_signal, write_report, Signal, SignalFormat};
pub use synth::{generate, GroundTruth, SynthConfig};
pub use wavelet::{
    daubechies_filter, dwt_decompose, reconstruct_approximation, reconstruct_detail,
    reconstruct_signal, BoundaryMode, Decomposition, WaveletFilter,
};
