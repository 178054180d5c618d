//! Signal ingestion and report emission.
//!
//! Three on-disk signal formats are supported: one amplitude per line
//! (`csv-1col`), `time_s,amplitude` pairs (`csv-2col`, sample rate inferred
//! from the median time step), and packed little-endian 64-bit floats
//! (`raw-f64le`). Reports are emitted as JSON with sorted keys and
//! round-trip-exact float formatting, so identical inputs always produce
//! byte-identical files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::DiagnosisReport;
use crate::detector::PeakSet;
use crate::error::{Error, Result};

/// A uniformly sampled amplitude sequence in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub label: Option<String>,
}

impl Signal {
    /// Build a signal, validating that the sampling rate is positive and finite.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::value(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        Ok(Signal {
            samples,
            sample_rate_hz,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sampling period in seconds.
    pub fn period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Carry rate and label over to a derived sample vector.
    pub(crate) fn derived(&self, samples: Vec<f64>, label: &str) -> Signal {
        Signal {
            samples,
            sample_rate_hz: self.sample_rate_hz,
            label: Some(label.to_string()),
        }
    }
}

/// On-disk signal encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv1Col,
    Csv2Col,
    RawF64Le,
}

impl SignalFormat {
    pub fn name(&self) -> &'static str {
        match self {
            SignalFormat::Csv1Col => "csv-1col",
            SignalFormat::Csv2Col => "csv-2col",
            SignalFormat::RawF64Le => "raw-f64le",
        }
    }
}

impl fmt::Display for SignalFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv-1col" => Ok(SignalFormat::Csv1Col),
            "csv-2col" => Ok(SignalFormat::Csv2Col),
            "raw-f64le" => Ok(SignalFormat::RawF64Le),
            other => Err(Error::value(format!(
                "unknown signal format {other:?} (expected csv-1col, csv-2col or raw-f64le)"
            ))),
        }
    }
}

/// Read a signal from `path`.
///
/// For `csv-2col` the sample rate is inferred from the median time step and
/// `sample_rate_hz` is ignored; the time column must be strictly increasing.
/// Every row of the file becomes a sample or the load fails, nothing is
/// dropped silently.
pub fn load_signal(path: &Path, format: SignalFormat, sample_rate_hz: f64) -> Result<Signal> {
    match format {
        SignalFormat::Csv1Col => {
            let text = read_text(path)?;
            let samples = parse_csv_1col(path, &text)?;
            Ok(Signal::new(samples, sample_rate_hz)?.with_label(file_label(path)))
        }
        SignalFormat::Csv2Col => {
            let text = read_text(path)?;
            let (samples, rate) = parse_csv_2col(path, &text)?;
            Ok(Signal::new(samples, rate)?.with_label(file_label(path)))
        }
        SignalFormat::RawF64Le => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            if bytes.is_empty() {
                return Err(Error::value(format!("{}: empty file", path.display())));
            }
            if bytes.len() % 8 != 0 {
                return Err(Error::value(format!(
                    "{}: length {} is not a multiple of 8 bytes",
                    path.display(),
                    bytes.len()
                )));
            }
            let samples = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(Signal::new(samples, sample_rate_hz)?.with_label(file_label(path)))
        }
    }
}

/// Write a signal to `path` in the given format.
///
/// Amplitudes are written with shortest round-trip decimal formatting, so a
/// `csv-1col` save followed by a load reproduces the samples bit for bit.
pub fn save_signal(signal: &Signal, path: &Path, format: SignalFormat) -> Result<()> {
    let bytes = match format {
        SignalFormat::Csv1Col => {
            let mut out = String::new();
            for x in &signal.samples {
                out.push_str(&format_f64(*x));
                out.push('\n');
            }
            out.into_bytes()
        }
        SignalFormat::Csv2Col => {
            let mut out = String::new();
            for (i, x) in signal.samples.iter().enumerate() {
                out.push_str(&format_f64(i as f64 / signal.sample_rate_hz));
                out.push(',');
                out.push_str(&format_f64(*x));
                out.push('\n');
            }
            out.into_bytes()
        }
        SignalFormat::RawF64Le => {
            let mut out = Vec::with_capacity(signal.samples.len() * 8);
            for x in &signal.samples {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out
        }
    };
    write_atomic(path, &bytes)
}

/// Write a bare coefficient or trace array as csv-1col.
pub fn save_series(values: &[f64], path: &Path) -> Result<()> {
    let mut out = String::new();
    for x in values {
        out.push_str(&format_f64(*x));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Write `bytes` to `path` via a temporary file in the same directory plus a
/// rename, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::value(format!("{}: not a file path", path.display())))?;
    let mut tmp = file_name.to_os_string();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp_path = match dir {
        Some(d) => d.join(&tmp),
        None => Path::new(&tmp).to_path_buf(),
    };
    fs::write(&tmp_path, bytes).map_err(|e| Error::io(&tmp_path, e))?;
    fs::rename(&tmp_path, path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn parse_csv_1col(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let value: f64 = line.trim().parse().map_err(|_| {
            Error::parse(path, i + 1, format!("expected a number, got {:?}", line.trim()))
        })?;
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(Error::value(format!("{}: empty file", path.display())));
    }
    Ok(samples)
}

fn parse_csv_2col(path: &Path, text: &str) -> Result<(Vec<f64>, f64)> {
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split(',');
        let (t_str, x_str) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(x), None) => (t, x),
            _ => {
                return Err(Error::parse(
                    path,
                    line_no,
                    "expected exactly two comma-separated fields",
                ))
            }
        };
        let t: f64 = t_str.trim().parse().map_err(|_| {
            Error::parse(path, line_no, format!("bad time value {:?}", t_str.trim()))
        })?;
        let x: f64 = x_str.trim().parse().map_err(|_| {
            Error::parse(path, line_no, format!("bad amplitude {:?}", x_str.trim()))
        })?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("time column must be strictly increasing ({t} after {prev})"),
                ));
            }
        }
        times.push(t);
        samples.push(x);
    }
    if samples.is_empty() {
        return Err(Error::value(format!("{}: empty file", path.display())));
    }
    if samples.len() < 2 {
        return Err(Error::value(format!(
            "{}: need at least two rows to infer the sample rate",
            path.display()
        )));
    }
    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if steps.len() % 2 == 1 {
        steps[steps.len() / 2]
    } else {
        0.5 * (steps[steps.len() / 2 - 1] + steps[steps.len() / 2])
    };
    Ok((samples, 1.0 / median))
}

/// Shortest decimal representation that parses back to the same f64.
fn format_f64(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// Report document
// ---------------------------------------------------------------------------
// Field declaration order below is alphabetical on the serialized key so the
// emitted JSON has sorted keys at every level.

/// The full analysis report as written to disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDoc {
    pub amplitudes: AmplitudeSection,
    pub flags: Vec<FlagEntry>,
    pub intervals: IntervalSection,
    pub peaks: Vec<PeakEntry>,
    pub signal: SignalSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSection {
    pub label: Option<String>,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakEntry {
    pub amplitude_mv: f64,
    pub index: usize,
    pub label: String,
    pub time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct IntervalSection {
    pub PP_s: Vec<f64>,
    pub PR_s: Vec<f64>,
    pub QRS_s: Vec<f64>,
    pub QT_s: Vec<f64>,
    pub RR_s: Vec<f64>,
    pub ST_s: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct AmplitudeSection {
    pub P_mv: Option<f64>,
    pub Q_mv: Option<f64>,
    pub R_mv: Option<f64>,
    pub S_mv: Option<f64>,
    pub T_mv: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagEntry {
    pub bound: f64,
    pub finding: String,
    pub measured: f64,
    pub rule: String,
}

impl ReportDoc {
    /// Assemble the report document from the detection and analysis results.
    pub fn new(signal: &Signal, peaks: &PeakSet, diagnosis: &DiagnosisReport) -> ReportDoc {
        let rate = peaks.sample_rate_hz;
        ReportDoc {
            amplitudes: AmplitudeSection {
                P_mv: diagnosis.amplitudes.p_mv,
                Q_mv: diagnosis.amplitudes.q_mv,
                R_mv: diagnosis.amplitudes.r_mv,
                S_mv: diagnosis.amplitudes.s_mv,
                T_mv: diagnosis.amplitudes.t_mv,
            },
            flags: diagnosis
                .flags
                .iter()
                .map(|f| FlagEntry {
                    bound: f.bound,
                    finding: f.finding.clone(),
                    measured: f.measured,
                    rule: f.rule.clone(),
                })
                .collect(),
            intervals: IntervalSection {
                PP_s: diagnosis.intervals.pp_s.clone(),
                PR_s: diagnosis.intervals.pr_s.clone(),
                QRS_s: diagnosis.intervals.qrs_s.clone(),
                QT_s: diagnosis.intervals.qt_s.clone(),
                RR_s: diagnosis.intervals.rr_s.clone(),
                ST_s: diagnosis.intervals.st_s.clone(),
            },
            peaks: peaks
                .peaks
                .iter()
                .map(|p| PeakEntry {
                    amplitude_mv: p.amplitude_mv,
                    index: p.index,
                    label: p.label.to_string(),
                    time_s: p.index as f64 / rate,
                })
                .collect(),
            signal: SignalSection {
                label: signal.label.clone(),
                n_samples: signal.len(),
                sample_rate_hz: signal.sample_rate_hz,
            },
        }
    }

    /// Serialize with stable formatting (sorted keys, round-trip floats).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Write the report JSON to `path`.
pub fn write_report(report: &ReportDoc, path: &Path) -> Result<()> {
    write_atomic(path, report.to_json().as_bytes())
}

/// The detect-only output document: labeled peaks plus signal metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeaksDoc {
    pub n_samples: usize,
    pub peaks: Vec<PeakEntry>,
    pub sample_rate_hz: f64,
}

impl PeaksDoc {
    pub fn new(signal: &Signal, peaks: &PeakSet) -> PeaksDoc {
        let rate = peaks.sample_rate_hz;
        PeaksDoc {
            n_samples: signal.len(),
            peaks: peaks
                .peaks
                .iter()
                .map(|p| PeakEntry {
                    amplitude_mv: p.amplitude_mv,
                    index: p.index,
                    label: p.label.to_string(),
                    time_s: p.index as f64 / rate,
                })
                .collect(),
            sample_rate_hz: rate,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("peaks serialization");
        s.push('\n');
        s
    }
}
