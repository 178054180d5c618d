//! Interval measurement, amplitude measurement and rule-based screening.
//!
//! Intervals come from consecutive same-label peaks (RR, PP) and within-beat
//! spans (PR, QRS, QT, ST). Screening compares the per-record mean of each
//! measure against a rule table of normal ranges; rows transcribing a single
//! nominal value are widened by ten percent before flagging, and rows without
//! finding text on the violated side never flag.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::{PeakLabel, PeakSet};
use crate::error::{Error, Result};
use crate::signal_io::Signal;

/// Per-beat interval arrays in seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    pub pr_s: Vec<f64>,
    pub qrs_s: Vec<f64>,
    pub qt_s: Vec<f64>,
    pub st_s: Vec<f64>,
    pub pp_s: Vec<f64>,
    pub rr_s: Vec<f64>,
}

/// Mean baseline-corrected amplitude per label, in millivolts. `None` when
/// the label was never found.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Amplitudes {
    pub p_mv: Option<f64>,
    pub q_mv: Option<f64>,
    pub r_mv: Option<f64>,
    pub s_mv: Option<f64>,
    pub t_mv: Option<f64>,
}

/// What a rule row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "PR")]
    PrInterval,
    #[serde(rename = "QRS")]
    QrsInterval,
    #[serde(rename = "QT")]
    QtInterval,
    #[serde(rename = "ST")]
    StInterval,
    #[serde(rename = "PP")]
    PpInterval,
    #[serde(rename = "RR")]
    RrInterval,
    #[serde(rename = "P")]
    PAmplitude,
    /// |Q| relative to the R amplitude, dimensionless.
    #[serde(rename = "Q_over_R")]
    QOverR,
    #[serde(rename = "R")]
    RAmplitude,
    #[serde(rename = "T")]
    TAmplitude,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::PrInterval => "PR",
            Measure::QrsInterval => "QRS",
            Measure::QtInterval => "QT",
            Measure::StInterval => "ST",
            Measure::PpInterval => "PP",
            Measure::RrInterval => "RR",
            Measure::PAmplitude => "P",
            Measure::QOverR => "Q_over_R",
            Measure::RAmplitude => "R",
            Measure::TAmplitude => "T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "s")]
    Seconds,
    #[serde(rename = "mV")]
    Millivolts,
    #[serde(rename = "ratio")]
    Ratio,
}

/// One normal-range row: values outside [low, high] raise the finding for
/// the violated side, when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    pub measure: Measure,
    pub low: f64,
    pub high: f64,
    pub below_finding: Option<String>,
    pub above_finding: Option<String>,
    pub units: Units,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub rows: Vec<RuleRow>,
}

impl RuleTable {
    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            if !(row.low.is_finite() && row.high.is_finite() && row.low <= row.high) {
                return Err(Error::value(format!(
                    "rule {}: low {} must not exceed high {}",
                    row.measure.name(),
                    row.low,
                    row.high
                )));
            }
        }
        Ok(())
    }
}

/// A violated rule: the measured value, the bound it crossed, and the
/// finding text.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    pub rule: String,
    pub measured: f64,
    pub bound: f64,
    pub finding: String,
}

/// Measured intervals and amplitudes plus the triggered rule flags.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisReport {
    pub intervals: IntervalSet,
    pub amplitudes: Amplitudes,
    pub flags: Vec<Flag>,
}

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone, Copy)]
struct Beat {
    p: Option<usize>,
    q: Option<usize>,
    r: Option<usize>,
    s: Option<usize>,
    t: Option<usize>,
}

/// Group a flat peak list into beats: P and Q attach to the next R, S and T
/// to the previous one.
fn group_beats(peaks: &PeakSet) -> Vec<Beat> {
    let mut beats: Vec<Beat> = Vec::new();
    let mut pending = Beat::default();
    for peak in &peaks.peaks {
        match peak.label {
            PeakLabel::P => pending.p = Some(peak.index),
            PeakLabel::Q => pending.q = Some(peak.index),
            PeakLabel::R => {
                pending.r = Some(peak.index);
                beats.push(pending);
                pending = Beat::default();
            }
            PeakLabel::S => {
                if let Some(beat) = beats.last_mut() {
                    beat.s = Some(peak.index);
                }
            }
            PeakLabel::T => {
                if let Some(beat) = beats.last_mut() {
                    beat.t = Some(peak.index);
                }
            }
        }
    }
    beats
}

/// Compute the per-beat interval arrays from a labeled peak set.
///
/// RR and PP pair consecutive same-label peaks; PR, QRS, QT and ST span
/// labels within one beat and skip beats missing a required label. Fewer
/// than two R peaks simply yields an empty RR array.
pub fn measure_intervals(peaks: &PeakSet) -> IntervalSet {
    let rate = peaks.sample_rate_hz;
    let span = |a: usize, b: usize| (b - a) as f64 / rate;
    let beats = group_beats(peaks);
    let mut set = IntervalSet::default();

    let r_indices: Vec<usize> = beats.iter().filter_map(|b| b.r).collect();
    set.rr_s = r_indices.windows(2).map(|w| span(w[0], w[1])).collect();
    let p_indices: Vec<usize> = beats.iter().filter_map(|b| b.p).collect();
    set.pp_s = p_indices.windows(2).map(|w| span(w[0], w[1])).collect();

    for beat in &beats {
        if let (Some(p), Some(r)) = (beat.p, beat.r) {
            set.pr_s.push(span(p, r));
        }
        if let (Some(q), Some(s)) = (beat.q, beat.s) {
            set.qrs_s.push(span(q, s));
        }
        if let (Some(q), Some(t)) = (beat.q, beat.t) {
            set.qt_s.push(span(q, t));
        }
        if let (Some(s), Some(t)) = (beat.s, beat.t) {
            set.st_s.push(span(s, t));
        }
    }
    set
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Mean amplitude per label, read from the original signal at each peak
/// index and corrected by subtracting the signal median as the isoelectric
/// baseline.
pub fn measure_amplitudes(signal: &Signal, peaks: &PeakSet) -> Amplitudes {
    if signal.is_empty() {
        return Amplitudes::default();
    }
    let baseline = median(&signal.samples);
    let mut sums: BTreeMap<PeakLabel, (f64, usize)> = BTreeMap::new();
    for peak in &peaks.peaks {
        if peak.index < signal.len() {
            let entry = sums.entry(peak.label).or_insert((0.0, 0));
            entry.0 += signal.samples[peak.index] - baseline;
            entry.1 += 1;
        }
    }
    let get = |label: PeakLabel| sums.get(&label).map(|(s, n)| s / *n as f64);
    Amplitudes {
        p_mv: get(PeakLabel::P),
        q_mv: get(PeakLabel::Q),
        r_mv: get(PeakLabel::R),
        s_mv: get(PeakLabel::S),
        t_mv: get(PeakLabel::T),
    }
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

fn row(
    measure: Measure,
    low: f64,
    high: f64,
    below: Option<&str>,
    above: Option<&str>,
    units: Units,
) -> RuleRow {
    RuleRow {
        measure,
        low,
        high,
        below_finding: below.map(str::to_string),
        above_finding: above.map(str::to_string),
        units,
    }
}

/// The built-in normal-sinus-rhythm rule table.
///
/// Rows with equal low and high transcribe a single nominal value; the
/// screening step widens those by ten percent before flagging. The Q row is
/// relative: it bounds |Q| at a quarter of the R amplitude and carries no
/// finding text, so it reports but never flags.
pub fn builtin_rules() -> RuleTable {
    use Measure::*;
    use Units::*;
    RuleTable {
        rows: vec![
            row(
                PrInterval,
                0.12,
                0.2,
                Some("Reduced FMD"),
                Some("Blockage of AV node; atherosclerotic disease"),
                Seconds,
            ),
            row(QrsInterval, 0.09, 0.09, Some("Hyperkalemia"), None, Seconds),
            row(QtInterval, 0.35, 0.44, None, None, Seconds),
            row(StInterval, 0.05, 0.15, None, None, Seconds),
            row(PpInterval, 0.11, 0.11, None, None, Seconds),
            row(
                RrInterval,
                0.80,
                0.85,
                Some("Tachycardia (Fast heart)"),
                Some("Bradycardia (Slow heart)"),
                Seconds,
            ),
            row(
                PAmplitude,
                0.25,
                0.25,
                Some("Dextrocardia (inverted P wave)"),
                None,
                Millivolts,
            ),
            row(QOverR, 0.0, 0.25, None, None, Ratio),
            row(RAmplitude, 1.60, 1.60, None, None, Millivolts),
            row(
                TAmplitude,
                0.1,
                0.5,
                Some("Myocardial ischemia (inverted T wave)"),
                Some("Hyperkalemia (Tall T wave & absence of P wave)"),
                Millivolts,
            ),
        ],
    }
}

/// Load a rule table from JSON with the same row schema as `builtin_rules`.
pub fn load_rules(path: &Path) -> Result<RuleTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: RuleTable = serde_json::from_str(&text)
        .map_err(|e| Error::value(format!("{}: {e}", path.display())))?;
    table.validate()?;
    Ok(table)
}

/// Effective bounds for flagging: single-value rows widen by ten percent.
fn effective_bounds(row: &RuleRow) -> (f64, f64) {
    if row.low == row.high {
        (0.9 * row.low, 1.1 * row.high)
    } else {
        (row.low, row.high)
    }
}

fn measured_value(
    measure: Measure,
    intervals: &IntervalSet,
    amplitudes: &Amplitudes,
) -> Option<f64> {
    match measure {
        Measure::PrInterval => mean(&intervals.pr_s),
        Measure::QrsInterval => mean(&intervals.qrs_s),
        Measure::QtInterval => mean(&intervals.qt_s),
        Measure::StInterval => mean(&intervals.st_s),
        Measure::PpInterval => mean(&intervals.pp_s),
        Measure::RrInterval => mean(&intervals.rr_s),
        Measure::PAmplitude => amplitudes.p_mv,
        Measure::QOverR => match (amplitudes.q_mv, amplitudes.r_mv) {
            (Some(q), Some(r)) if r.abs() > f64::EPSILON => Some(q.abs() / r.abs()),
            _ => None,
        },
        Measure::RAmplitude => amplitudes.r_mv,
        Measure::TAmplitude => amplitudes.t_mv,
    }
}

fn check_row(row: &RuleRow, measured: f64, flags: &mut Vec<Flag>) {
    let (low, high) = effective_bounds(row);
    if measured < low {
        if let Some(finding) = &row.below_finding {
            flags.push(Flag {
                rule: row.measure.name().to_string(),
                measured,
                bound: low,
                finding: finding.clone(),
            });
        }
    } else if measured > high {
        if let Some(finding) = &row.above_finding {
            flags.push(Flag {
                rule: row.measure.name().to_string(),
                measured,
                bound: high,
                finding: finding.clone(),
            });
        }
    }
}

/// Compare the per-record mean of every measure against the rule table and
/// collect the triggered flags. Also applies the dropped-beat heuristic:
/// any single RR longer than 1.8 times the median RR is flagged.
pub fn diagnose(
    intervals: &IntervalSet,
    amplitudes: &Amplitudes,
    rules: &RuleTable,
) -> DiagnosisReport {
    let mut flags = Vec::new();
    for row in &rules.rows {
        if let Some(measured) = measured_value(row.measure, intervals, amplitudes) {
            check_row(row, measured, &mut flags);
        }
    }

    if intervals.rr_s.len() >= 3 {
        let med = median(&intervals.rr_s);
        let longest = intervals.rr_s.iter().cloned().fold(f64::MIN, f64::max);
        let bound = 1.8 * med;
        if longest > bound {
            flags.push(Flag {
                rule: "RR_dropout".to_string(),
                measured: longest,
                bound,
                finding: "Possible sinoatrial block: dropped cardiac cycle (heuristic)"
                    .to_string(),
            });
        }
    }

    DiagnosisReport {
        intervals: intervals.clone(),
        amplitudes: amplitudes.clone(),
        flags,
    }
}

/// Per-beat variant of the screening for inspection: every individual
/// interval value is checked instead of the record mean. Flag rules carry a
/// `[beat k]` suffix.
pub fn diagnose_per_beat(intervals: &IntervalSet, rules: &RuleTable) -> Vec<Flag> {
    let mut flags = Vec::new();
    for rule_row in &rules.rows {
        let values: &[f64] = match rule_row.measure {
            Measure::PrInterval => &intervals.pr_s,
            Measure::QrsInterval => &intervals.qrs_s,
            Measure::QtInterval => &intervals.qt_s,
            Measure::StInterval => &intervals.st_s,
            Measure::PpInterval => &intervals.pp_s,
            Measure::RrInterval => &intervals.rr_s,
            _ => continue,
        };
        for (k, &value) in values.iter().enumerate() {
            let mut beat_flags = Vec::new();
            check_row(rule_row, value, &mut beat_flags);
            for mut flag in beat_flags {
                flag.rule = format!("{} [beat {k}]", flag.rule);
                flags.push(flag);
            }
        }
    }
    flags
}
