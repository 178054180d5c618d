//! P-QRS-T detection pipeline.
//!
//! The chain: decompose with a Daubechies wavelet, fuse the mid-scale detail
//! bands (sum for inspection, damped product as the working signal), apply a
//! five-point derivative, square point-wise, integrate over a trailing moving
//! window, threshold the max-normalized result at its mean, extract
//! above-threshold windows, and read the labeled peaks off the original
//! signal inside each window.

use crate::error::{Error, Result};
use crate::signal_io::Signal;
use crate::wavelet::{
    daubechies_filter, dwt_decompose, reconstruct_detail, BoundaryMode, Decomposition,
};

/// Peak labels in beat order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeakLabel {
    P,
    Q,
    R,
    S,
    T,
}

impl PeakLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PeakLabel::P => "P",
            PeakLabel::Q => "Q",
            PeakLabel::R => "R",
            PeakLabel::S => "S",
            PeakLabel::T => "T",
        }
    }
}

impl std::fmt::Display for PeakLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled peak annotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub label: PeakLabel,
    pub index: usize,
    pub amplitude_mv: f64,
}

/// All labeled peaks of a record, ordered by sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub sample_rate_hz: f64,
}

impl PeakSet {
    pub fn of_label(&self, label: PeakLabel) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(move |p| p.label == label)
    }

    pub fn indices_of(&self, label: PeakLabel) -> Vec<usize> {
        self.of_label(label).map(|p| p.index).collect()
    }
}

/// Search offsets (in milliseconds, relative to R) for the satellite peaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindows {
    /// Q is the minimum in [R - q_ms, R).
    pub q_ms: f64,
    /// S is the minimum in (R, R + s_ms].
    pub s_ms: f64,
    /// P is the maximum in [R - p_from_ms, R - p_to_ms).
    pub p_from_ms: f64,
    pub p_to_ms: f64,
    /// T is the maximum in (R + t_from_ms, R + t_to_ms].
    pub t_from_ms: f64,
    pub t_to_ms: f64,
}

impl Default for SearchWindows {
    fn default() -> Self {
        SearchWindows {
            q_ms: 50.0,
            s_ms: 50.0,
            p_from_ms: 200.0,
            p_to_ms: 50.0,
            t_from_ms: 100.0,
            t_to_ms: 400.0,
        }
    }
}

/// Which fused detail signal feeds the derivative stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetailFusion {
    /// Damped product of the mid band with the sum of its neighbors.
    #[default]
    Product,
    /// Plain sum of the fused detail bands.
    Sum,
}

/// Tunable parameters of the detection pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub wavelet_order: usize,
    pub levels: usize,
    pub fused_levels: Vec<usize>,
    pub window_ms: f64,
    pub refractory_ms: f64,
    pub search_windows_ms: SearchWindows,
    pub boundary_mode: BoundaryMode,
    pub derivative_source: DetailFusion,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            wavelet_order: 6,
            levels: 8,
            fused_levels: vec![3, 4, 5],
            window_ms: 150.0,
            refractory_ms: 200.0,
            search_windows_ms: SearchWindows::default(),
            boundary_mode: BoundaryMode::Periodic,
            derivative_source: DetailFusion::Product,
        }
    }
}

impl DetectorConfig {
    /// Moving-window width in samples, at least 1.
    pub fn window_samples(&self, sample_rate_hz: f64) -> usize {
        ((self.window_ms * sample_rate_hz / 1000.0).round() as usize).max(1)
    }

    /// Refractory separation in samples, at least 1.
    pub fn refractory_samples(&self, sample_rate_hz: f64) -> usize {
        ((self.refractory_ms * sample_rate_hz / 1000.0).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::value("levels must be >= 1"));
        }
        if self.fused_levels.is_empty() {
            return Err(Error::value("fused_levels must not be empty"));
        }
        if let Some(&bad) = self
            .fused_levels
            .iter()
            .find(|&&l| l < 1 || l > self.levels)
        {
            return Err(Error::value(format!(
                "fused level {bad} outside 1..={}",
                self.levels
            )));
        }
        if self.derivative_source == DetailFusion::Product && self.fused_levels.len() != 3 {
            return Err(Error::value(
                "product fusion needs exactly three detail levels",
            ));
        }
        if !self.window_ms.is_finite() || self.window_ms <= 0.0 {
            return Err(Error::value("window_ms must be positive"));
        }
        if !self.refractory_ms.is_finite() || self.refractory_ms <= 0.0 {
            return Err(Error::value("refractory_ms must be positive"));
        }
        let w = &self.search_windows_ms;
        if !(w.q_ms > 0.0 && w.s_ms > 0.0) {
            return Err(Error::value("Q/S search offsets must be positive"));
        }
        if !(w.p_from_ms > w.p_to_ms && w.p_to_ms >= 0.0) {
            return Err(Error::value("P search range must satisfy from > to >= 0"));
        }
        if !(w.t_to_ms > w.t_from_ms && w.t_from_ms >= 0.0) {
            return Err(Error::value("T search range must satisfy to > from >= 0"));
        }
        Ok(())
    }
}

/// Every intermediate signal of one detection run, for inspection and plots.
#[derive(Debug, Clone)]
pub struct DetectionTrace {
    /// Sum of the fused detail bands at original length.
    pub detail_sum: Signal,
    /// Damped product fusion at original length.
    pub detail_product: Signal,
    pub derivative: Signal,
    pub squared: Signal,
    pub integrated: Signal,
    pub normalized: Signal,
    pub threshold: f64,
    /// Inclusive (start, end) index pairs of above-threshold windows.
    pub windows: Vec<(usize, usize)>,
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

/// Sample-wise sum of the chosen detail bands reconstructed to the original
/// sampling grid.
pub fn fuse_detail_sum(decomposition: &Decomposition, levels: &[usize]) -> Result<Signal> {
    let mut acc = vec![0.0; decomposition.original_length()];
    for &level in levels {
        let det = reconstruct_detail(decomposition, level)?;
        for (a, x) in acc.iter_mut().zip(&det.samples) {
            *a += x;
        }
    }
    Ok(Signal {
        samples: acc,
        sample_rate_hz: decomposition.sample_rate_hz(),
        label: Some("detail sum".to_string()),
    })
}

/// Sample-wise mid * (low + high) / 2^levels over the reconstructed detail
/// bands; damps oscillation relative to the plain sum.
pub fn fuse_detail_product(decomposition: &Decomposition, levels: &[usize]) -> Result<Signal> {
    if levels.len() != 3 {
        return Err(Error::value(format!(
            "product fusion needs exactly three detail levels, got {}",
            levels.len()
        )));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    let low = reconstruct_detail(decomposition, sorted[0])?;
    let mid = reconstruct_detail(decomposition, sorted[1])?;
    let high = reconstruct_detail(decomposition, sorted[2])?;
    let damping = (2.0_f64).powi(decomposition.levels() as i32);
    let samples = mid
        .samples
        .iter()
        .zip(low.samples.iter().zip(&high.samples))
        .map(|(&m, (&l, &h))| m * (l + h) / damping)
        .collect();
    Ok(Signal {
        samples,
        sample_rate_hz: decomposition.sample_rate_hz(),
        label: Some("detail product".to_string()),
    })
}

/// Five-point derivative y[k] = (T/8)(-x[k-2] - 2x[k-1] + 2x[k+1] + x[k+2])
/// with zero extension at the edges; T is the sampling period.
pub fn derivative_filter(signal: &Signal) -> Result<Signal> {
    let n = signal.len();
    if n < 5 {
        return Err(Error::value(format!(
            "derivative filter needs at least 5 samples, got {n}"
        )));
    }
    let t = signal.period_s();
    let x = &signal.samples;
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= n {
            0.0
        } else {
            x[i as usize]
        }
    };
    let samples = (0..n as isize)
        .map(|k| (t / 8.0) * (-at(k - 2) - 2.0 * at(k - 1) + 2.0 * at(k + 1) + at(k + 2)))
        .collect();
    Ok(signal.derived(samples, "derivative"))
}

/// Point-wise squaring; emphasizes large slopes over the low-amplitude waves.
pub fn square_signal(signal: &Signal) -> Signal {
    let samples = signal.samples.iter().map(|x| x * x).collect();
    signal.derived(samples, "squared")
}

/// Trailing mean over the last `n` samples; the first n-1 outputs average
/// over the available prefix.
pub fn moving_window_integrate(signal: &Signal, n: usize) -> Result<Signal> {
    if n < 1 {
        return Err(Error::value("moving window width must be >= 1"));
    }
    let mut out = Vec::with_capacity(signal.len());
    let mut sum = 0.0;
    for (i, &x) in signal.samples.iter().enumerate() {
        sum += x;
        if i >= n {
            sum -= signal.samples[i - n];
        }
        out.push(sum / (i + 1).min(n) as f64);
    }
    Ok(signal.derived(out, "integrated"))
}

/// Normalize by the maximum and take max * mean of the normalized trace
/// (which is just its mean) as the detection threshold.
pub fn compute_threshold(integrated: &Signal) -> Result<(Signal, f64)> {
    let max = integrated
        .samples
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || max <= 0.0 {
        return Err(Error::NoBeats);
    }
    let samples: Vec<f64> = integrated.samples.iter().map(|x| x / max).collect();
    let threshold = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok((integrated.derived(samples, "normalized"), threshold))
}

/// Maximal runs of samples above `threshold`, with runs closer than
/// `refractory` samples merged and runs shorter than 3 samples dropped.
/// Returned pairs are inclusive (start, end) indices.
pub fn find_windows(
    normalized: &Signal,
    threshold: f64,
    refractory: usize,
) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &x) in normalized.samples.iter().enumerate() {
        if x > threshold {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            runs.push((s, i - 1));
        }
    }
    if let Some(s) = start {
        runs.push((s, normalized.len() - 1));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(prev) if run.0 - prev.1 - 1 < refractory => prev.1 = run.1,
            _ => merged.push(run),
        }
    }

    merged.retain(|&(s, e)| e - s + 1 >= 3);
    merged
}

fn argmax_in(samples: &[f64], range: std::ops::RangeInclusive<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in range {
        match best {
            Some(b) if samples[i] <= samples[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

fn argmin_in(samples: &[f64], range: std::ops::RangeInclusive<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in range {
        match best {
            Some(b) if samples[i] >= samples[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Locate the labeled peaks on the original signal inside each window.
///
/// R is the maximum of the window dilated leftward by the integrator width
/// (the causal moving window delays burst energy by up to that much). The
/// satellite labels are searched in fixed offsets around R and omitted when
/// their clipped range is empty. R peaks closer than the refractory
/// separation keep only the larger amplitude.
pub fn locate_pqrst(
    original: &Signal,
    windows: &[(usize, usize)],
    config: &DetectorConfig,
) -> PeakSet {
    let rate = original.sample_rate_hz;
    let x = &original.samples;
    let n = x.len();
    let lag = config.window_samples(rate);
    let refractory = config.refractory_samples(rate);
    let ms = |v: f64| (v * rate / 1000.0).round() as usize;
    let w = &config.search_windows_ms;

    let mut r_peaks: Vec<usize> = Vec::with_capacity(windows.len());
    let mut prev_end: Option<usize> = None;
    for &(start, end) in windows {
        let end = end.min(n - 1);
        // Dilate leftward for the integrator lag, but never back into the
        // previous window so candidates stay ordered.
        let mut lo = start.saturating_sub(lag);
        if let Some(pe) = prev_end {
            lo = lo.max(pe + 1);
        }
        prev_end = Some(end);
        if lo > end {
            continue;
        }
        let Some(r) = argmax_in(x, lo..=end) else {
            continue;
        };
        match r_peaks.last() {
            Some(&prev) if r - prev < refractory => {
                if x[r] > x[prev] {
                    *r_peaks.last_mut().unwrap() = r;
                }
            }
            _ => r_peaks.push(r),
        }
    }

    let mut peaks: Vec<Peak> = Vec::new();
    for &r in &r_peaks {
        let mut beat: Vec<Peak> = Vec::with_capacity(5);
        beat.push(Peak {
            label: PeakLabel::R,
            index: r,
            amplitude_mv: x[r],
        });

        // Q: [r - q, r)
        if r >= 1 {
            let lo = r.saturating_sub(ms(w.q_ms));
            if lo < r {
                if let Some(q) = argmin_in(x, lo..=r - 1) {
                    beat.push(Peak {
                        label: PeakLabel::Q,
                        index: q,
                        amplitude_mv: x[q],
                    });
                }
            }
        }
        // S: (r, r + s]
        let s_hi = (r + ms(w.s_ms)).min(n - 1);
        if s_hi > r {
            if let Some(s) = argmin_in(x, r + 1..=s_hi) {
                beat.push(Peak {
                    label: PeakLabel::S,
                    index: s,
                    amplitude_mv: x[s],
                });
            }
        }
        // P: [r - p_from, r - p_to)
        if r >= 1 {
            let hi_excl = r.saturating_sub(ms(w.p_to_ms));
            let lo = r.saturating_sub(ms(w.p_from_ms));
            if hi_excl > lo {
                if let Some(p) = argmax_in(x, lo..=hi_excl - 1) {
                    beat.push(Peak {
                        label: PeakLabel::P,
                        index: p,
                        amplitude_mv: x[p],
                    });
                }
            }
        }
        // T: (r + t_from, r + t_to]
        let t_lo = r + ms(w.t_from_ms) + 1;
        let t_hi = (r + ms(w.t_to_ms)).min(n - 1);
        if t_lo <= t_hi {
            if let Some(t) = argmax_in(x, t_lo..=t_hi) {
                beat.push(Peak {
                    label: PeakLabel::T,
                    index: t,
                    amplitude_mv: x[t],
                });
            }
        }

        beat.sort_by_key(|p| p.index);
        peaks.extend(beat);
    }

    PeakSet {
        peaks,
        sample_rate_hz: rate,
    }
}

/// Run the full pipeline and return the labeled peaks plus every
/// intermediate trace.
pub fn detect(signal: &Signal, config: &DetectorConfig) -> Result<(PeakSet, DetectionTrace)> {
    config.validate()?;
    if signal.is_empty() {
        return Err(Error::value("signal is empty"));
    }
    let filter = daubechies_filter(config.wavelet_order)?;
    let decomposition = dwt_decompose(signal, &filter, config.levels, config.boundary_mode)?;
    let detail_sum = fuse_detail_sum(&decomposition, &config.fused_levels)?;
    let detail_product = fuse_detail_product(&decomposition, &config.fused_levels)?;
    let source = match config.derivative_source {
        DetailFusion::Product => &detail_product,
        DetailFusion::Sum => &detail_sum,
    };
    let derivative = derivative_filter(source)?;
    let squared = square_signal(&derivative);
    let integrated = moving_window_integrate(&squared, config.window_samples(signal.sample_rate_hz))?;
    let (normalized, threshold) = compute_threshold(&integrated)?;
    let windows = find_windows(
        &normalized,
        threshold,
        config.refractory_samples(signal.sample_rate_hz),
    );
    if windows.is_empty() {
        return Err(Error::NoBeats);
    }
    let peaks = locate_pqrst(signal, &windows, config);
    if peaks.peaks.is_empty() {
        return Err(Error::NoBeats);
    }
    let trace = DetectionTrace {
        detail_sum,
        detail_product,
        derivative,
        squared,
        integrated,
        normalized,
        threshold,
        windows,
    };
    Ok((peaks, trace))
}
