//! Self-contained SVG rendering of signals, peak markers and thresholds.
//!
//! Markers carry `data-label` and `data-index` attributes so plots can be
//! compared structurally in tests without rasterizing anything.

use crate::detector::PeakSet;
use crate::signal_io::Signal;

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 40.0;

/// Render a signal as an SVG line chart, optionally with labeled peak
/// markers and a horizontal threshold line.
pub fn signal_svg(
    signal: &Signal,
    peaks: Option<&PeakSet>,
    threshold: Option<f64>,
    title: &str,
) -> String {
    let n = signal.len().max(2);
    let (mut lo, mut hi) = signal
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if let Some(t) = threshold {
        lo = lo.min(t);
        hi = hi.max(t);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |i: usize| MARGIN_LEFT + plot_w * i as f64 / (n - 1) as f64;
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <title>{}</title>\n  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n",
        escape(title)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        MARGIN_LEFT,
        escape(title)
    ));

    // Frame and axis extremes.
    svg.push_str(&format!(
        "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#ccc\"/>\n"
    ));
    let duration = (signal.len().saturating_sub(1)) as f64 / signal.sample_rate_hz;
    for (value, y) in [(hi, MARGIN_TOP + 4.0), (lo, MARGIN_TOP + plot_h)] {
        svg.push_str(&format!(
            "  <text x=\"4\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"10\">{value:.3}</text>\n"
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{MARGIN_LEFT}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\">0 s</text>\n",
        HEIGHT - 8.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
         font-size=\"10\">{duration:.2} s</text>\n",
        WIDTH - MARGIN_RIGHT,
        HEIGHT - 8.0
    ));

    // The trace itself.
    let mut points = String::new();
    for (i, &x) in signal.samples.iter().enumerate() {
        points.push_str(&format!("{:.2},{:.2} ", x_of(i), y_of(x)));
    }
    svg.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1a56a0\" stroke-width=\"1\"/>\n",
        points.trim_end()
    ));

    if let Some(t) = threshold {
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{0:.2}\" x2=\"{1:.2}\" y2=\"{0:.2}\" \
             stroke=\"#c0392b\" stroke-dasharray=\"6 3\" data-threshold=\"{t}\"/>\n",
            y_of(t),
            WIDTH - MARGIN_RIGHT
        ));
    }

    if let Some(peaks) = peaks {
        for peak in &peaks.peaks {
            if peak.index >= signal.len() {
                continue;
            }
            let x = x_of(peak.index);
            let y = y_of(signal.samples[peak.index]);
            svg.push_str(&format!(
                "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#c0392b\" \
                 data-label=\"{}\" data-index=\"{}\"/>\n",
                peak.label, peak.index
            ));
            svg.push_str(&format!(
                "  <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
                 font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                y - 6.0,
                peak.label
            ));
        }
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
