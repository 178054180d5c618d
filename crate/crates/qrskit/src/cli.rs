//! Command-line entry point.
//!
//! Subcommands: `detect` (peaks as JSON, optional trace dump), `analyze`
//! (full report with rule flags), `synth` (synthetic record plus ground-truth
//! sidecar) and `plot` (SVG renderings of the signal and every pipeline
//! stage). Exit codes: 0 success, 1 domain error (unreadable input, no beats
//! found), 2 usage error (bad flags).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    builtin_rules, diagnose, diagnose_per_beat, load_rules, measure_amplitudes,
    measure_intervals, RuleTable,
};
use crate::detector::{detect, DetailFusion, DetectorConfig, SearchWindows};
use crate::error::Error;
use crate::plot::signal_svg;
use crate::signal_io::{
    load_signal, save_series, save_signal, write_atomic, write_report, PeaksDoc, ReportDoc,
    Signal, SignalFormat,
};
use crate::synth::{generate, RrPattern, SynthConfig};
use crate::wavelet::{daubechies_filter, dwt_decompose, BoundaryMode};

/// Environment variable holding a default rules-file path.
pub const RULES_ENV: &str = "QRSKIT_RULES";

#[derive(Debug, Parser)]
#[command(
    name = "qrskit",
    version,
    about = "Wavelet-based ECG P-QRS-T detection, interval measurement and rhythm screening"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect labeled peaks and write them as JSON.
    Detect(DetectCmd),
    /// Detect peaks, measure intervals and amplitudes, apply the rule table.
    Analyze(AnalyzeCmd),
    /// Generate a synthetic record with known peak locations.
    Synth(SynthCmd),
    /// Render the signal and every pipeline stage as SVG.
    Plot(PlotCmd),
}

#[derive(Debug, Args)]
struct InputOpts {
    /// Input signal file.
    input: PathBuf,

    /// Sample rate in Hz. Required for csv-1col and raw-f64le; csv-2col
    /// infers the rate from its time column.
    #[arg(long)]
    rate: Option<f64>,

    /// Input format: csv-1col, csv-2col or raw-f64le.
    #[arg(long, default_value = "csv-1col")]
    format: String,
}

#[derive(Debug, Args)]
struct DetectorOpts {
    /// Daubechies order of the mother wavelet (1-8).
    #[arg(long, default_value_t = 6)]
    wavelet_order: usize,

    /// Decomposition depth.
    #[arg(long, default_value_t = 8)]
    levels: usize,

    /// Comma-separated detail levels fused ahead of the derivative stage.
    #[arg(long, default_value = "3,4,5")]
    fuse_levels: String,

    /// Moving-window integrator width in milliseconds.
    #[arg(long, default_value_t = 150.0)]
    window_ms: f64,

    /// Minimum beat separation in milliseconds.
    #[arg(long, default_value_t = 200.0)]
    refractory_ms: f64,

    /// Boundary handling: periodic or symmetric.
    #[arg(long, default_value = "periodic")]
    boundary: String,

    /// Derivative input: "product" (damped detail product) or "sum".
    #[arg(long, default_value = "product")]
    derivative_source: String,
}

#[derive(Debug, Args)]
struct DetectCmd {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    detector: DetectorOpts,

    /// Output JSON path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Directory for per-stage trace CSVs and coefficient arrays.
    #[arg(long)]
    dump_trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeCmd {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    detector: DetectorOpts,

    /// Output JSON path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Rules JSON overriding the built-in table (or set QRSKIT_RULES).
    #[arg(long)]
    rules: Option<PathBuf>,

    /// Also emit one flag per out-of-range beat, not just per-record means.
    #[arg(long)]
    per_beat: bool,
}

#[derive(Debug, Args)]
struct SynthCmd {
    /// Output signal path; a ground-truth sidecar is written next to it.
    #[arg(long, short)]
    output: PathBuf,

    /// Output format: csv-1col, csv-2col or raw-f64le.
    #[arg(long, default_value = "csv-1col")]
    format: String,

    /// Sample rate in Hz.
    #[arg(long, default_value_t = 360.0)]
    rate: f64,

    /// Number of beats.
    #[arg(long, default_value_t = 60)]
    beats: usize,

    /// Beat-to-beat interval in seconds.
    #[arg(long, default_value_t = 0.8)]
    rr_s: f64,

    /// Uniform jitter half-width added to rr-s, in seconds.
    #[arg(long, default_value_t = 0.0)]
    rr_jitter: f64,

    /// White-noise standard deviation in millivolts.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,

    /// Seed for jitter and noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct PlotCmd {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    detector: DetectorOpts,

    /// Directory receiving the SVG files and the peaks.json sidecar.
    #[arg(long)]
    out_dir: PathBuf,
}

/// Why a run failed, mapped to the exit-code contract.
enum RunError {
    /// Bad flag values: exit 2.
    Usage(String),
    /// Everything else (I/O, parse, no beats): exit 1.
    Domain(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Domain(e)
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

fn usage(msg: impl Into<String>) -> RunError {
    RunError::Usage(msg.into())
}

/// Parse and execute a full command line, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 2;
        }
    };
    let result = match cli.command {
        Command::Detect(cmd) => run_detect(cmd),
        Command::Analyze(cmd) => run_analyze(cmd),
        Command::Synth(cmd) => run_synth(cmd),
        Command::Plot(cmd) => run_plot(cmd),
    };
    match result {
        Ok(()) => 0,
        Err(RunError::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

// ---------------------------------------------------------------------------
// Flag validation (before any file is touched)
// ---------------------------------------------------------------------------

fn parse_format(s: &str) -> RunResult<SignalFormat> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn validated_rate(opts: &InputOpts, format: SignalFormat) -> RunResult<f64> {
    match (format, opts.rate) {
        (SignalFormat::Csv2Col, _) => Ok(0.0), // inferred from the file
        (_, Some(rate)) if rate.is_finite() && rate > 0.0 => Ok(rate),
        (_, Some(rate)) => Err(usage(format!("--rate must be positive, got {rate}"))),
        (_, None) => Err(usage(format!(
            "--rate is required for {} input",
            format.name()
        ))),
    }
}

fn detector_config(opts: &DetectorOpts) -> RunResult<DetectorConfig> {
    let fused_levels: Vec<usize> = opts
        .fuse_levels
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("--fuse-levels: bad level {part:?}")))
        })
        .collect::<RunResult<_>>()?;
    let boundary_mode: BoundaryMode = opts
        .boundary
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let derivative_source = match opts.derivative_source.as_str() {
        "product" => DetailFusion::Product,
        "sum" => DetailFusion::Sum,
        other => {
            return Err(usage(format!(
                "--derivative-source must be product or sum, got {other:?}"
            )))
        }
    };
    let config = DetectorConfig {
        wavelet_order: opts.wavelet_order,
        levels: opts.levels,
        fused_levels,
        window_ms: opts.window_ms,
        refractory_ms: opts.refractory_ms,
        search_windows_ms: SearchWindows::default(),
        boundary_mode,
        derivative_source,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    daubechies_filter(config.wavelet_order).map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn load_input(opts: &InputOpts) -> RunResult<Signal> {
    let format = parse_format(&opts.format)?;
    let rate = validated_rate(opts, format)?;
    Ok(load_signal(&opts.input, format, rate)?)
}

fn resolve_rules(flag: &Option<PathBuf>) -> RunResult<RuleTable> {
    if let Some(path) = flag {
        return Ok(load_rules(path)?);
    }
    if let Some(path) = std::env::var_os(RULES_ENV) {
        return Ok(load_rules(Path::new(&path))?);
    }
    Ok(builtin_rules())
}

fn emit(text: &str, output: &Option<PathBuf>) -> RunResult<()> {
    match output {
        Some(path) => Ok(write_atomic(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_detect(cmd: DetectCmd) -> RunResult<()> {
    let config = detector_config(&cmd.detector)?;
    let signal = load_input(&cmd.input)?;
    let (peaks, trace) = detect(&signal, &config)?;

    if let Some(dir) = &cmd.dump_trace {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for stage in [
            &trace.detail_sum,
            &trace.detail_product,
            &trace.derivative,
            &trace.squared,
            &trace.integrated,
            &trace.normalized,
        ] {
            let name = stage.label.as_deref().unwrap_or("stage").replace(' ', "_");
            save_series(&stage.samples, &dir.join(format!("{name}.csv")))?;
        }
        // Coefficient arrays of the underlying decomposition.
        let filter = daubechies_filter(config.wavelet_order)?;
        let decomposition =
            dwt_decompose(&signal, &filter, config.levels, config.boundary_mode)?;
        for level in 1..=config.levels {
            save_series(
                decomposition.approximation(level)?,
                &dir.join(format!("a{level}.csv")),
            )?;
            save_series(
                decomposition.detail(level)?,
                &dir.join(format!("d{level}.csv")),
            )?;
        }
    }

    emit(&PeaksDoc::new(&signal, &peaks).to_json(), &cmd.output)
}

fn run_analyze(cmd: AnalyzeCmd) -> RunResult<()> {
    let config = detector_config(&cmd.detector)?;
    let rules = resolve_rules(&cmd.rules)?;
    let signal = load_input(&cmd.input)?;
    let (peaks, _) = detect(&signal, &config)?;

    let intervals = measure_intervals(&peaks);
    let amplitudes = measure_amplitudes(&signal, &peaks);
    let mut diagnosis = diagnose(&intervals, &amplitudes, &rules);
    if cmd.per_beat {
        diagnosis.flags.extend(diagnose_per_beat(&intervals, &rules));
    }

    let doc = ReportDoc::new(&signal, &peaks, &diagnosis);
    match &cmd.output {
        Some(path) => Ok(write_report(&doc, path)?),
        None => {
            print!("{}", doc.to_json());
            Ok(())
        }
    }
}

fn run_synth(cmd: SynthCmd) -> RunResult<()> {
    let format = parse_format(&cmd.format)?;
    if !(cmd.rate.is_finite() && cmd.rate > 0.0) {
        return Err(usage(format!("--rate must be positive, got {}", cmd.rate)));
    }
    let config = SynthConfig {
        sample_rate_hz: cmd.rate,
        n_beats: cmd.beats,
        rr_s: if cmd.rr_jitter > 0.0 {
            RrPattern::Jittered {
                mean_s: cmd.rr_s,
                jitter_s: cmd.rr_jitter,
            }
        } else {
            RrPattern::Constant(cmd.rr_s)
        },
        noise_std_mv: cmd.noise_std,
        seed: cmd.seed,
        ..SynthConfig::default()
    };
    let (signal, truth) = generate(&config).map_err(|e| usage(e.to_string()))?;

    save_signal(&signal, &cmd.output, format)?;
    let mut sidecar = cmd.output.as_os_str().to_os_string();
    sidecar.push(".truth.json");
    write_atomic(Path::new(&sidecar), truth.to_json().as_bytes())?;
    Ok(())
}

fn run_plot(cmd: PlotCmd) -> RunResult<()> {
    let config = detector_config(&cmd.detector)?;
    let signal = load_input(&cmd.input)?;
    let (peaks, trace) = detect(&signal, &config)?;

    std::fs::create_dir_all(&cmd.out_dir).map_err(|e| Error::io(&cmd.out_dir, e))?;
    let title = signal.label.clone().unwrap_or_else(|| "signal".to_string());
    let svg = signal_svg(&signal, Some(&peaks), None, &title);
    write_atomic(&cmd.out_dir.join("signal.svg"), svg.as_bytes())?;

    for stage in [
        &trace.detail_sum,
        &trace.detail_product,
        &trace.derivative,
        &trace.squared,
        &trace.integrated,
    ] {
        let name = stage.label.as_deref().unwrap_or("stage").replace(' ', "_");
        let svg = signal_svg(stage, None, None, stage.label.as_deref().unwrap_or("stage"));
        write_atomic(&cmd.out_dir.join(format!("{name}.svg")), svg.as_bytes())?;
    }
    let svg = signal_svg(&trace.normalized, None, Some(trace.threshold), "normalized");
    write_atomic(&cmd.out_dir.join("normalized.svg"), svg.as_bytes())?;

    // Sidecar identical to `detect` output on the same flags.
    write_atomic(
        &cmd.out_dir.join("peaks.json"),
        PeaksDoc::new(&signal, &peaks).to_json().as_bytes(),
    )?;
    Ok(())
}
