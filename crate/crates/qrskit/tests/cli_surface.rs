//! File-level tests of the command-line surface: trace dumps, plot output,
//! rules overrides and byte-stable outputs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrskit"))
}

fn synth_record_seeded(dir: &Path, name: &str, seed: u64, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let seed = seed.to_string();
    let status = bin()
        .args(["synth", "--output", path.to_str().unwrap(), "--beats", "12", "--seed", &seed])
        .args(extra)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    path
}

fn synth_record(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    synth_record_seeded(dir, name, 5, extra)
}

#[test]
fn dump_trace_writes_stages_and_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &[]);
    let trace_dir = dir.path().join("trace");
    let status = bin()
        .args([
            "detect",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--output",
            dir.path().join("peaks.json").to_str().unwrap(),
            "--dump-trace",
            trace_dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let n_samples = fs::read_to_string(&record).unwrap().lines().count();
    for stage in [
        "detail_sum",
        "detail_product",
        "derivative",
        "squared",
        "integrated",
        "normalized",
    ] {
        let text = fs::read_to_string(trace_dir.join(format!("{stage}.csv")))
            .unwrap_or_else(|_| panic!("{stage}.csv missing"));
        assert_eq!(text.lines().count(), n_samples, "{stage} length");
    }
    // Coefficient arrays halve per level.
    let mut len = n_samples;
    for level in 1..=8 {
        len = len.div_ceil(2);
        for band in ["a", "d"] {
            let text = fs::read_to_string(trace_dir.join(format!("{band}{level}.csv")))
                .unwrap_or_else(|_| panic!("{band}{level}.csv missing"));
            assert_eq!(text.lines().count(), len, "{band}{level} length");
        }
    }
}

#[test]
fn plot_sidecar_equals_detect_output() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &[]);
    let detect_json = dir.path().join("peaks.json");
    let plot_dir = dir.path().join("plots");

    let status = bin()
        .args([
            "detect",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--output",
            detect_json.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = bin()
        .args([
            "plot",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--out-dir",
            plot_dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    for file in [
        "signal.svg",
        "detail_sum.svg",
        "detail_product.svg",
        "derivative.svg",
        "squared.svg",
        "integrated.svg",
        "normalized.svg",
    ] {
        assert!(plot_dir.join(file).exists(), "{file} missing");
    }
    let svg = fs::read_to_string(plot_dir.join("signal.svg")).unwrap();
    assert!(svg.contains("data-label=\"R\""), "signal.svg lacks R markers");
    assert!(fs::read_to_string(plot_dir.join("normalized.svg"))
        .unwrap()
        .contains("data-threshold"));

    assert_eq!(
        fs::read(&detect_json).unwrap(),
        fs::read(plot_dir.join("peaks.json")).unwrap(),
        "plot sidecar must be byte-identical to detect output"
    );
}

#[test]
fn plot_on_flat_signal_fails_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "0.0\n".repeat(4096)).unwrap();
    let plot_dir = dir.path().join("plots");
    let output = bin()
        .args([
            "plot",
            flat.to_str().unwrap(),
            "--rate",
            "360",
            "--out-dir",
            plot_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!plot_dir.exists(), "no partial plot output on failure");
}

fn custom_rules_json() -> String {
    serde_json::json!({
        "rows": [{
            "measure": "RR",
            "low": 0.80,
            "high": 0.85,
            "below_finding": "Custom fast rhythm",
            "above_finding": null,
            "units": "s"
        }]
    })
    .to_string()
}

fn findings(report_path: &Path) -> Vec<String> {
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report_path).unwrap()).unwrap();
    doc["flags"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["finding"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn rules_file_overrides_builtin_table() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &["--rr-s", "0.645"]);
    let rules = dir.path().join("rules.json");
    fs::write(&rules, custom_rules_json()).unwrap();
    let report = dir.path().join("report.json");

    let status = bin()
        .args([
            "analyze",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--rules",
            rules.to_str().unwrap(),
            "--output",
            report.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(findings(&report), vec!["Custom fast rhythm"]);
}

#[test]
fn rules_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &["--rr-s", "0.645"]);
    let rules = dir.path().join("rules.json");
    fs::write(&rules, custom_rules_json()).unwrap();
    let report = dir.path().join("report.json");

    let status = bin()
        .args([
            "analyze",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--output",
            report.to_str().unwrap(),
        ])
        .env("QRSKIT_RULES", rules.to_str().unwrap())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(findings(&report), vec!["Custom fast rhythm"]);
}

#[test]
fn malformed_rules_file_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &[]);
    let rules = dir.path().join("rules.json");
    fs::write(&rules, "{\"rows\": [{\"measure\": \"RR\", \"low\": 1.0, \"high\": 0.5, \"below_finding\": null, \"above_finding\": null, \"units\": \"s\"}]}").unwrap();
    let output = bin()
        .args([
            "analyze",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--rules",
            rules.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("must not exceed"));
}

#[test]
fn per_beat_flags_appear_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &["--rr-s", "0.645"]);
    let report = dir.path().join("report.json");
    let status = bin()
        .args([
            "analyze",
            record.to_str().unwrap(),
            "--rate",
            "360",
            "--per-beat",
            "--output",
            report.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let beat_flags = doc["flags"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["rule"].as_str().unwrap().contains("[beat "))
        .count();
    assert_eq!(beat_flags, 11, "one per-beat RR flag per interval");
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let noise = &["--noise-std", "0.05"];
    let a = synth_record_seeded(dir.path(), "a.csv", 7, noise);
    let b = synth_record_seeded(dir.path(), "b.csv", 7, noise);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.csv.truth.json")).unwrap(),
        fs::read(dir.path().join("b.csv.truth.json")).unwrap()
    );
    let c = synth_record_seeded(dir.path(), "c.csv", 8, noise);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn analyze_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &["--noise-std", "0.05"]);
    let mut outputs = Vec::new();
    for name in ["r1.json", "r2.json"] {
        let report = dir.path().join(name);
        let status = bin()
            .args([
                "analyze",
                record.to_str().unwrap(),
                "--rate",
                "360",
                "--output",
                report.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(fs::read(&report).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn csv_2col_round_trip_infers_the_rate() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.2col.csv", &["--format", "csv-2col"]);
    let report = dir.path().join("report.json");
    // No --rate: csv-2col infers it from the time column.
    let status = bin()
        .args([
            "analyze",
            record.to_str().unwrap(),
            "--format",
            "csv-2col",
            "--output",
            report.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rate = doc["signal"]["sample_rate_hz"].as_f64().unwrap();
    assert!((rate - 360.0).abs() < 1.0, "inferred rate {rate}");
    assert_eq!(doc["intervals"]["RR_s"].as_array().unwrap().len(), 11);
}

#[test]
fn raw_f64le_round_trip_detects_the_same_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_record(dir.path(), "rec.csv", &[]);
    let raw = synth_record(dir.path(), "rec.bin", &["--format", "raw-f64le"]);
    let mut peaks = Vec::new();
    for (record, format) in [(&csv, "csv-1col"), (&raw, "raw-f64le")] {
        let out = dir.path().join(format!("{format}.json"));
        let status = bin()
            .args([
                "detect",
                record.to_str().unwrap(),
                "--rate",
                "360",
                "--format",
                format,
                "--output",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        peaks.push(fs::read(&out).unwrap());
    }
    assert_eq!(peaks[0], peaks[1], "identical samples, identical peaks");
}

#[test]
fn detect_without_output_prints_json_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let record = synth_record(dir.path(), "rec.csv", &[]);
    let output = bin()
        .args(["detect", record.to_str().unwrap(), "--rate", "360"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(doc["peaks"].as_array().unwrap().len(), 12 * 5);
}
