//! The `spindle` binary: exit codes, output formats and fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spindle_cli::commands::{detect, pipeline_config, simulate};
use spindle_cli::config::{read_entries, RunConfig, SimConfig};
use spindle_cli::csv_io::read_series;
use spindle_cli::report::SCHEMA;
use spindle_core::run_pipeline;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn spindle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spindle"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = spindle(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn simulate_fixture(dir: &TempDir, conf: &str) -> String {
    let csv = path(dir, &format!("{conf}.csv"));
    ok(&[
        "simulate",
        "--config",
        fixture(conf).to_str().unwrap(),
        "-o",
        &csv,
    ]);
    csv
}

fn detect_json(csv: &str, extra: &[&str]) -> serde_json::Value {
    let fast = fixture("detect_fast.conf");
    let mut args = vec!["detect", csv, "--config", fast.to_str().unwrap()];
    args.extend_from_slice(extra);
    serde_json::from_slice(&ok(&args).stdout).unwrap()
}

fn validate(report: &serde_json::Value) {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(report)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn zeros_csv(dir: &TempDir, n: usize) -> String {
    let p = path(dir, "zeros.csv");
    std::fs::write(&p, "value\n".to_string() + &"0.0\n".repeat(n)).unwrap();
    p
}

#[test]
fn input_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let short = path(&dir, "short.csv");
    std::fs::write(&short, "value\n1.0\n2.0\n").unwrap();
    let out = spindle(&["detect", &short]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too short"));

    let bad = path(&dir, "bad.csv");
    let mut text = "value\n".to_string() + &"1.0\n".repeat(5) + "abc\n";
    text += &"1.0\n".repeat(40);
    std::fs::write(&bad, text).unwrap();
    let out = spindle(&["detect", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 7"));

    let empty = path(&dir, "empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(spindle(&["detect", &empty]).status.code(), Some(2));
    assert_eq!(
        spindle(&["detect", "/definitely/missing.csv"])
            .status
            .code(),
        Some(2)
    );
    let zeros = zeros_csv(&dir, 100);
    assert_eq!(
        spindle(&["detect", &zeros, "--alpha", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        spindle(&["detect", &zeros, "--set", "bogus=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(spindle(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn budget_refusal_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let out_dir = path(&dir, "exp");
    let out = spindle(&[
        "experiment",
        "--preset",
        "paper/accuracy_twospindle",
        "--out-dir",
        &out_dir,
    ]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        msg.contains("estimated") && msg.contains("--force"),
        "{msg}"
    );
    let out = spindle(&[
        "experiment",
        "--preset",
        "desk/stage1_null",
        "--budget",
        "1000",
        "--out-dir",
        &out_dir,
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!Path::new(&out_dir).exists());
}

#[test]
fn zero_input_reports_no_frequencies() {
    let dir = TempDir::new().unwrap();
    let zeros = zeros_csv(&dir, 100);
    let report = detect_json(&zeros, &[]);
    validate(&report);
    assert_eq!(report["stage1"]["omega_hat_set"], serde_json::json!([]));
    assert_eq!(report["stage2"], serde_json::json!([]));
    assert_eq!(report["n"], 100);

    let out = ok(&["profile", &zeros]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,value"));
    assert!(lines.all(|l| l.ends_with(",0")), "non-zero profile");
}

#[test]
fn key_order_is_stable() {
    let dir = TempDir::new().unwrap();
    let zeros = zeros_csv(&dir, 64);
    let out = ok(&[
        "detect",
        &zeros,
        "--replicates",
        "100",
        "--replicates2",
        "100",
        "--sampling-rate-hz",
        "100",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys = [
        "\"n\"",
        "\"seed\"",
        "\"sampling_rate_hz\"",
        "\"grid\"",
        "\"tuning\"",
        "\"stage1\"",
        "\"stage2\"",
    ];
    let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
    assert!(text.ends_with("}\n"));
}

#[test]
fn tone_is_reported_in_hz() {
    let dir = TempDir::new().unwrap();
    let csv = simulate_fixture(&dir, "tone_14hz.conf");
    let report = detect_json(&csv, &["--sampling-rate-hz", "200"]);
    validate(&report);
    let hz = report["stage1"]["hz_set"].as_array().unwrap();
    assert_eq!(hz.len(), 1, "{hz:?}");
    let hz = hz[0].as_f64().unwrap();
    assert!((hz - 14.1).abs() <= 0.2, "{hz}");
    let omega = report["stage1"]["omega_hat_set"][0].as_f64().unwrap();
    assert_eq!(
        report["stage1"]["iterations"][0]["hz"].as_f64().unwrap(),
        hz
    );
    assert!((omega * 200.0 / (2.0 * std::f64::consts::PI) - hz).abs() < 1e-12);

    // The progressive periodogram peaks within one mesh of the tone.
    let out = ok(&["profile", &csv, "--grid-factor", "0.05"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let (peak, _) = text
        .lines()
        .skip(1)
        .map(|l| {
            let (w, v) = l.split_once(',').unwrap();
            (w.parse::<f64>().unwrap(), v.parse::<f64>().unwrap())
        })
        .fold(
            (0.0, f64::MIN),
            |best, (w, v)| if v > best.1 { (w, v) } else { best },
        );
    let mesh = report["grid"]["mesh"].as_f64().unwrap();
    let truth = 2.0 * std::f64::consts::PI * 14.1 / 200.0;
    assert!(
        (peak - truth).abs() <= 2.0 * std::f64::consts::PI * 0.2 / 200.0,
        "{peak}"
    );
    assert!(mesh > 0.0);
}

#[test]
fn spindle_demo_finds_two_bursts() {
    let dir = TempDir::new().unwrap();
    let csv = simulate_fixture(&dir, "spindle_demo.conf");
    let report = detect_json(&csv, &[]);
    validate(&report);
    let truth = spindle_core::MeanSpec::two_spindle(1000);
    let stage2 = report["stage2"].as_array().unwrap();
    assert_eq!(stage2.len(), 2);
    let tol = 5.0 * 1000f64.powf(-1.5) * 1000f64.ln();
    for comp in &truth.components {
        let s = stage2
            .iter()
            .min_by(|a, b| {
                let da = (a["omega"].as_f64().unwrap() - comp.omega).abs();
                let db = (b["omega"].as_f64().unwrap() - comp.omega).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        assert!((s["omega"].as_f64().unwrap() - comp.omega).abs() <= 10.0 * tol);
        let mut cps: Vec<i64> = s["change_points"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_i64().unwrap())
            .collect();
        cps.sort_unstable();
        let want: Vec<i64> = comp.change_points().iter().map(|&b| b as i64).collect();
        assert_eq!(cps.len(), want.len(), "{cps:?} vs {want:?}");
        for (a, b) in cps.iter().zip(&want) {
            assert!((a - b).abs() <= 30, "{cps:?} vs {want:?}");
        }
    }
}

#[test]
fn simulate_then_detect_matches_in_process() {
    let dir = TempDir::new().unwrap();
    let csv = simulate_fixture(&dir, "spindle_demo.conf");
    let from_cli = ok(&[
        "detect",
        &csv,
        "--config",
        fixture("detect_fast.conf").to_str().unwrap(),
    ])
    .stdout;

    let mut sim = SimConfig::default();
    sim.apply(&read_entries(&fixture("spindle_demo.conf")).unwrap())
        .unwrap();
    let x = simulate(&sim).unwrap();
    assert_eq!(x, read_series(Path::new(&csv)).unwrap());
    let mut cfg = RunConfig::default();
    cfg.apply(&read_entries(&fixture("detect_fast.conf")).unwrap())
        .unwrap();
    let (result, report) = detect(&x, &cfg).unwrap();
    assert_eq!(from_cli, report.to_json().into_bytes());
    assert_eq!(
        result,
        run_pipeline(&x, &pipeline_config(&cfg, x.len()).unwrap()).unwrap()
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let csv = simulate_fixture(&dir, "spindle_demo.conf");
    let again = path(&dir, "again.csv");
    ok(&[
        "simulate",
        "--config",
        fixture("spindle_demo.conf").to_str().unwrap(),
        "-o",
        &again,
    ]);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());
    for args in [
        vec![
            "heatmap",
            csv.as_str(),
            "--freq-count",
            "16",
            "--stride",
            "25",
        ],
        vec![
            "profile",
            csv.as_str(),
            "--omega",
            "1.0686",
            "--m-tilde",
            "40",
        ],
        vec![
            "tune",
            csv.as_str(),
            "--stage",
            "m-tilde",
            "--omega",
            "1.0686",
        ],
    ] {
        assert_eq!(ok(&args).stdout, ok(&args).stdout, "{args:?}");
    }
}

#[test]
fn heatmap_layout() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "tone.csv");
    let values: String = (1..=1000)
        .map(|i| format!("{}\n", (0.6 * std::f64::consts::PI * i as f64).cos()))
        .collect();
    std::fs::write(&csv, values).unwrap();
    let out = ok(&[
        "heatmap",
        &csv,
        "--freq-min",
        "1.8849555921538759",
        "--freq-max",
        "1.8849555921538759",
        "--freq-count",
        "1",
        "--stride",
        "100",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "i,1.8849555921538759");
    assert_eq!(rows.len(), 11);
    assert!(rows[1].starts_with("100,"));
    for r in &rows[1..] {
        let v: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v <= 0.2, "{r}");
    }
}

#[test]
fn tune_emits_curve() {
    let dir = TempDir::new().unwrap();
    let csv = simulate_fixture(&dir, "spindle_demo.conf");
    let out = ok(&[
        "tune",
        &csv,
        "--stage",
        "m-prime",
        "--omega",
        "1.0686",
        "--m-tilde",
        "40",
        "--candidates",
        "4,6,8,10",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "candidate,volatility,chosen");
    assert_eq!(rows.len(), 5);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",true")).count(), 1);
    let missing = spindle(&["tune", &csv, "--stage", "m-tilde"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn experiment_writes_deterministic_outputs() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out_dir = path(&dir, name);
        ok(&[
            "experiment",
            "--preset",
            "desk/stage2_null",
            "--n",
            "300",
            "--reps",
            "50",
            "--replicates2",
            "100",
            "--m-tilde",
            "30",
            "--m-prime",
            "6",
            "--out-dir",
            &out_dir,
        ]);
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["table.csv", "summary.json"] {
        let pa = Path::new(&a).join(file);
        assert_eq!(
            std::fs::read(&pa).unwrap(),
            std::fs::read(Path::new(&b).join(file)).unwrap()
        );
    }
    let table = std::fs::read_to_string(Path::new(&a).join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 51);
    assert!(table.starts_with("rep,seed,level,"));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(Path::new(&a).join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["experiment"], "stage2_null");
    assert_eq!(summary["cells"][0]["rejection"]["total"], 50);
    let timings = std::fs::read_to_string(Path::new(&a).join("timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 51);
}
