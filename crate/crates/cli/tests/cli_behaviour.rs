use std::path::Path;
use std::process::Command;

use qkd_sift_cli::config::{emit_config, load_config, parse_config, OutputFormat};
use qkd_sift_cli::report::{render, COVERAGE_COLUMNS, ESTIMATION_COLUMNS, SESSION_COLUMNS, SWEEP_COLUMNS};
use qkd_sift_cli::runner::{execute, with_pool, Results};

const BIN: &str = env!("CARGO_BIN_EXE_qkd-sift");

fn config(mode: &str, extra: &str) -> String {
    format!(
        r#"{{
    "mode": "{mode}",
    "params": {{"p_z_a": 0.5, "p_x_a": 0.5, "p_z_b": 0.5, "p_x_b": 0.5,
               "n_det_ter": 400, "eps_s": 1e-3, "eps_c": 1e-10, "delta": 0.27}},
    "strategy": {{"kind": "depolarizing", "p": 0.05, "p_loss": 0.1}},
    "seed": 11{extra}
}}"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn emitted_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let c = parse_config(&config("estimation", ", \"trials\": 3"), "inline").unwrap();
    let path = write(dir.path(), "emitted.json", &emit_config(&c));
    assert_eq!(load_config(&path).unwrap(), c);
}

#[test]
fn csv_headers_follow_the_documented_columns() {
    for (mode, columns) in [
        ("actual", SESSION_COLUMNS),
        ("virtual", SESSION_COLUMNS),
        ("estimation", ESTIMATION_COLUMNS),
        ("coverage", COVERAGE_COLUMNS),
    ] {
        let c = parse_config(&config(mode, ", \"trials\": 4"), mode).unwrap();
        let bytes = render(&c, &execute(&c).unwrap(), OutputFormat::Csv).unwrap();
        let rows = csv_rows(std::str::from_utf8(&bytes).unwrap());
        assert_eq!(rows[0], columns.iter().map(|s| s.to_string()).collect::<Vec<_>>(), "{mode}");
        let expected = if mode == "coverage" { 2 } else { 5 };
        assert_eq!(rows.len(), expected, "{mode}");
    }
}

#[test]
fn coverage_row_reports_trials_and_eta() {
    let c = parse_config(&config("coverage", ", \"trials\": 50"), "c").unwrap();
    let bytes = render(&c, &execute(&c).unwrap(), OutputFormat::Csv).unwrap();
    let rows = csv_rows(std::str::from_utf8(&bytes).unwrap());
    assert_eq!(rows[1][0], "50");
    let eta: f64 = rows[1][3].parse().unwrap();
    assert!((eta - (-400.0f64 * 0.27 * 0.27 / 2.0).exp()).abs() < 1e-15);
}

#[test]
fn sweep_has_one_row_per_point_and_trial() {
    let extra = r#", "trials": 2, "sweep": {"axis": "depolarizing_p", "values": [0.0, 0.02, 0.04, 0.06, 0.08]}"#;
    let c = parse_config(&config("keyrate-sweep", extra), "s").unwrap();
    let bytes = render(&c, &execute(&c).unwrap(), OutputFormat::Csv).unwrap();
    let rows = csv_rows(std::str::from_utf8(&bytes).unwrap());
    assert_eq!(rows[0], SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    assert_eq!(rows.len(), 1 + 5 * 2);
}

#[test]
fn delta_sweep_has_an_interior_maximum() {
    let text = r#"{
        "mode": "keyrate-sweep",
        "params": {"p_z_a": 0.5, "p_x_a": 0.5, "p_z_b": 0.5, "p_x_b": 0.5,
                   "n_det_ter": 1000000, "eps_s": 1e-2, "eps_c": 1e-10, "delta": 0.01},
        "strategy": {"kind": "depolarizing", "p": 0.01, "p_loss": 0.0},
        "sweep": {"axis": "delta", "values": [0.004, 0.006, 0.008, 0.012, 0.02]},
        "seed": 5
    }"#;
    let c = parse_config(text, "delta").unwrap();
    let Results::Sweep(rows) = execute(&c).unwrap() else { panic!("expected sweep rows") };
    let l: Vec<u64> = rows.iter().map(|r| r.l).collect();
    let best = (0..l.len()).max_by_key(|&i| l[i]).unwrap();
    assert!(best > 0 && best < l.len() - 1, "{l:?}");
    assert!(l[best] > l[0] && l[best] > l[l.len() - 1]);
}

#[test]
fn bias_mode_with_a_fixed_detection_count_is_unbiased() {
    let extra = r#", "termination": {"kind": "count_detected", "n": 4}"#;
    let c = parse_config(&config("bias", extra), "b").unwrap();
    let Results::Bias(report) = execute(&c).unwrap() else { panic!("expected a bias report") };
    assert!(report.tv_from_uniform <= 1e-12);
    assert!(!report.dependence_detected);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let c = parse_config(&config("actual", ", \"trials\": 16"), "d").unwrap();
    let one = render(&c, &with_pool(Some(1), || execute(&c)).unwrap().unwrap(), OutputFormat::Json).unwrap();
    let four = render(&c, &with_pool(Some(4), || execute(&c)).unwrap().unwrap(), OutputFormat::Json).unwrap();
    assert_eq!(one, four);
}

#[test]
fn binary_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", &config("estimation", ", \"trials\": 3"));
    let out = dir.path().join("nested/out.csv");
    let status = Command::new(BIN)
        .args(["run", "--config", &path, "--format", "csv", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next().unwrap(), ESTIMATION_COLUMNS.join(","));
}

#[test]
fn binary_reports_parse_errors_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", "{\n  \"mode\": \"quantum\"\n}");
    let out = Command::new(BIN).args(["run", "--config", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["kind"], "parse_error");
    assert_eq!(record["line"], 2);
}

#[test]
fn binary_rejects_a_bad_thread_variable() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", &config("actual", ""));
    let out = Command::new(BIN).args(["run", "--config", &path]).env("QKD_SIFT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", &config("actual", ""));
    let out = Command::new(BIN)
        .args(["sweep", "--config", &path, "--format", "csv", "--axis", "q_ratio", "--values", "0.5,1,2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][0], "q_ratio");
}

#[test]
fn shipped_example_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
