//! JSON and CSV renderings of run results. Column lists are part of the
//! output contract documented in `docs/csv-columns.md`.

use std::io::Write;

use qkd_sift::rng::STREAM_DERIVATION;
use qkd_sift::stats::{BiasReport, CoverageReport};
use serde::Serialize;

use crate::config::{Mode, OutputFormat, RunConfig};
use crate::error::CliError;
use crate::runner::Results;

/// Versioned tag of JSON reports.
pub const REPORT_SCHEMA: &str = "qkd-sift/report/v1";

pub const SESSION_COLUMNS: &[&str] = &[
    "trial", "rounds", "detected", "n_z", "n_x", "mismatched", "z_errors", "x_errors", "status", "l", "e_ph_bar",
    "eta", "lambda_ec", "entropy_term", "secrecy_term", "ec_term", "corr_term",
];

pub const ESTIMATION_COLUMNS: &[&str] = &[
    "trial", "rounds", "detected", "lambda_ph", "sum_p_ph", "lambda_xerr", "sum_p_xerr", "x_ph", "x_xerr",
    "max_increment", "relation_residual", "max_round_residual",
];

pub const COVERAGE_COLUMNS: &[&str] = &["trials", "violations_ph", "violations_xerr", "eta_single"];

pub const BIAS_COLUMNS: &[&str] = &[
    "rule", "n_rounds_enumerated", "tv_from_uniform", "censored_probability", "dependence_statistic",
    "dependence_detected",
];

pub const SWEEP_COLUMNS: &[&str] = &[
    "axis", "value", "trial", "n_det_ter", "delta", "n_z", "n_x", "x_errors", "status", "eta", "e_ph_bar",
    "lambda_ec", "l", "entropy_term", "secrecy_term", "ec_term", "corr_term",
];

/// Modeling choices stated in every JSON report.
pub const NOTES: &[&str] = &[
    "error correction is idealized: Bob's key is replaced by Alice's and lambda_ec = ceil(f_ec * n_z * h(x error rate)) bits are charged",
    "key length uses the Azuma phase-error bound with eta = 2 exp(-n_det_ter delta^2 / 2)",
];

#[derive(Serialize)]
struct CoverageRow {
    trials: u64,
    violations_ph: u64,
    violations_xerr: u64,
    eta_single: f64,
}

impl From<&CoverageReport> for CoverageRow {
    fn from(r: &CoverageReport) -> Self {
        Self { trials: r.trials, violations_ph: r.violations_ph, violations_xerr: r.violations_xerr, eta_single: r.eta_claimed }
    }
}

#[derive(Serialize)]
struct BiasRow {
    rule: String,
    n_rounds_enumerated: u32,
    tv_from_uniform: f64,
    censored_probability: f64,
    dependence_statistic: f64,
    dependence_detected: bool,
}

fn rule_label(r: &qkd_sift::TerminationRule) -> String {
    match r {
        qkd_sift::TerminationRule::CountDetected { n } => format!("count_detected({n})"),
        qkd_sift::TerminationRule::CountPerBasis { n_z_req, n_x_req } => format!("count_per_basis({n_z_req},{n_x_req})"),
    }
}

impl From<&BiasReport> for BiasRow {
    fn from(r: &BiasReport) -> Self {
        Self {
            rule: rule_label(&r.rule),
            n_rounds_enumerated: r.n_rounds_enumerated,
            tv_from_uniform: r.tv_from_uniform,
            censored_probability: r.censored_probability,
            dependence_statistic: r.dependence_statistic,
            dependence_detected: r.dependence_detected,
        }
    }
}

/// Header line followed by one line per row; an empty `rows` gives the
/// header alone.
pub fn write_csv<T: Serialize>(columns: &[&str], rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    generator: String,
    mode: Mode,
    seed: u64,
    stream_derivation: &'static str,
    notes: &'static [&'static str],
    config: &'a RunConfig,
    results: &'a Results,
}

pub fn render_json(config: &RunConfig, results: &Results) -> Result<Vec<u8>, CliError> {
    let report = Report {
        schema: REPORT_SCHEMA,
        generator: format!("qkd-sift {}", env!("CARGO_PKG_VERSION")),
        mode: config.mode,
        seed: config.seed,
        stream_derivation: STREAM_DERIVATION,
        notes: NOTES,
        config,
        results,
    };
    let mut out = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn render_csv(results: &Results) -> Result<Vec<u8>, CliError> {
    match results {
        Results::Sessions(rows) => write_csv(SESSION_COLUMNS, rows),
        Results::Estimation(rows) => write_csv(ESTIMATION_COLUMNS, rows),
        Results::Coverage(r) => write_csv(COVERAGE_COLUMNS, &[CoverageRow::from(r)]),
        Results::Bias(r) => write_csv(BIAS_COLUMNS, &[BiasRow::from(r)]),
        Results::Sweep(rows) => write_csv(SWEEP_COLUMNS, rows),
    }
}

pub fn render(config: &RunConfig, results: &Results, format: OutputFormat) -> Result<Vec<u8>, CliError> {
    match format {
        OutputFormat::Json => render_json(config, results),
        OutputFormat::Csv => render_csv(results),
    }
}

/// Writes `bytes` to `path`, or to standard output for `-`.
pub fn write_output(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
        return Ok(());
    }
    if let Some(parent) = std::path::Path::new(path).parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

/// Renders and writes the report for `config`.
pub fn emit_report(config: &RunConfig, results: &Results) -> Result<(), CliError> {
    write_output(&config.output_path, &render(config, results, config.output_format)?)
}
