//! Run configuration files.
//!
//! A config is a JSON object; see `docs/config-schema.md` for the field
//! reference. Loading resolves parameter defaults, so emitting a loaded
//! config writes every field explicitly and loads back to an equal value.

use std::fmt;
use std::path::Path;

use qkd_sift::protocol::ProtocolParamsSpec;
use qkd_sift::{make_strategy, ProtocolParams, StrategyConfig, TerminationRule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Versioned tag for config files.
pub const CONFIG_SCHEMA: &str = "qkd-sift/config/v1";

/// Enumeration depth used by `bias` mode when the config leaves it out.
pub const DEFAULT_BIAS_MAX_ROUNDS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Actual,
    Virtual,
    Estimation,
    Coverage,
    Bias,
    KeyrateSweep,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Actual => "actual",
            Mode::Virtual => "virtual",
            Mode::Estimation => "estimation",
            Mode::Coverage => "coverage",
            Mode::Bias => "bias",
            Mode::KeyrateSweep => "keyrate-sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NDetTer,
    Delta,
    /// Requires a `depolarizing` strategy.
    DepolarizingP,
    /// `q_Z/q_X` with symmetric bases, so `p_Z = √r/(1+√r)` for both parties.
    QRatio,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::NDetTer => "n_det_ter",
            SweepAxis::Delta => "delta",
            SweepAxis::DepolarizingP => "depolarizing_p",
            SweepAxis::QRatio => "q_ratio",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Validation("sweep.values must be non-empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CliError::Validation("sweep.values must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation("sweep.values must be finite".into()));
        }
        if self.axis == SweepAxis::NDetTer && self.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
            return Err(CliError::Validation("sweep over n_det_ter needs positive integer values".into()));
        }
        Ok(())
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: String,
    pub mode: Mode,
    pub params: ProtocolParams,
    pub strategy: StrategyConfig,
    pub trials: u64,
    pub seed: u64,
    /// `-` writes to standard output.
    pub output_path: String,
    pub output_format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_max_rounds: Option<u32>,
}

/// The on-disk form, with optional fields.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    schema: Option<String>,
    mode: Mode,
    params: ProtocolParamsSpec,
    strategy: StrategyConfig,
    #[serde(default = "one")]
    trials: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_path: Option<String>,
    #[serde(default)]
    output_format: OutputFormat,
    #[serde(default)]
    termination: Option<TerminationRule>,
    #[serde(default)]
    sweep: Option<SweepSpec>,
    #[serde(default)]
    bias_max_rounds: Option<u32>,
}

fn one() -> u64 {
    1
}

impl RunConfig {
    /// Checks every invariant, including the nested parameter and strategy
    /// ones and the mode-specific requirements.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(CliError::Validation(format!("schema {:?} is not {CONFIG_SCHEMA:?}", self.schema)));
        }
        self.params.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        make_strategy(&self.strategy).map_err(|e| CliError::Validation(e.to_string()))?;
        if self.trials < 1 {
            return Err(CliError::Validation("trials must be >= 1".into()));
        }
        if let Some(rule) = &self.termination {
            rule.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        }
        match self.mode {
            Mode::Bias if self.termination.is_none() => {
                return Err(CliError::Validation("mode bias requires a termination rule".into()));
            }
            Mode::KeyrateSweep => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("mode keyrate-sweep requires a sweep".into()))?;
                sweep.validate()?;
                if sweep.axis == SweepAxis::DepolarizingP && !matches!(self.strategy, StrategyConfig::Depolarizing { .. }) {
                    return Err(CliError::Validation("sweep over depolarizing_p needs a depolarizing strategy".into()));
                }
            }
            _ => {}
        }
        if !matches!(self.mode, Mode::Bias) {
            if let Some(TerminationRule::CountPerBasis { .. }) = self.termination {
                return Err(CliError::Validation("count_per_basis termination is only accepted in bias mode".into()));
            }
        }
        Ok(())
    }
}

/// Parses and validates config text. `origin` names the source in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let params = raw.params.resolve().map_err(|e| CliError::Validation(e.to_string()))?;
    let config = RunConfig {
        schema: raw.schema.unwrap_or_else(|| CONFIG_SCHEMA.to_string()),
        mode: raw.mode,
        params,
        strategy: raw.strategy,
        trials: raw.trials,
        seed: raw.seed,
        output_path: raw.output_path.unwrap_or_else(|| "-".to_string()),
        output_format: raw.output_format,
        termination: raw.termination,
        sweep: raw.sweep,
        bias_max_rounds: raw.bias_max_rounds,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Pretty JSON with every field spelled out.
pub fn emit_config(config: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serializes");
    s.push('\n');
    s
}
