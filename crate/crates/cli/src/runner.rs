//! Mode dispatch. Trial `t` of every mode uses the session streams derived
//! from `(seed, t)`, so results do not depend on the worker count.

use qkd_sift::finite_key::pipeline;
use qkd_sift::protocol::{postprocess, AbortReason};
use qkd_sift::stats::{
    azuma_coverage, build_trace, enumerate_bias, max_round_residual, relation_check, BasisProbabilities,
    CoverageReport, BiasReport,
};
use qkd_sift::{
    make_strategy, run_actual, run_estimation, run_virtual, Error, KeyLengthResult, ProtocolParams, SessionStreams,
    SiftedData, StrategyConfig, TerminationRule, Transcript,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig, SweepAxis, DEFAULT_BIAS_MAX_ROUNDS};
use crate::error::CliError;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "QKD_SIFT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStatus {
    Ok,
    KeyTooShort,
    VerificationFailed,
    NoTestData,
    SecurityParameterError,
}

/// One actual or virtual session and its key-length evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub trial: u64,
    pub rounds: u64,
    pub detected: u64,
    pub n_z: u64,
    pub n_x: u64,
    pub mismatched: u64,
    pub z_errors: u64,
    pub x_errors: u64,
    pub status: KeyStatus,
    pub l: u64,
    pub e_ph_bar: Option<f64>,
    pub eta: Option<f64>,
    pub lambda_ec: Option<u64>,
    pub entropy_term: Option<f64>,
    pub secrecy_term: Option<f64>,
    pub ec_term: Option<f64>,
    pub corr_term: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRow {
    pub trial: u64,
    pub rounds: u64,
    pub detected: u64,
    pub lambda_ph: u64,
    pub sum_p_ph: f64,
    pub lambda_xerr: u64,
    pub sum_p_xerr: f64,
    /// Final martingale values `X_{Ph,N}` and `X_{Xerror,N}`.
    pub x_ph: f64,
    pub x_xerr: f64,
    pub max_increment: f64,
    pub relation_residual: f64,
    pub max_round_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub trial: u64,
    pub n_det_ter: u64,
    pub delta: f64,
    pub n_z: u64,
    pub n_x: u64,
    pub x_errors: u64,
    pub status: KeyStatus,
    pub eta: f64,
    pub e_ph_bar: Option<f64>,
    pub lambda_ec: Option<u64>,
    pub l: u64,
    pub entropy_term: Option<f64>,
    pub secrecy_term: Option<f64>,
    pub ec_term: Option<f64>,
    pub corr_term: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Results {
    Sessions(Vec<SessionRow>),
    Estimation(Vec<EstimationRow>),
    Coverage(CoverageReport),
    Bias(BiasReport),
    Sweep(Vec<SweepRow>),
}

/// Worker count: an explicit flag wins, then `QKD_SIFT_THREADS`, then rayon's
/// default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .map(Some)
            .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (rayon's default if
/// `None`).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn key_outcome(result: qkd_sift::Result<KeyLengthResult>) -> Result<(KeyStatus, Option<KeyLengthResult>), CliError> {
    match result {
        Ok(k) => Ok((if k.l == 0 { KeyStatus::KeyTooShort } else { KeyStatus::Ok }, Some(k))),
        Err(Error::AbortNoTestData) => Ok((KeyStatus::NoTestData, None)),
        Err(Error::SecurityParameterError { .. }) => Ok((KeyStatus::SecurityParameterError, None)),
        Err(e) => Err(e.into()),
    }
}

fn session_row(trial: u64, transcript: &Transcript, sifted: &SiftedData, status: KeyStatus, key: Option<&KeyLengthResult>) -> SessionRow {
    SessionRow {
        trial,
        rounds: transcript.rounds.len() as u64,
        detected: transcript.detected_count(),
        n_z: sifted.n_z,
        n_x: sifted.n_x,
        mismatched: transcript.mismatched_count(),
        z_errors: sifted.z_errors(),
        x_errors: sifted.x_errors(),
        status,
        l: if status == KeyStatus::Ok { key.map_or(0, |k| k.l) } else { 0 },
        e_ph_bar: key.map(|k| k.e_ph_bar),
        eta: key.map(|k| k.eta),
        lambda_ec: key.map(|k| k.lambda_ec),
        entropy_term: key.map(|k| k.terms.entropy_term),
        secrecy_term: key.map(|k| k.terms.secrecy_term),
        ec_term: key.map(|k| k.terms.ec_term),
        corr_term: key.map(|k| k.terms.corr_term),
    }
}

fn actual_trial(params: &ProtocolParams, strategy: &StrategyConfig, seed: u64, trial: u64) -> Result<SessionRow, CliError> {
    let eve = make_strategy(strategy)?;
    let mut streams = SessionStreams::derive(seed, trial);
    let run = run_actual(params, &eve, &mut streams)?;
    let outcome = match postprocess(&run.sifted, params, &mut streams.protocol) {
        Ok(keys) => {
            let status = match keys.abort_reason {
                None => KeyStatus::Ok,
                Some(AbortReason::KeyTooShort) => KeyStatus::KeyTooShort,
                Some(AbortReason::VerificationFailed) => KeyStatus::VerificationFailed,
            };
            (status, Some(keys.key))
        }
        Err(e) => key_outcome(Err(e))?,
    };
    Ok(session_row(trial, &run.transcript, &run.sifted, outcome.0, outcome.1.as_ref()))
}

fn virtual_trial(params: &ProtocolParams, strategy: &StrategyConfig, seed: u64, trial: u64) -> Result<SessionRow, CliError> {
    let eve = make_strategy(strategy)?;
    let run = run_virtual(params, &eve, &mut SessionStreams::derive(seed, trial))?;
    let (status, key) = key_outcome(pipeline(&run.sifted, params))?;
    Ok(session_row(trial, &run.transcript, &run.sifted, status, key.as_ref()))
}

fn estimation_trial(params: &ProtocolParams, strategy: &StrategyConfig, seed: u64, trial: u64) -> Result<EstimationRow, CliError> {
    let eve = make_strategy(strategy)?;
    let run = run_estimation(params, &eve, &mut SessionStreams::derive(seed, trial))?;
    let trace = build_trace(&run)?;
    let n = trace.len();
    Ok(EstimationRow {
        trial,
        rounds: run.transcript.rounds.len() as u64,
        detected: run.n_det(),
        lambda_ph: run.lambda_ph,
        sum_p_ph: trace.p_ph.iter().sum(),
        lambda_xerr: run.lambda_xerr,
        sum_p_xerr: trace.p_xerr.iter().sum(),
        x_ph: trace.x_ph[n],
        x_xerr: trace.x_xerr[n],
        max_increment: trace.max_increment(),
        relation_residual: relation_check(&run),
        max_round_residual: max_round_residual(&run),
    })
}

/// Parameters and strategy at one sweep point.
fn sweep_point(config: &RunConfig, axis: SweepAxis, value: f64) -> Result<(ProtocolParams, StrategyConfig), CliError> {
    let mut params = config.params.clone();
    let mut strategy = config.strategy;
    match axis {
        SweepAxis::NDetTer => {
            let ratio = (config.params.max_rounds / config.params.n_det_ter).max(1);
            params.n_det_ter = value as u64;
            params.max_rounds = params.n_det_ter.saturating_mul(ratio);
        }
        SweepAxis::Delta => params.delta = value,
        SweepAxis::DepolarizingP => match &mut strategy {
            StrategyConfig::Depolarizing { p, .. } => *p = value,
            _ => return Err(CliError::Validation("sweep over depolarizing_p needs a depolarizing strategy".into())),
        },
        SweepAxis::QRatio => {
            if !(value > 0.0) {
                return Err(CliError::Validation(format!("q_ratio {value} must be positive")));
            }
            let r = value.sqrt();
            params = params.with_z_probability(r / (1.0 + r));
        }
    }
    params.validate()?;
    make_strategy(&strategy)?;
    Ok((params, strategy))
}

fn sweep_trial(
    axis: SweepAxis,
    value: f64,
    params: &ProtocolParams,
    strategy: &StrategyConfig,
    seed: u64,
    trial: u64,
) -> Result<SweepRow, CliError> {
    let eve = make_strategy(strategy)?;
    let run = run_actual(params, &eve, &mut SessionStreams::derive(seed, trial))?;
    let (status, key) = key_outcome(pipeline(&run.sifted, params))?;
    let eta = qkd_sift::azuma_tail(params.n_det_ter, params.delta)?.eta;
    let key = key.as_ref();
    Ok(SweepRow {
        axis: axis.to_string(),
        value,
        trial,
        n_det_ter: params.n_det_ter,
        delta: params.delta,
        n_z: run.sifted.n_z,
        n_x: run.sifted.n_x,
        x_errors: run.sifted.x_errors(),
        status,
        eta,
        e_ph_bar: key.map(|k| k.e_ph_bar),
        lambda_ec: key.map(|k| k.lambda_ec),
        l: key.map_or(0, |k| k.l),
        entropy_term: key.map(|k| k.terms.entropy_term),
        secrecy_term: key.map(|k| k.terms.secrecy_term),
        ec_term: key.map(|k| k.terms.ec_term),
        corr_term: key.map(|k| k.terms.corr_term),
    })
}

fn per_trial<T: Send>(trials: u64, f: impl Fn(u64) -> Result<T, CliError> + Sync + Send) -> Result<Vec<T>, CliError> {
    (0..trials).into_par_iter().map(f).collect()
}

/// Runs the configured mode on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<Results, CliError> {
    config.validate()?;
    let (params, strategy, seed) = (&config.params, &config.strategy, config.seed);
    Ok(match config.mode {
        Mode::Actual => Results::Sessions(per_trial(config.trials, |t| actual_trial(params, strategy, seed, t))?),
        Mode::Virtual => Results::Sessions(per_trial(config.trials, |t| virtual_trial(params, strategy, seed, t))?),
        Mode::Estimation => {
            Results::Estimation(per_trial(config.trials, |t| estimation_trial(params, strategy, seed, t))?)
        }
        Mode::Coverage => Results::Coverage(azuma_coverage(params, &make_strategy(strategy)?, config.trials, seed)?),
        Mode::Bias => {
            let rule: TerminationRule = config.termination.expect("validated");
            let p_bases = BasisProbabilities { p_z_a: params.p_z_a, p_z_b: params.p_z_b };
            Results::Bias(enumerate_bias(&rule, p_bases, config.bias_max_rounds.unwrap_or(DEFAULT_BIAS_MAX_ROUNDS))?)
        }
        Mode::KeyrateSweep => {
            let sweep = config.sweep.as_ref().expect("validated");
            let points =
                sweep.values.iter().map(|&v| sweep_point(config, sweep.axis, v).map(|p| (v, p))).collect::<Result<Vec<_>, _>>()?;
            let jobs: Vec<(usize, u64)> =
                (0..points.len()).flat_map(|i| (0..config.trials).map(move |t| (i, t))).collect();
            let rows = jobs
                .into_par_iter()
                .map(|(i, t)| {
                    let (value, (p, s)) = &points[i];
                    sweep_trial(sweep.axis, *value, p, s, seed, t)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Results::Sweep(rows)
        }
    })
}

/// [`execute`] on a pool sized by [`thread_count`].
pub fn run(config: &RunConfig, threads: Option<usize>) -> Result<Results, CliError> {
    with_pool(thread_count(threads)?, || execute(config))?
}
