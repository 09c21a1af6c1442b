//! The `verify` subcommand: a desk-scale run of the invariant suite.

use std::collections::BTreeMap;

use qkd_sift::adversary::BasisPolicy;
use qkd_sift::finite_key::delta_for_eta_single;
use qkd_sift::stats::{
    build_trace, coverage_from_summaries, enumerate_bias, two_sample_chi_square, BasisProbabilities, DriftAccumulator,
    EstimationSummary,
};
use qkd_sift::{
    azuma_tail, key_length, make_strategy, phase_error_bound, run_actual, run_estimation, run_virtual, Error,
    ProtocolParams, SessionStreams, StrategyConfig, TerminationRule,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_config, OutputFormat};
use crate::error::CliError;
use crate::report::render;
use crate::runner::execute;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Sizes of the randomized checks.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub equivalence_trials: u64,
    pub estimation_trials: u64,
    pub estimation_rounds: u64,
    pub calibration_rounds: u64,
}

impl Default for Scale {
    fn default() -> Self {
        Self { equivalence_trials: 2000, estimation_trials: 1000, estimation_rounds: 200, calibration_rounds: 20_000 }
    }
}

/// The four built-in strategies exercised by every randomized check.
pub fn builtin_strategies() -> Vec<StrategyConfig> {
    vec![
        StrategyConfig::IdentityLossy { p_loss: 0.3 },
        StrategyConfig::Depolarizing { p: 0.1, p_loss: 0.2 },
        StrategyConfig::InterceptResend { basis_policy: BasisPolicy::Random(0.5) },
        StrategyConfig::AdaptiveBasisTracker { window: 8, bias_gain: 1.0 },
    ]
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn formulas() -> Result<CheckResult, CliError> {
    let l = key_length(1000, 0.0, 1e-10, 1e-21, 0, 1e-10)?.l;
    let eta = azuma_tail(1000, 0.1)?.eta_single;
    let bound = phase_error_bound(30, 0.81, 0.01, 10_000, 0.01)?;
    let guarded = matches!(key_length(1000, 0.0, 1e-10, 1.01e-20, 0, 1e-10), Err(Error::SecurityParameterError { .. }));
    let passed = l == 898 && (eta / (-5f64).exp() - 1.0).abs() < 1e-14 && (bound - 10630.0).abs() < 1e-9 && guarded;
    Ok(check("formula_reference_values", passed, format!("l={l} eta_single={eta:e} bound={bound}")))
}

type Histogram = BTreeMap<(u64, u64, u64), u64>;

fn equivalence(scale: Scale, seed: u64) -> Result<CheckResult, CliError> {
    let params = ProtocolParams::symmetric(2, 0.1).with_z_probability(0.8);
    let mut details = Vec::new();
    let mut passed = true;
    for (k, cfg) in builtin_strategies().iter().enumerate() {
        let eve = make_strategy(cfg)?;
        let key = |n_z, n_x, wt| (n_z, n_x, wt);
        let (actual, virt): (Vec<_>, Vec<_>) = (0..scale.equivalence_trials)
            .into_par_iter()
            .map(|t| {
                let a = run_actual(&params, &eve, &mut SessionStreams::derive(seed ^ (2 * k as u64), t))?;
                let v = run_virtual(&params, &eve, &mut SessionStreams::derive(seed ^ (2 * k as u64 + 1), t))?;
                Ok((
                    key(a.sifted.n_z, a.sifted.n_x, a.sifted.x_errors()),
                    key(v.sifted.n_z, v.sifted.n_x, v.sifted.x_errors()),
                ))
            })
            .collect::<Result<Vec<_>, Error>>()?
            .into_iter()
            .unzip();
        let hist = |xs: Vec<(u64, u64, u64)>| {
            let mut h = Histogram::new();
            xs.into_iter().for_each(|x| *h.entry(x).or_insert(0) += 1);
            h
        };
        let r = two_sample_chi_square(&hist(actual), &hist(virt))?;
        passed &= r.p_value >= 0.01;
        details.push(format!("{}: p={:.3}", cfg.label(), r.p_value));
    }
    Ok(check("actual_virtual_equivalence", passed, details.join("; ")))
}

/// Every estimation-based check, from one batch of runs per strategy.
fn estimation_checks(scale: Scale, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let n = scale.estimation_rounds;
    let eta_single = 1e-2;
    let delta = delta_for_eta_single(n, eta_single);
    let params = ProtocolParams::symmetric(n, delta);
    let (mut structure, mut drift_ok, mut coverage_ok, mut relation_ok) = (true, true, true, true);
    let mut notes = (Vec::new(), Vec::new(), Vec::new());
    let mut worst_residual = 0f64;
    for (k, cfg) in builtin_strategies().iter().enumerate() {
        let eve = make_strategy(cfg)?;
        let (acc, summaries) = (0..scale.estimation_trials)
            .into_par_iter()
            .map(|t| {
                let run = run_estimation(&params, &eve, &mut SessionStreams::derive(seed.wrapping_add(k as u64), t))?;
                let trace = build_trace(&run)?;
                let ok = trace.x_ph[0] == 0.0 && trace.x_xerr[0] == 0.0 && trace.x_ph.len() as u64 == n + 1;
                let mut acc = DriftAccumulator::new(n as usize);
                acc.push(&trace)?;
                Ok((acc, vec![(ok && trace.max_increment() <= 1.0, EstimationSummary::from_run(&run))]))
            })
            .try_reduce(
                || (DriftAccumulator::new(n as usize), Vec::new()),
                |(mut a, mut sa), (b, sb)| {
                    a.merge(&b)?;
                    sa.extend(sb);
                    Ok((a, sa))
                },
            )
            .map_err(|e: Error| CliError::from(e))?;
        structure &= summaries.iter().all(|(ok, _)| *ok);
        let summaries: Vec<EstimationSummary> = summaries.into_iter().map(|(_, s)| s).collect();
        let frac = acc.finish().fraction_within(4.0);
        drift_ok &= frac >= 0.99;
        notes.0.push(format!("{}: {:.4}", cfg.label(), frac));
        let cov = coverage_from_summaries(&summaries, params.q_z(), params.q_x(), delta)?;
        let trials = cov.trials as f64;
        let limit = eta_single + 4.0 * (eta_single / trials).sqrt() + 10.0 / trials;
        coverage_ok &= cov.frequency_ph() <= limit && cov.frequency_xerr() <= limit;
        notes.1.push(format!("{}: {:.4}/{:.4} <= {:.4}", cfg.label(), cov.frequency_ph(), cov.frequency_xerr(), limit));
        worst_residual = summaries.iter().map(|s| s.max_round_residual).fold(worst_residual, f64::max);
        relation_ok &= cov.frequency_relation() <= 2.0 * limit;
        notes.2.push(format!("{}: {:.4}", cfg.label(), cov.frequency_relation()));
    }
    relation_ok &= worst_residual < 1e-12;
    Ok(vec![
        check("martingale_structure", structure, format!("{} traces per strategy", scale.estimation_trials)),
        check("martingale_drift", drift_ok, notes.0.join("; ")),
        check("azuma_coverage", coverage_ok, notes.1.join("; ")),
        check("phase_error_relation", relation_ok, format!("max per-round residual {worst_residual:e}; {}", notes.2.join("; "))),
    ])
}

fn bias() -> Result<CheckResult, CliError> {
    let uniform = BasisProbabilities::uniform();
    let per_basis = enumerate_bias(&TerminationRule::CountPerBasis { n_z_req: 1, n_x_req: 1 }, uniform, 6)?;
    let mut worst_fixed = 0f64;
    for n in 1..=6 {
        worst_fixed = worst_fixed.max(enumerate_bias(&TerminationRule::CountDetected { n }, uniform, 6)?.tv_from_uniform);
    }
    let passed = per_basis.tv_from_uniform > 1e-9 && worst_fixed <= 1e-12;
    Ok(check(
        "sampling_bias",
        passed,
        format!("count_per_basis(1,1) tv={:.6}; count_detected max tv={worst_fixed:e}", per_basis.tv_from_uniform),
    ))
}

fn calibration(scale: Scale, seed: u64) -> Result<CheckResult, CliError> {
    let p = 0.1;
    let n = scale.calibration_rounds;
    let params = ProtocolParams::symmetric(n, 0.05);
    let eve = make_strategy(&StrategyConfig::Depolarizing { p, p_loss: 0.2 })?;
    let actual = run_actual(&params, &eve, &mut SessionStreams::derive(seed, 0))?;
    let est = run_estimation(&params, &eve, &mut SessionStreams::derive(seed, 1))?;
    let (k, m) = (actual.sifted.x_errors(), actual.sifted.n_x);
    let rate = k as f64 / m as f64;
    let sigma = (p / 2.0 * (1.0 - p / 2.0) / m as f64).sqrt();
    let max_dev = est.per_round.iter().map(|r| (r.p_ph / params.q_z() - p / 2.0).abs()).fold(0.0, f64::max);
    let passed = (rate - p / 2.0).abs() <= 4.0 * sigma && max_dev < 1e-12;
    Ok(check("channel_calibration", passed, format!("x error rate {rate:.5} over {m}; max |p_ph/q_Z - p/2| = {max_dev:e}")))
}

const DETERMINISM_CONFIG: &str = r#"{
    "mode": "estimation",
    "params": {"p_z_a": 0.7, "p_x_a": 0.3, "p_z_b": 0.6, "p_x_b": 0.4,
               "n_det_ter": 60, "eps_s": 1e-10, "eps_c": 1e-10, "delta": 0.2},
    "strategy": {"kind": "adaptive_basis_tracker", "window": 5, "bias_gain": 0.9},
    "trials": 24
}"#;

fn determinism(seed: u64) -> Result<CheckResult, CliError> {
    let mut config = parse_config(DETERMINISM_CONFIG, "builtin")?;
    config.seed = seed;
    let mut outputs = Vec::new();
    for threads in [1, 2, 8] {
        let results = crate::runner::with_pool(Some(threads), || execute(&config))??;
        outputs.push(render(&config, &results, OutputFormat::Json)?);
    }
    let passed = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(check("determinism", passed, format!("{} bytes with 1, 2 and 8 threads", outputs[0].len())))
}

/// Runs every check; the result is `Err` only if a check could not run.
pub fn verify_all(scale: Scale, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let mut results = vec![formulas()?, equivalence(scale, seed)?];
    results.extend(estimation_checks(scale, seed)?);
    results.push(bias()?);
    results.push(calibration(scale, seed)?);
    results.push(determinism(seed)?);
    Ok(results)
}
