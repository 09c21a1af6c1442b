use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::EveStrategy;
use crate::error::{Error, Result};
use crate::finite_key::azuma_tail;
use crate::protocol::{run_estimation, EstimationRun, ProtocolParams};
use crate::rng::SessionStreams;

/// End-of-run martingale values of one estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationSummary {
    pub n: u64,
    pub lambda_ph: u64,
    pub sum_p_ph: f64,
    pub lambda_xerr: u64,
    pub sum_p_xerr: f64,
    /// Largest per-round `|p_ph/q_Z − p_xerr/q_X|`.
    pub max_round_residual: f64,
}

impl EstimationSummary {
    pub fn from_run(run: &EstimationRun) -> Self {
        Self {
            n: run.n_det(),
            lambda_ph: run.lambda_ph,
            sum_p_ph: run.per_round.iter().map(|r| r.p_ph).sum(),
            lambda_xerr: run.lambda_xerr,
            sum_p_xerr: run.per_round.iter().map(|r| r.p_xerr).sum(),
            max_round_residual: max_round_residual(run),
        }
    }
}

/// `Σ p_ph / q_Z − Σ p_xerr / q_X`; both sums estimate the same expected
/// number of X-disagreements, so the exact value is zero.
pub fn relation_check(run: &EstimationRun) -> f64 {
    let params = &run.transcript.params;
    let sum_ph: f64 = run.per_round.iter().map(|r| r.p_ph).sum();
    let sum_x: f64 = run.per_round.iter().map(|r| r.p_xerr).sum();
    sum_ph / params.q_z() - sum_x / params.q_x()
}

/// Largest per-round residual `|p_ph/q_Z − p_xerr/q_X|`.
pub fn max_round_residual(run: &EstimationRun) -> f64 {
    let params = &run.transcript.params;
    let (q_z, q_x) = (params.q_z(), params.q_x());
    run.per_round.iter().map(|r| (r.p_ph / q_z - r.p_xerr / q_x).abs()).fold(0.0, f64::max)
}

/// Observed Azuma tail events against the claimed one-tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    pub n: u64,
    pub delta: f64,
    /// Trials with `Λ_Ph − Σ P(Ph) >= N·δ`.
    pub violations_ph: u64,
    /// Trials with `Σ P(Xerr) − Λ_Xerr >= N·δ`.
    pub violations_xerr: u64,
    /// Trials with `|Λ_Ph/q_Z − Λ_Xerr/q_X| > (1/q_Z + 1/q_X)·N·δ`.
    pub violations_relation: u64,
    /// `exp(−N·δ²/2)`.
    pub eta_claimed: f64,
}

impl CoverageReport {
    pub fn frequency_ph(&self) -> f64 {
        self.violations_ph as f64 / self.trials as f64
    }

    pub fn frequency_xerr(&self) -> f64 {
        self.violations_xerr as f64 / self.trials as f64
    }

    pub fn frequency_relation(&self) -> f64 {
        self.violations_relation as f64 / self.trials as f64
    }
}

/// Counts the tail events over precomputed run summaries at deviation `delta`.
pub fn coverage_from_summaries(
    summaries: &[EstimationSummary],
    q_z: f64,
    q_x: f64,
    delta: f64,
) -> Result<CoverageReport> {
    let n = summaries.first().map_or(0, |s| s.n);
    if summaries.is_empty() || summaries.iter().any(|s| s.n != n) {
        return Err(Error::InvalidInput("coverage needs at least one summary, all of the same length".into()));
    }
    let bound = azuma_tail(n, delta)?;
    let nd = n as f64 * delta;
    let mut report = CoverageReport {
        trials: summaries.len() as u64,
        n,
        delta,
        violations_ph: 0,
        violations_xerr: 0,
        violations_relation: 0,
        eta_claimed: bound.eta_single,
    };
    for s in summaries {
        report.violations_ph += (s.lambda_ph as f64 - s.sum_p_ph >= nd) as u64;
        report.violations_xerr += (s.sum_p_xerr - s.lambda_xerr as f64 >= nd) as u64;
        let gap = (s.lambda_ph as f64 / q_z - s.lambda_xerr as f64 / q_x).abs();
        report.violations_relation += (gap > (1.0 / q_z + 1.0 / q_x) * nd) as u64;
    }
    Ok(report)
}

/// Runs `trials` estimation sessions (trial `t` uses the streams derived from
/// `(seed, t)`) and counts Azuma tail events at `params.delta`.
pub fn azuma_coverage(params: &ProtocolParams, strategy: &EveStrategy, trials: u64, seed: u64) -> Result<CoverageReport> {
    if trials < 1 {
        return Err(Error::InvalidParams("coverage needs trials >= 1".into()));
    }
    let summaries = (0..trials)
        .into_par_iter()
        .map(|t| {
            let run = run_estimation(params, strategy, &mut SessionStreams::derive(seed, t))?;
            Ok(EstimationSummary::from_run(&run))
        })
        .collect::<Result<Vec<_>>>()?;
    coverage_from_summaries(&summaries, params.q_z(), params.q_x(), params.delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(lambda_ph: u64, sum_p_ph: f64, lambda_xerr: u64, sum_p_xerr: f64) -> EstimationSummary {
        EstimationSummary { n: 100, lambda_ph, sum_p_ph, lambda_xerr, sum_p_xerr, max_round_residual: 0.0 }
    }

    #[test]
    fn tail_events_use_inclusive_thresholds() {
        // N·δ = 10.
        let s = [summary(20, 10.0, 0, 0.0), summary(19, 10.0, 5, 15.0), summary(0, 0.0, 0, 0.0)];
        let r = coverage_from_summaries(&s, 0.25, 0.25, 0.1).unwrap();
        assert_eq!((r.trials, r.violations_ph, r.violations_xerr), (3, 1, 1));
        assert!((r.eta_claimed - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_counts_every_non_negative_excess() {
        let s = [summary(3, 2.5, 1, 1.0), summary(2, 2.5, 2, 1.0)];
        let r = coverage_from_summaries(&s, 0.25, 0.25, 0.0).unwrap();
        assert_eq!(r.violations_ph, 1);
        assert_eq!(r.violations_xerr, 1);
        assert_eq!(r.eta_claimed, 1.0);
    }

    #[test]
    fn mixed_lengths_are_rejected() {
        let mut b = summary(0, 0.0, 0, 0.0);
        b.n = 3;
        assert!(coverage_from_summaries(&[summary(0, 0.0, 0, 0.0), b], 0.25, 0.25, 0.1).is_err());
        assert!(coverage_from_summaries(&[], 0.25, 0.25, 0.1).is_err());
    }
}
