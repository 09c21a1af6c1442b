use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::EstimationRun;

/// The two martingales of an estimation run, indexed by detected event.
///
/// `x_*[j] = lambda_*[j] − Σ_{i≤j} p_*[i]`; index 0 is the empty sum. The
/// probability sequences are indexed from round 1, so `p_ph[j-1]` belongs to
/// the j-th detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTrace {
    pub x_ph: Vec<f64>,
    pub x_xerr: Vec<f64>,
    pub lambda_ph: Vec<u64>,
    pub lambda_xerr: Vec<u64>,
    pub p_ph: Vec<f64>,
    pub p_xerr: Vec<f64>,
}

/// `1{event} − p`: exact in floating point for `p ∈ [0, 1]`, and at most 1 in
/// magnitude without rounding slack.
fn increment(event: bool, p: f64) -> f64 {
    if event {
        1.0 - p
    } else {
        -p
    }
}

impl MartingaleTrace {
    /// Number of detected events `N`.
    pub fn len(&self) -> usize {
        self.p_ph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_ph.is_empty()
    }

    /// Increment `X_{Ph,j} − X_{Ph,j−1}` for `j` in `1..=N`.
    pub fn increment_ph(&self, j: usize) -> f64 {
        increment(self.lambda_ph[j] > self.lambda_ph[j - 1], self.p_ph[j - 1])
    }

    pub fn increment_xerr(&self, j: usize) -> f64 {
        increment(self.lambda_xerr[j] > self.lambda_xerr[j - 1], self.p_xerr[j - 1])
    }

    /// Largest `|increment|` over both martingales.
    pub fn max_increment(&self) -> f64 {
        (1..=self.len())
            .map(|j| self.increment_ph(j).abs().max(self.increment_xerr(j).abs()))
            .fold(0.0, f64::max)
    }

    /// Re-checks the structural invariants, including the bounded
    /// difference condition.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let lengths = [self.x_ph.len(), self.x_xerr.len(), self.lambda_ph.len(), self.lambda_xerr.len()];
        if lengths.iter().any(|&l| l != n + 1) || self.p_xerr.len() != n {
            return Err(Error::TraceInconsistent(format!("sequence lengths {lengths:?} for {n} events")));
        }
        if self.x_ph[0] != 0.0 || self.x_xerr[0] != 0.0 || self.lambda_ph[0] != 0 || self.lambda_xerr[0] != 0 {
            return Err(Error::TraceInconsistent("martingale does not start at 0".into()));
        }
        for j in 1..=n {
            for (lam, p) in [(&self.lambda_ph, self.p_ph[j - 1]), (&self.lambda_xerr, self.p_xerr[j - 1])] {
                if lam[j] < lam[j - 1] || lam[j] - lam[j - 1] > 1 {
                    return Err(Error::TraceInconsistent(format!("counter jumps at event {j}")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::TraceInconsistent(format!("probability {p} at event {j}")));
                }
            }
            if self.increment_ph(j).abs() > 1.0 || self.increment_xerr(j).abs() > 1.0 {
                return Err(Error::TraceInconsistent(format!("bounded difference violated at event {j}")));
            }
        }
        Ok(())
    }
}

/// Assembles the martingale sequences from the per-round records of `run`.
pub fn build_trace(run: &EstimationRun) -> Result<MartingaleTrace> {
    let n = run.per_round.len();
    if n as u64 != run.transcript.params.n_det_ter {
        return Err(Error::TraceInconsistent(format!(
            "{n} recorded detections, expected {}",
            run.transcript.params.n_det_ter
        )));
    }
    let mut trace = MartingaleTrace {
        x_ph: Vec::with_capacity(n + 1),
        x_xerr: Vec::with_capacity(n + 1),
        lambda_ph: Vec::with_capacity(n + 1),
        lambda_xerr: Vec::with_capacity(n + 1),
        p_ph: Vec::with_capacity(n),
        p_xerr: Vec::with_capacity(n),
    };
    let (mut lam_ph, mut lam_x, mut sum_ph, mut sum_x) = (0u64, 0u64, 0.0f64, 0.0f64);
    trace.x_ph.push(0.0);
    trace.x_xerr.push(0.0);
    trace.lambda_ph.push(0);
    trace.lambda_xerr.push(0);
    for r in &run.per_round {
        lam_ph += r.is_phase_error() as u64;
        lam_x += r.is_x_error() as u64;
        sum_ph += r.p_ph;
        sum_x += r.p_xerr;
        trace.lambda_ph.push(lam_ph);
        trace.lambda_xerr.push(lam_x);
        trace.p_ph.push(r.p_ph);
        trace.p_xerr.push(r.p_xerr);
        trace.x_ph.push(lam_ph as f64 - sum_ph);
        trace.x_xerr.push(lam_x as f64 - sum_x);
    }
    if lam_ph != run.lambda_ph || lam_x != run.lambda_xerr {
        return Err(Error::TraceInconsistent(format!(
            "recount ({lam_ph}, {lam_x}) differs from stored ({}, {})",
            run.lambda_ph, run.lambda_xerr
        )));
    }
    trace.validate()?;
    Ok(trace)
}

/// Mean and standard error of the increments at one event index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundDrift {
    pub mean_ph: f64,
    pub stderr_ph: f64,
    pub mean_xerr: f64,
    pub stderr_xerr: f64,
}

impl RoundDrift {
    /// Both means within `k` standard errors of zero.
    pub fn within(&self, k: f64) -> bool {
        self.mean_ph.abs() <= k * self.stderr_ph && self.mean_xerr.abs() <= k * self.stderr_xerr
    }
}

/// Per-event increment statistics over many traces of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub traces: u64,
    pub rounds: Vec<RoundDrift>,
}

impl DriftSummary {
    /// Fraction of event indices whose means are within `k` standard errors.
    pub fn fraction_within(&self, k: f64) -> f64 {
        if self.rounds.is_empty() {
            return 1.0;
        }
        self.rounds.iter().filter(|r| r.within(k)).count() as f64 / self.rounds.len() as f64
    }
}

/// Streaming sums behind [`martingale_drift`]; traces can be folded in one at
/// a time and partial accumulators merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DriftAccumulator {
    count: u64,
    sum_ph: Vec<f64>,
    sq_ph: Vec<f64>,
    sum_xerr: Vec<f64>,
    sq_xerr: Vec<f64>,
}

impl DriftAccumulator {
    pub fn new(n: usize) -> Self {
        Self { count: 0, sum_ph: vec![0.0; n], sq_ph: vec![0.0; n], sum_xerr: vec![0.0; n], sq_xerr: vec![0.0; n] }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, trace: &MartingaleTrace) -> Result<()> {
        if trace.len() != self.sum_ph.len() {
            return Err(Error::InvalidInput(format!(
                "trace of {} events in a drift over {} events",
                trace.len(),
                self.sum_ph.len()
            )));
        }
        for j in 1..=trace.len() {
            let (dp, dx) = (trace.increment_ph(j), trace.increment_xerr(j));
            self.sum_ph[j - 1] += dp;
            self.sq_ph[j - 1] += dp * dp;
            self.sum_xerr[j - 1] += dx;
            self.sq_xerr[j - 1] += dx * dx;
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &DriftAccumulator) -> Result<()> {
        if other.sum_ph.len() != self.sum_ph.len() {
            return Err(Error::InvalidInput("merging drift accumulators of different lengths".into()));
        }
        let pairs = [
            (&mut self.sum_ph, &other.sum_ph),
            (&mut self.sq_ph, &other.sq_ph),
            (&mut self.sum_xerr, &other.sum_xerr),
            (&mut self.sq_xerr, &other.sq_xerr),
        ];
        for (mine, theirs) in pairs {
            mine.iter_mut().zip(theirs).for_each(|(a, b)| *a += b);
        }
        self.count += other.count;
        Ok(())
    }

    pub fn finish(&self) -> DriftSummary {
        let n = self.count as f64;
        let stats = |sum: f64, sq: f64| {
            if self.count < 2 {
                return (sum / n.max(1.0), f64::INFINITY);
            }
            let mean = sum / n;
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (mean, (var / n).sqrt())
        };
        let rounds = (0..self.sum_ph.len())
            .map(|j| {
                let (mean_ph, stderr_ph) = stats(self.sum_ph[j], self.sq_ph[j]);
                let (mean_xerr, stderr_xerr) = stats(self.sum_xerr[j], self.sq_xerr[j]);
                RoundDrift { mean_ph, stderr_ph, mean_xerr, stderr_xerr }
            })
            .collect();
        DriftSummary { traces: self.count, rounds }
    }
}

/// Per-event mean increments across `traces`; the martingale property
/// predicts zero at every index.
pub fn martingale_drift(traces: &[MartingaleTrace]) -> Result<DriftSummary> {
    let n = traces.first().map_or(0, MartingaleTrace::len);
    let mut acc = DriftAccumulator::new(n);
    for t in traces {
        acc.push(t)?;
    }
    Ok(acc.finish())
}
