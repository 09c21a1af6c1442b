use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_F_EC: f64 = 1.16;
pub const DEFAULT_MAX_ROUNDS_FACTOR: u64 = 1000;
const PROB_SUM_TOL: f64 = 1e-12;

/// Parameters agreed over the public channel before the quantum phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub p_z_a: f64,
    pub p_x_a: f64,
    pub p_z_b: f64,
    pub p_x_b: f64,
    /// Detected-event count that ends the quantum phase.
    pub n_det_ter: u64,
    pub eps_s: f64,
    pub eps_c: f64,
    /// Azuma deviation δ.
    pub delta: f64,
    /// Error-correction inefficiency (≥ 1).
    pub f_ec: f64,
    pub max_rounds: u64,
    /// Pulses in flight before Bob's announcements come back.
    pub batch_size: u64,
    /// Basis-independent detector efficiency.
    pub detector_efficiency: f64,
}

/// [`ProtocolParams`] as written in config files, with optional fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParamsSpec {
    pub p_z_a: f64,
    pub p_x_a: f64,
    pub p_z_b: f64,
    pub p_x_b: f64,
    pub n_det_ter: u64,
    pub eps_s: f64,
    pub eps_c: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_ec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_efficiency: Option<f64>,
}

impl ProtocolParamsSpec {
    /// Fills defaults (`f_ec = 1.16`, `max_rounds = 1000·n_det_ter`, batch 1,
    /// efficiency 1) and validates.
    pub fn resolve(&self) -> Result<ProtocolParams> {
        let params = ProtocolParams {
            p_z_a: self.p_z_a,
            p_x_a: self.p_x_a,
            p_z_b: self.p_z_b,
            p_x_b: self.p_x_b,
            n_det_ter: self.n_det_ter,
            eps_s: self.eps_s,
            eps_c: self.eps_c,
            delta: self.delta,
            f_ec: self.f_ec.unwrap_or(DEFAULT_F_EC),
            max_rounds: self.max_rounds.unwrap_or(self.n_det_ter.saturating_mul(DEFAULT_MAX_ROUNDS_FACTOR)),
            batch_size: self.batch_size.unwrap_or(1),
            detector_efficiency: self.detector_efficiency.unwrap_or(1.0),
        };
        params.validate()?;
        Ok(params)
    }
}

impl From<&ProtocolParams> for ProtocolParamsSpec {
    fn from(p: &ProtocolParams) -> Self {
        Self {
            p_z_a: p.p_z_a,
            p_x_a: p.p_x_a,
            p_z_b: p.p_z_b,
            p_x_b: p.p_x_b,
            n_det_ter: p.n_det_ter,
            eps_s: p.eps_s,
            eps_c: p.eps_c,
            delta: p.delta,
            f_ec: Some(p.f_ec),
            max_rounds: Some(p.max_rounds),
            batch_size: Some(p.batch_size),
            detector_efficiency: Some(p.detector_efficiency),
        }
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

impl ProtocolParams {
    /// Symmetric bases, lossless detector, defaults elsewhere.
    pub fn symmetric(n_det_ter: u64, delta: f64) -> Self {
        ProtocolParamsSpec {
            p_z_a: 0.5,
            p_x_a: 0.5,
            p_z_b: 0.5,
            p_x_b: 0.5,
            n_det_ter,
            eps_s: 1e-10,
            eps_c: 1e-10,
            delta,
            f_ec: None,
            max_rounds: None,
            batch_size: None,
            detector_efficiency: None,
        }
        .resolve()
        .expect("symmetric defaults are valid")
    }

    /// Same parameters with Z-basis probability `p_z` for both parties.
    pub fn with_z_probability(&self, p_z: f64) -> Self {
        Self { p_z_a: p_z, p_x_a: 1.0 - p_z, p_z_b: p_z, p_x_b: 1.0 - p_z, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_z_a", self.p_z_a), ("p_x_a", self.p_x_a), ("p_z_b", self.p_z_b), ("p_x_b", self.p_x_b)] {
            probability(name, p)?;
        }
        if (self.p_z_a + self.p_x_a - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "basis probabilities: p_z_a + p_x_a = {} != 1",
                self.p_z_a + self.p_x_a
            )));
        }
        if (self.p_z_b + self.p_x_b - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "basis probabilities: p_z_b + p_x_b = {} != 1",
                self.p_z_b + self.p_x_b
            )));
        }
        for (name, eps) in [("eps_s", self.eps_s), ("eps_c", self.eps_c)] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {eps} must lie in (0, 1)")));
            }
        }
        if self.n_det_ter < 1 {
            return Err(Error::InvalidParams("n_det_ter must be at least 1".into()));
        }
        if self.max_rounds < self.n_det_ter {
            return Err(Error::InvalidParams(format!(
                "max_rounds = {} is smaller than n_det_ter = {}",
                self.max_rounds, self.n_det_ter
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParams(format!("delta = {} must be a finite non-negative real", self.delta)));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(Error::InvalidParams(format!("f_ec = {} must be >= 1", self.f_ec)));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidParams("batch_size must be at least 1".into()));
        }
        probability("detector_efficiency", self.detector_efficiency)
    }

    /// `q_Z = p_Z^(A) · p_Z^(B)`.
    pub fn q_z(&self) -> f64 {
        self.p_z_a * self.p_z_b
    }

    /// `q_X = p_X^(A) · p_X^(B)`.
    pub fn q_x(&self) -> f64 {
        self.p_x_a * self.p_x_b
    }
}

/// When the quantum phase stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationRule {
    /// Stop after `n` detected rounds, whatever the bases.
    CountDetected { n: u64 },
    /// Stop once both per-basis quotas of basis-agreed rounds are met.
    /// Only accepted by the bias-demonstration entry points.
    CountPerBasis { n_z_req: u64, n_x_req: u64 },
}

impl TerminationRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TerminationRule::CountDetected { n } if n < 1 => {
                Err(Error::InvalidParams("CountDetected needs n >= 1".into()))
            }
            TerminationRule::CountPerBasis { n_z_req, n_x_req } if n_z_req < 1 || n_x_req < 1 => Err(
                Error::InvalidParams(format!("CountPerBasis quotas must be >= 1 (got {n_z_req}, {n_x_req})")),
            ),
            _ => Ok(()),
        }
    }
}
