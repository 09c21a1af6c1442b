//! Closed-form finite-key quantities.
//!
//! The phase-error count among the Z-agreed detections is bounded through
//! two Azuma tails on martingales of length `N = n_det_ter`:
//!
//! ```text
//! Λ̄_Ph = (q_Z/q_X)·wt(s_AX ⊕ s_BX) + (q_Z/q_X + 1)·N·δ,   η = 2·exp(−N·δ²/2)
//! ```
//!
//! and the key length is
//!
//! ```text
//! l = ⌊ N_Z·(1 − h(ē_ph)) − log2(2/(ε_s² − η)) − λ_EC − log2(2/ε_c) ⌋₊,   ē_ph = Λ̄_Ph / N_Z
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{ProtocolParams, SiftedData};

/// Binary entropy `h(x)` in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!("binary entropy argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzumaBound {
    pub n: u64,
    pub delta: f64,
    /// `exp(−n·δ²/2)`, one tail.
    pub eta_single: f64,
    /// `2·exp(−n·δ²/2)`, both tails.
    pub eta: f64,
}

pub fn azuma_tail(n: u64, delta: f64) -> Result<AzumaBound> {
    if n < 1 {
        return Err(Error::DomainError("Azuma bound needs n >= 1".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::DomainError(format!("Azuma deviation {delta} must be >= 0")));
    }
    let eta_single = (-(n as f64) * delta * delta / 2.0).exp();
    Ok(AzumaBound { n, delta, eta_single, eta: 2.0 * eta_single })
}

/// Smallest δ with `exp(−n·δ²/2) <= eta_single`.
pub fn delta_for_eta_single(n: u64, eta_single: f64) -> f64 {
    (2.0 * (1.0 / eta_single).ln() / n as f64).sqrt()
}

/// Upper bound `Λ̄_Ph` on the number of phase errors.
pub fn phase_error_bound(wt_x: u64, q_z: f64, q_x: f64, n: u64, delta: f64) -> Result<f64> {
    if !(q_x > 0.0) {
        return Err(Error::DomainError(format!("q_x = {q_x} must be positive")));
    }
    if wt_x > n {
        return Err(Error::DomainError(format!("wt_x = {wt_x} exceeds n = {n}")));
    }
    let ratio = q_z / q_x;
    Ok(ratio * wt_x as f64 + (ratio + 1.0) * n as f64 * delta)
}

/// Individual terms of the key-length formula, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyLengthTerms {
    /// `N_Z·(1 − h(ē_ph))`
    pub entropy_term: f64,
    /// `log2(2/(ε_s² − η))`
    pub secrecy_term: f64,
    /// `λ_EC`
    pub ec_term: f64,
    /// `log2(2/ε_c)`
    pub corr_term: f64,
}

impl KeyLengthTerms {
    /// Value before flooring and clamping at zero.
    pub fn raw(&self) -> f64 {
        self.entropy_term - self.secrecy_term - self.ec_term - self.corr_term
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyLengthResult {
    pub n_z: u64,
    /// Phase-error rate bound, clamped to `[0, 1/2]`.
    pub e_ph_bar: f64,
    pub eta: f64,
    pub lambda_ec: u64,
    pub l: u64,
    pub terms: KeyLengthTerms,
}

pub fn key_length(n_z: u64, e_ph_bar: f64, eps_s: f64, eta: f64, lambda_ec: u64, eps_c: f64) -> Result<KeyLengthResult> {
    if !(e_ph_bar >= 0.0) {
        return Err(Error::DomainError(format!("phase error bound {e_ph_bar} must be >= 0")));
    }
    if !(eps_c > 0.0 && eps_c < 1.0) {
        return Err(Error::DomainError(format!("eps_c = {eps_c} must lie in (0, 1)")));
    }
    let eps_s_sq = eps_s * eps_s;
    if eps_s_sq <= eta {
        return Err(Error::SecurityParameterError { eps_s_sq, eta });
    }
    let e = e_ph_bar.min(0.5);
    let terms = KeyLengthTerms {
        entropy_term: n_z as f64 * (1.0 - binary_entropy(e)?),
        secrecy_term: (2.0 / (eps_s_sq - eta)).log2(),
        ec_term: lambda_ec as f64,
        corr_term: (2.0 / eps_c).log2(),
    };
    let raw = terms.raw();
    let l = if e_ph_bar >= 0.5 || raw <= 0.0 { 0 } else { raw.floor() as u64 };
    Ok(KeyLengthResult { n_z, e_ph_bar: e, eta, lambda_ec, l, terms })
}

/// Syndrome cost of the idealized error correction: `⌈f_EC · n_z · h(e_obs)⌉`.
pub fn ec_cost(f_ec: f64, n_z: u64, observed_error_rate: f64) -> Result<u64> {
    Ok((f_ec * n_z as f64 * binary_entropy(observed_error_rate)?).ceil() as u64)
}

/// Key length from sifted data: Azuma phase-error bound, error-correction
/// cost from the observed X error rate, then [`key_length`].
pub fn pipeline(sifted: &SiftedData, params: &ProtocolParams) -> Result<KeyLengthResult> {
    if sifted.n_x == 0 {
        return Err(Error::AbortNoTestData);
    }
    let n = params.n_det_ter;
    let wt = sifted.x_errors();
    let lambda_bar = phase_error_bound(wt, params.q_z(), params.q_x(), n, params.delta)?;
    let e_ph_bar = if sifted.n_z == 0 { 0.5 } else { (lambda_bar / sifted.n_z as f64).min(0.5) };
    let bound = azuma_tail(n, params.delta)?;
    let lambda_ec = ec_cost(params.f_ec, sifted.n_z, wt as f64 / sifted.n_x as f64)?;
    key_length(sifted.n_z, e_ph_bar, params.eps_s, bound.eta, lambda_ec, params.eps_c)
}
