use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hashing::{tag_bits, PolynomialHash, ToeplitzHash};
use super::params::ProtocolParams;
use super::transcript::{BitString, SiftedData};
use crate::error::{Error, Result};
use crate::finite_key::{pipeline, KeyLengthResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    KeyTooShort,
    VerificationFailed,
}

/// Hash choices of a post-processing run, kept so that it can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashingRecord {
    pub toeplitz_seed: BitString,
    pub poly_modulus: u64,
    pub poly_point: u64,
    /// Pre-shared key bits consumed by error verification.
    pub preshared_bits: u32,
    pub tag_a: u64,
    pub tag_b: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalKeys {
    pub f_az: BitString,
    pub f_bz: BitString,
    pub aborted: bool,
    pub abort_reason: Option<AbortReason>,
    pub lambda_ec: u64,
    pub key: KeyLengthResult,
    pub hashing: Option<HashingRecord>,
}

/// Classical post-processing of one sifted session.
///
/// Error correction is idealized: Bob's Z key is replaced by Alice's and
/// `λ_EC` bits are charged. `Err` is returned when no key length can be
/// computed at all (no test data, or `ε_s² <= η`); a zero key length or a
/// failed verification yields `aborted = true`.
pub fn postprocess<R: Rng + ?Sized>(sifted: &SiftedData, params: &ProtocolParams, rng: &mut R) -> Result<FinalKeys> {
    let key = pipeline(sifted, params)?;
    let corrected_b = sifted.s_az.clone();
    finish(&sifted.s_az, &corrected_b, key, params, rng)
}

pub(crate) fn finish<R: Rng + ?Sized>(
    key_a: &BitString,
    corrected_b: &BitString,
    key: KeyLengthResult,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<FinalKeys> {
    let aborted = |reason, hashing| FinalKeys {
        f_az: BitString::new(),
        f_bz: BitString::new(),
        aborted: true,
        abort_reason: Some(reason),
        lambda_ec: key.lambda_ec,
        key,
        hashing,
    };
    if key.l == 0 {
        return Ok(aborted(AbortReason::KeyTooShort, None));
    }
    let l = key.l as usize;
    if l > key_a.len() {
        return Err(Error::InvalidInput(format!("key length {l} exceeds sifted length {}", key_a.len())));
    }
    let pa = ToeplitzHash::random(key_a.len(), l, rng);
    let f_az = pa.apply(key_a);
    let f_bz = pa.apply(corrected_b);

    let bits = tag_bits(params.eps_c);
    if bits > 60 {
        return Err(Error::InvalidParams(format!("eps_c = {} needs a {bits}-bit tag (max 60)", params.eps_c)));
    }
    let ev = PolynomialHash::random(bits, rng);
    let (tag_a, tag_b) = (ev.tag(&f_az), ev.tag(&f_bz));
    let record = HashingRecord {
        toeplitz_seed: pa.seed().clone(),
        poly_modulus: ev.modulus,
        poly_point: ev.point,
        preshared_bits: bits,
        tag_a,
        tag_b,
    };
    if tag_a != tag_b {
        return Ok(aborted(AbortReason::VerificationFailed, Some(record)));
    }
    Ok(FinalKeys { f_az, f_bz, aborted: false, abort_reason: None, lambda_ec: key.lambda_ec, key, hashing: Some(record) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_key::key_length;
    use crate::quantum::Bit;
    use crate::rng::stream;

    fn random_bits(n: usize, seed: u64) -> BitString {
        let mut rng = stream(seed, 0);
        (0..n).map(|_| Bit::from_bool(rng.random())).collect()
    }

    #[test]
    fn noiseless_sifted_data_yields_matching_keys() {
        let params = ProtocolParams { eps_s: 1e-3, ..ProtocolParams::symmetric(40_000, 0.03) };
        let z = random_bits(10_000, 1);
        let x = random_bits(10_000, 2);
        let sifted = SiftedData { s_az: z.clone(), s_bz: z, s_ax: x.clone(), s_bx: x, n_z: 10_000, n_x: 10_000 };
        let keys = postprocess(&sifted, &params, &mut stream(3, 0)).unwrap();
        assert!(!keys.aborted);
        assert_eq!(keys.f_az, keys.f_bz);
        assert_eq!(keys.f_az.len() as u64, keys.key.l);
        assert_eq!(keys.hashing.as_ref().unwrap().preshared_bits, 35);
    }

    #[test]
    fn half_x_error_rate_aborts_key_too_short() {
        let params = ProtocolParams::symmetric(1000, 0.32);
        let z = random_bits(250, 4);
        let xa = random_bits(250, 5);
        let xb: BitString = xa.bits().iter().enumerate().map(|(i, b)| if i % 2 == 0 { b.flip() } else { *b }).collect();
        let sifted = SiftedData { s_az: z.clone(), s_bz: z, s_ax: xa, s_bx: xb, n_z: 250, n_x: 250 };
        let keys = postprocess(&sifted, &params, &mut stream(0, 0)).unwrap();
        assert!(keys.aborted);
        assert_eq!(keys.abort_reason, Some(AbortReason::KeyTooShort));
    }

    #[test]
    fn verification_catches_residual_errors() {
        let params = ProtocolParams::symmetric(1000, 0.1);
        let key = key_length(2000, 0.0, 1e-10, 1e-21, 0, 1e-10).unwrap();
        let a = random_bits(2000, 6);
        let mut b_bits = a.bits().to_vec();
        b_bits[17] = b_bits[17].flip();
        let b = BitString::from_bits(b_bits);
        let keys = finish(&a, &b, key, &params, &mut stream(7, 0)).unwrap();
        assert!(keys.aborted);
        assert_eq!(keys.abort_reason, Some(AbortReason::VerificationFailed));
    }

    #[test]
    fn missing_test_data_is_an_error() {
        let params = ProtocolParams::symmetric(1000, 0.3);
        let sifted = SiftedData { s_az: random_bits(10, 1), s_bz: random_bits(10, 1), n_z: 10, ..Default::default() };
        assert_eq!(postprocess(&sifted, &params, &mut stream(0, 0)), Err(Error::AbortNoTestData));
    }
}
