//! Independent high-precision reference for the finite-key formulas.
//!
//! Inputs are converted exactly from `f64` and every quantity is evaluated
//! in 256-bit binary fixed point: `ln` by the `atanh` series after reduction
//! to `[1, 2)`, `exp` by Taylor expansion after reduction modulo `ln 2`.
//! Nothing here calls into the crate under test.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

const PREC: u64 = 256;

/// A real number stored as `value · 2^PREC`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fx(BigInt);

impl Fx {
    pub fn one() -> Fx {
        Fx(BigInt::one() << PREC)
    }

    pub fn int(i: i64) -> Fx {
        Fx(BigInt::from(i) << PREC)
    }

    pub fn ratio(r: &BigRational) -> Fx {
        Fx((r.numer() << PREC) / r.denom())
    }

    pub fn from_f64(x: f64) -> Fx {
        Fx::ratio(&BigRational::from_float(x).expect("finite input"))
    }

    pub fn to_f64(&self) -> f64 {
        BigRational::new(self.0.clone(), BigInt::one() << PREC).to_f64().unwrap()
    }

    pub fn add(&self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Fx) -> Fx {
        Fx((&self.0 * &o.0) >> PREC)
    }

    pub fn div(&self, o: &Fx) -> Fx {
        Fx((&self.0 << PREC) / &o.0)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn shift(&self, k: i64) -> Fx {
        if k >= 0 {
            Fx(&self.0 << k as u64)
        } else {
            Fx(&self.0 >> (-k) as u64)
        }
    }
}

/// `Σ z^(2j+1)/(2j+1)`, valid for `|z| < 1`.
fn atanh(z: &Fx) -> Fx {
    let z2 = z.mul(z);
    let mut power = z.clone();
    let mut sum = Fx(BigInt::zero());
    let mut j = 0i64;
    loop {
        let term = Fx(&power.0 / BigInt::from(2 * j + 1));
        if term.is_zero() {
            return sum;
        }
        sum = sum.add(&term);
        power = power.mul(&z2);
        j += 1;
    }
}

pub fn ln2() -> Fx {
    atanh(&Fx::one().div(&Fx::int(3))).shift(1)
}

pub fn ln(x: &Fx) -> Fx {
    assert!(x.0.is_positive(), "ln of non-positive value");
    let k = x.0.bits() as i64 - 1 - PREC as i64;
    let m = x.shift(-k);
    let z = m.sub(&Fx::one()).div(&m.add(&Fx::one()));
    atanh(&z).shift(1).add(&Fx(ln2().0 * BigInt::from(k)))
}

pub fn log2(x: &Fx) -> Fx {
    ln(x).div(&ln2())
}

pub fn exp(x: &Fx) -> Fx {
    let (m, k) = exp_parts(x);
    m.shift(k)
}

/// `exp(x) = m · 2^k` with `m` in about `[0.7, 1.5]`, so that tiny results
/// keep full relative precision.
pub fn exp_parts(x: &Fx) -> (Fx, i64) {
    let l2 = ln2();
    let k = x.div(&l2).to_f64().round() as i64;
    let r = x.sub(&Fx(&l2.0 * BigInt::from(k)));
    let mut term = Fx::one();
    let mut sum = Fx::one();
    let mut i = 1i64;
    loop {
        term = Fx(term.mul(&r).0 / BigInt::from(i));
        if term.is_zero() {
            return (sum, k);
        }
        sum = sum.add(&term);
        i += 1;
    }
}

/// `h(x)` in bits.
pub fn binary_entropy(x: &Fx) -> Fx {
    let one = Fx::one();
    if x.is_zero() || *x == one {
        return Fx(BigInt::zero());
    }
    let y = one.sub(x);
    Fx(BigInt::zero()).sub(&x.mul(&log2(x))).sub(&y.mul(&log2(&y)))
}

pub fn azuma_eta_single(n: u64, delta: f64) -> f64 {
    let d = Fx::from_f64(delta);
    let arg = Fx(BigInt::zero()).sub(&Fx(d.mul(&d).0 * BigInt::from(n)).shift(-1));
    let (m, k) = exp_parts(&arg);
    m.to_f64() * 2f64.powi(k as i32)
}

/// Exact rational evaluation of the phase-error bound.
pub fn phase_error_bound(wt: u64, q_z: f64, q_x: f64, n: u64, delta: f64) -> f64 {
    let r = |x: f64| BigRational::from_float(x).unwrap();
    let ratio = r(q_z) / r(q_x);
    let int = |k: u64| BigRational::from_integer(BigInt::from(k));
    let v = &ratio * int(wt) + (&ratio + BigRational::one()) * int(n) * r(delta);
    v.to_f64().unwrap()
}

/// Key length before flooring, and the floored length.
pub fn key_length(n_z: u64, e_ph_bar: f64, eps_s: f64, eta: f64, lambda_ec: u64, eps_c: f64) -> (f64, u64) {
    let half = Fx::one().shift(-1);
    let mut e = Fx::from_f64(e_ph_bar);
    if e.0 > half.0 {
        e = half;
    }
    let es = Fx::from_f64(eps_s);
    let two = Fx::int(2);
    let entropy = Fx(Fx::one().sub(&binary_entropy(&e)).0 * BigInt::from(n_z));
    let secrecy = log2(&two.div(&es.mul(&es).sub(&Fx::from_f64(eta))));
    let corr = log2(&two.div(&Fx::from_f64(eps_c)));
    let raw = entropy.sub(&secrecy).sub(&Fx::int(lambda_ec as i64)).sub(&corr);
    let floored = if e_ph_bar >= 0.5 || !raw.0.is_positive() { 0 } else { (&raw.0 >> PREC).to_u64().unwrap() };
    (raw.to_f64(), floored)
}

/// Relative error with the denominator clamped at 1, since the pre-floor
/// key length can cross zero.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KeyPoint {
    pub n_z: u64,
    pub e: f64,
    pub eps_s: f64,
    pub eta: f64,
    pub lambda_ec: u64,
    pub eps_c: f64,
}

/// 1000 key-length inputs: 10 sifted lengths × 10 phase-error rates × 10
/// security settings.
pub fn key_length_grid() -> Vec<KeyPoint> {
    let n_zs = [1u64, 17, 100, 1000, 4_321, 10_000, 65_536, 250_000, 1_000_000, 9_999_999];
    let es = [0.0, 1e-6, 0.003, 0.0123, 0.05, 0.11, 0.2, 0.333, 0.49, 0.5];
    let sec = [
        (1e-10, 1e-21, 0.0, 1e-10),
        (1e-10, 0.0, 0.01, 1e-10),
        (1e-3, 1e-7, 0.05, 1e-6),
        (1e-5, 9.9e-11, 0.0, 1e-12),
        (0.5, 0.1, 0.2, 0.25),
        (1e-9, 5e-19, 0.11, 1e-15),
        (1e-4, 1e-12, 0.0015, 1e-9),
        (1e-6, 3e-13, 0.3, 1e-3),
        (0.01, 1e-300, 0.02, 0.1),
        (2e-8, 3.999e-16, 0.07, 1e-20),
    ];
    let mut grid = Vec::with_capacity(1000);
    for &n_z in &n_zs {
        for &e in &es {
            for &(eps_s, eta, ec_rate, eps_c) in &sec {
                let lambda_ec = (ec_rate * n_z as f64).ceil() as u64;
                grid.push(KeyPoint { n_z, e, eps_s, eta, lambda_ec, eps_c });
            }
        }
    }
    grid
}

/// 1000 `(n, δ)` pairs with `n·δ²/2` up to about 700.
pub fn azuma_grid() -> Vec<(u64, f64)> {
    let ns = [1u64, 2, 10, 77, 1000, 2000, 10_000, 123_457, 1_000_000, 10_000_000];
    let mut grid = Vec::with_capacity(1000);
    for &n in &ns {
        for i in 0..100 {
            let cap = (1400.0 / n as f64).sqrt().min(1.0);
            grid.push((n, cap * i as f64 / 99.0));
        }
    }
    grid
}

/// 1000 phase-error-bound inputs.
pub fn phase_bound_grid() -> Vec<(u64, f64, f64, u64, f64)> {
    let qs = [(0.25, 0.25), (0.81, 0.01), (0.01, 0.81), (0.49, 0.09), (0.3, 0.2)];
    let ns = [10u64, 1000, 10_000, 123_456, 2_000_000];
    let deltas = [0.0, 1e-4, 0.01, 0.0377, 0.05, 0.1, 0.2, 0.3333, 0.5, 1.0];
    let mut grid = Vec::with_capacity(1000);
    for &(q_z, q_x) in &qs {
        for &n in &ns {
            for &delta in &deltas {
                for frac in [0.0, 0.003, 0.5, 1.0] {
                    grid.push((((n as f64) * frac) as u64, q_z, q_x, n, delta));
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn constants() {
        assert!((ln2().to_f64() - std::f64::consts::LN_2).abs() < 1e-16);
        assert!((exp(&Fx::one()).to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!((log2(&Fx::int(1024)).to_f64() - 10.0).abs() < 1e-15);
    }
}
