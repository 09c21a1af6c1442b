//! Exhaustive enumeration of announcement sequences under a lossless channel.
//!
//! Each round is classified as `K` (both chose Z: a key position), `T` (both
//! chose X: a test position) or `-` (bases differ). Sequences are grown until
//! the termination rule fires or `max_rounds` is reached. For every length
//! `n`, the law of the pattern conditioned on stopping at `n` is compared to
//! the i.i.d. per-round law of length-`n` patterns, which is what a random
//! choice of test positions would give.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::TerminationRule;

/// Largest `max_rounds` accepted; `3^12` sequences is the worst case.
pub const MAX_ENUMERATION_ROUNDS: u32 = 12;

/// Distances below this are reported as zero dependence.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-12;

/// Per-round basis probabilities of Alice and Bob (X gets the complement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisProbabilities {
    pub p_z_a: f64,
    pub p_z_b: f64,
}

impl BasisProbabilities {
    pub fn uniform() -> Self {
        Self { p_z_a: 0.5, p_z_b: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternProbability {
    pub pattern: String,
    pub probability: f64,
    /// Exact rational value, `num/den`.
    pub exact: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthTv {
    pub length: u32,
    pub probability: f64,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub rule: TerminationRule,
    pub p_bases: BasisProbabilities,
    pub n_rounds_enumerated: u32,
    /// Probability of every terminating pattern.
    pub t_distribution: Vec<PatternProbability>,
    /// Mass of sequences still running after `n_rounds_enumerated` rounds.
    pub censored_probability: f64,
    pub tv_by_length: Vec<LengthTv>,
    /// Length-weighted total-variation distance from the i.i.d. pattern law,
    /// conditioned on termination.
    pub tv_from_uniform: f64,
    /// `E[Σ Y_a·1{T at a}]/q_X − E[Σ Y_a·1{K at a}]/q_Z` given termination,
    /// with `Y_a = 1` iff round `a − 1` was a key position.
    pub dependence_statistic: f64,
    pub dependence_detected: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Key,
    Test,
    Mismatch,
}

impl Class {
    fn symbol(self) -> char {
        match self {
            Class::Key => 'K',
            Class::Test => 'T',
            Class::Mismatch => '-',
        }
    }
}

fn rational(x: f64, what: &str) -> Result<BigRational> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParams(format!("{what} = {x} must lie strictly between 0 and 1")));
    }
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParams(format!("{what} = {x} is not finite")))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

struct Leaf {
    pattern: Vec<Class>,
    probability: BigRational,
}

struct Enumerator<'a> {
    rule: &'a TerminationRule,
    max_rounds: usize,
    classes: [(Class, BigRational); 3],
    leaves: Vec<Leaf>,
    censored: BigRational,
}

impl Enumerator<'_> {
    fn terminated(&self, pattern: &[Class]) -> bool {
        match *self.rule {
            TerminationRule::CountDetected { n } => pattern.len() as u64 >= n,
            TerminationRule::CountPerBasis { n_z_req, n_x_req } => {
                let z = pattern.iter().filter(|c| **c == Class::Key).count() as u64;
                let x = pattern.iter().filter(|c| **c == Class::Test).count() as u64;
                z >= n_z_req && x >= n_x_req
            }
        }
    }

    fn walk(&mut self, pattern: &mut Vec<Class>, probability: BigRational) {
        if self.terminated(pattern) {
            self.leaves.push(Leaf { pattern: pattern.clone(), probability });
            return;
        }
        if pattern.len() == self.max_rounds {
            self.censored += probability;
            return;
        }
        for k in 0..3 {
            let (class, p) = (self.classes[k].0, self.classes[k].1.clone());
            pattern.push(class);
            self.walk(pattern, &probability * p);
            pattern.pop();
        }
    }
}

/// Exact distribution of announcement patterns under `rule` for up to
/// `max_rounds` lossless rounds.
pub fn enumerate_bias(rule: &TerminationRule, p_bases: BasisProbabilities, max_rounds: u32) -> Result<BiasReport> {
    rule.validate()?;
    if max_rounds > MAX_ENUMERATION_ROUNDS {
        return Err(Error::EnumerationTooLarge { max_rounds: max_rounds as usize, limit: MAX_ENUMERATION_ROUNDS as usize });
    }
    let one = BigRational::one();
    let p_z_a = rational(p_bases.p_z_a, "p_z_a")?;
    let p_z_b = rational(p_bases.p_z_b, "p_z_b")?;
    let q_z = &p_z_a * &p_z_b;
    let q_x = (&one - &p_z_a) * (&one - &p_z_b);
    let q_mm = &one - &q_z - &q_x;

    let mut e = Enumerator {
        rule,
        max_rounds: max_rounds as usize,
        classes: [(Class::Key, q_z.clone()), (Class::Test, q_x.clone()), (Class::Mismatch, q_mm)],
        leaves: Vec::new(),
        censored: BigRational::zero(),
    };
    e.walk(&mut Vec::with_capacity(max_rounds as usize), one.clone());

    let p_term: BigRational = e.leaves.iter().map(|l| &l.probability).sum();
    if p_term.is_zero() {
        return Err(Error::InvalidParams(format!("no sequence terminates within {max_rounds} rounds")));
    }
    debug_assert_eq!(&p_term + &e.censored, one);

    // TV per length: the conditional law puts leaf / P_n on each stopping
    // pattern; the i.i.d. law puts leaf on it and the rest on patterns that do
    // not stop at n.
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut tv_by_length = Vec::new();
    let mut tv_total = BigRational::zero();
    for n in 1..=max_rounds as usize {
        let at_n: Vec<&Leaf> = e.leaves.iter().filter(|l| l.pattern.len() == n).collect();
        if at_n.is_empty() {
            continue;
        }
        let p_n: BigRational = at_n.iter().map(|l| &l.probability).sum();
        let stopped_gap: BigRational =
            at_n.iter().map(|l| (&l.probability / &p_n - &l.probability).abs()).sum();
        let tv_n = &half * (stopped_gap + (&one - &p_n));
        tv_total += &p_n / &p_term * &tv_n;
        tv_by_length.push(LengthTv { length: n as u32, probability: to_f64(&(&p_n / &p_term)), tv: to_f64(&tv_n) });
    }

    let (mut test_hits, mut key_hits) = (BigRational::zero(), BigRational::zero());
    for leaf in &e.leaves {
        let (mut t, mut k) = (0i64, 0i64);
        for w in leaf.pattern.windows(2) {
            if w[0] == Class::Key {
                t += (w[1] == Class::Test) as i64;
                k += (w[1] == Class::Key) as i64;
            }
        }
        test_hits += &leaf.probability * BigRational::from_integer(t.into());
        key_hits += &leaf.probability * BigRational::from_integer(k.into());
    }
    let dependence = (test_hits / &q_x - key_hits / &q_z) / &p_term;
    let dependence_statistic = to_f64(&dependence);

    let mut t_distribution: Vec<PatternProbability> = e
        .leaves
        .iter()
        .map(|l| PatternProbability {
            pattern: l.pattern.iter().map(|c| c.symbol()).collect(),
            probability: to_f64(&l.probability),
            exact: l.probability.to_string(),
        })
        .collect();
    t_distribution.sort_by(|a, b| (a.pattern.len(), &a.pattern).cmp(&(b.pattern.len(), &b.pattern)));

    Ok(BiasReport {
        rule: *rule,
        p_bases,
        n_rounds_enumerated: max_rounds,
        t_distribution,
        censored_probability: to_f64(&e.censored),
        tv_by_length,
        tv_from_uniform: to_f64(&tv_total),
        dependence_statistic,
        dependence_detected: dependence_statistic.abs() > DEPENDENCE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_count_matches_iid_law() {
        for n in 1..=5 {
            let r = enumerate_bias(&TerminationRule::CountDetected { n }, BasisProbabilities::uniform(), 6).unwrap();
            assert_eq!(r.tv_from_uniform, 0.0);
            assert!(!r.dependence_detected);
            assert_eq!(r.t_distribution.len(), 3usize.pow(n as u32));
            assert_eq!(r.censored_probability, 0.0);
        }
    }

    #[test]
    fn per_basis_quota_at_two_rounds() {
        // Stopping at round 2 requires {K, T} in either order: 2·(1/4)² = 1/8,
        // so TV_2 = 1 − 1/8.
        let r = enumerate_bias(&TerminationRule::CountPerBasis { n_z_req: 1, n_x_req: 1 }, BasisProbabilities::uniform(), 2)
            .unwrap();
        assert_eq!(r.t_distribution.len(), 2);
        assert_eq!(r.t_distribution[0].exact, "1/16");
        assert_eq!(r.tv_by_length[0].tv, 0.875);
        assert_eq!(r.tv_from_uniform, 0.875);
        assert_eq!(r.censored_probability, 0.875);
    }

    #[test]
    fn limits_and_domain() {
        let rule = TerminationRule::CountDetected { n: 2 };
        assert!(matches!(
            enumerate_bias(&rule, BasisProbabilities::uniform(), 13),
            Err(Error::EnumerationTooLarge { max_rounds: 13, limit: 12 })
        ));
        assert!(enumerate_bias(&rule, BasisProbabilities { p_z_a: 1.0, p_z_b: 0.5 }, 4).is_err());
        assert!(enumerate_bias(&TerminationRule::CountDetected { n: 5 }, BasisProbabilities::uniform(), 4).is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let r = enumerate_bias(
            &TerminationRule::CountPerBasis { n_z_req: 2, n_x_req: 1 },
            BasisProbabilities { p_z_a: 0.7, p_z_b: 0.6 },
            7,
        )
        .unwrap();
        let total: f64 = r.t_distribution.iter().map(|p| p.probability).sum::<f64>() + r.censored_probability;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(r.dependence_detected);
    }
}
