//! Eve: per-round channels chosen from the public transcript prefix.
//!
//! A strategy sees only the announcements of earlier rounds and its own
//! random stream, so every attack here is classically adaptive across rounds
//! while acting independently on each pulse.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::TranscriptPrefix;
use crate::quantum::{Basis, Bit, ChannelOp, Mat2};

/// Behaviour of an eavesdropper.
///
/// Implementations must be deterministic given `(prefix, rng state)`.
pub trait Adversary: Send + Sync + fmt::Debug {
    fn next_action(&self, prefix: TranscriptPrefix<'_>, rng: &mut dyn RngCore) -> ChannelOp;
}

/// A labelled adversary; cheap to clone and share between sessions.
#[derive(Debug, Clone)]
pub struct EveStrategy {
    label: String,
    behavior: Arc<dyn Adversary>,
}

impl EveStrategy {
    pub fn new(label: impl Into<String>, behavior: Arc<dyn Adversary>) -> Self {
        Self { label: label.into(), behavior }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Channel for the round following `prefix`.
    pub fn next_action(&self, prefix: TranscriptPrefix<'_>, rng: &mut dyn RngCore) -> ChannelOp {
        self.behavior.next_action(prefix, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisPolicy {
    AlwaysZ,
    AlwaysX,
    /// Z with probability `q`, X otherwise, drawn fresh each round.
    Random(f64),
}

/// Built-in attacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    IdentityLossy { p_loss: f64 },
    Depolarizing { p: f64, p_loss: f64 },
    InterceptResend { basis_policy: BasisPolicy },
    AdaptiveBasisTracker { window: usize, bias_gain: f64 },
}

impl StrategyConfig {
    pub fn label(&self) -> String {
        match self {
            StrategyConfig::IdentityLossy { p_loss } => format!("identity_lossy(p_loss={p_loss})"),
            StrategyConfig::Depolarizing { p, p_loss } => format!("depolarizing(p={p},p_loss={p_loss})"),
            StrategyConfig::InterceptResend { basis_policy } => match basis_policy {
                BasisPolicy::AlwaysZ => "intercept_resend(Z)".to_string(),
                BasisPolicy::AlwaysX => "intercept_resend(X)".to_string(),
                BasisPolicy::Random(q) => format!("intercept_resend(random q={q})"),
            },
            StrategyConfig::AdaptiveBasisTracker { window, bias_gain } => {
                format!("adaptive_basis_tracker(window={window},gain={bias_gain})")
            }
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ConfigError(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Kraus operators `{√(1−p)·I, √(p/4)·I, √(p/4)·X, √(p/4)·Y, √(p/4)·Z}`.
pub fn depolarizing_kraus(p: f64) -> Vec<Mat2> {
    let w = (p / 4.0).sqrt();
    vec![
        Mat2::identity().scale((1.0 - p).sqrt()),
        Mat2::identity().scale(w),
        Mat2::pauli_x().scale(w),
        Mat2::pauli_y().scale(w),
        Mat2::pauli_z().scale(w),
    ]
}

/// Measure in `basis`, resend the eigenstate that was found.
pub fn intercept_resend_op(basis: Basis) -> ChannelOp {
    ChannelOp::new(vec![basis.projector(Bit::Zero), basis.projector(Bit::One)], vec![])
        .expect("projective measure-and-resend is trace preserving")
}

pub fn make_strategy(cfg: &StrategyConfig) -> Result<EveStrategy> {
    let behavior: Arc<dyn Adversary> = match *cfg {
        StrategyConfig::IdentityLossy { p_loss } => {
            check_probability("p_loss", p_loss)?;
            Arc::new(Fixed(ChannelOp::with_loss(&[Mat2::identity()], p_loss)?))
        }
        StrategyConfig::Depolarizing { p, p_loss } => {
            check_probability("p", p)?;
            check_probability("p_loss", p_loss)?;
            Arc::new(Fixed(ChannelOp::with_loss(&depolarizing_kraus(p), p_loss)?))
        }
        StrategyConfig::InterceptResend { basis_policy } => {
            if let BasisPolicy::Random(q) = basis_policy {
                check_probability("q", q)?;
            }
            Arc::new(InterceptResend {
                policy: basis_policy,
                z: intercept_resend_op(Basis::Z),
                x: intercept_resend_op(Basis::X),
            })
        }
        StrategyConfig::AdaptiveBasisTracker { window, bias_gain } => {
            if window < 1 {
                return Err(Error::ConfigError("tracker window must be at least 1".into()));
            }
            if !(bias_gain >= 0.0 && bias_gain.is_finite()) {
                return Err(Error::ConfigError(format!("bias_gain = {bias_gain} must be finite and >= 0")));
            }
            Arc::new(BasisTracker {
                window,
                bias_gain,
                identity: ChannelOp::identity(),
                z: intercept_resend_op(Basis::Z),
                x: intercept_resend_op(Basis::X),
            })
        }
    };
    Ok(EveStrategy::new(cfg.label(), behavior))
}

/// Same channel every round.
#[derive(Debug)]
struct Fixed(ChannelOp);

impl Adversary for Fixed {
    fn next_action(&self, _prefix: TranscriptPrefix<'_>, _rng: &mut dyn RngCore) -> ChannelOp {
        self.0.clone()
    }
}

#[derive(Debug)]
struct InterceptResend {
    policy: BasisPolicy,
    z: ChannelOp,
    x: ChannelOp,
}

impl Adversary for InterceptResend {
    fn next_action(&self, _prefix: TranscriptPrefix<'_>, rng: &mut dyn RngCore) -> ChannelOp {
        let basis = match self.policy {
            BasisPolicy::AlwaysZ => Basis::Z,
            BasisPolicy::AlwaysX => Basis::X,
            BasisPolicy::Random(q) => {
                if rng.random::<f64>() < q {
                    Basis::Z
                } else {
                    Basis::X
                }
            }
        };
        match basis {
            Basis::Z => self.z.clone(),
            Basis::X => self.x.clone(),
        }
    }
}

/// Watches Bob's announced bases over the last `window` detections and
/// intercept-resends in the majority basis with probability
/// `min(1, bias_gain · majority fraction)`. Ties go to Z.
#[derive(Debug)]
struct BasisTracker {
    window: usize,
    bias_gain: f64,
    identity: ChannelOp,
    z: ChannelOp,
    x: ChannelOp,
}

impl BasisTracker {
    fn majority(&self, prefix: TranscriptPrefix<'_>) -> Option<(Basis, f64)> {
        let (mut seen, mut z) = (0usize, 0usize);
        for record in prefix.detected_rev().take(self.window) {
            seen += 1;
            if record.basis_b == Basis::Z {
                z += 1;
            }
        }
        if seen == 0 {
            return None;
        }
        let x = seen - z;
        Some(if z >= x { (Basis::Z, z as f64 / seen as f64) } else { (Basis::X, x as f64 / seen as f64) })
    }
}

impl Adversary for BasisTracker {
    fn next_action(&self, prefix: TranscriptPrefix<'_>, rng: &mut dyn RngCore) -> ChannelOp {
        let Some((basis, fraction)) = self.majority(prefix) else {
            return self.identity.clone();
        };
        let p_attack = (self.bias_gain * fraction).min(1.0);
        if rng.random::<f64>() < p_attack {
            match basis {
                Basis::Z => self.z.clone(),
                Basis::X => self.x.clone(),
            }
        } else {
            self.identity.clone()
        }
    }
}
