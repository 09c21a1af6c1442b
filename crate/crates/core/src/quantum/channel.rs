use std::sync::Arc;

use rand::Rng;

use super::matrix::Mat2;
use super::state::{Density2, Density4, STATE_TOL};
use crate::error::{Error, Result};

/// Branches with weight below this are never sampled.
pub const BRANCH_EPS: f64 = 1e-12;

/// Eve's action on system B for one round, as two Kraus families: the
/// operators that deliver a system to Bob and those that lose it.
///
/// Cloning is cheap; the Kraus data is shared.
#[derive(Debug, Clone)]
pub struct ChannelOp(Arc<ChannelInner>);

#[derive(Debug)]
struct ChannelInner {
    deliver: Vec<Mat2>,
    lose: Vec<Mat2>,
    deliver_effect: Mat2,
    lose_effect: Mat2,
    identity: bool,
}

/// Outcome of sending a qubit through a [`ChannelOp`] in the prepare-and-measure picture.
#[derive(Debug, Clone, Copy)]
pub enum QubitDelivery {
    Delivered(Density2),
    Lost,
}

impl ChannelOp {
    pub fn new(deliver: Vec<Mat2>, lose: Vec<Mat2>) -> Result<Self> {
        if deliver.is_empty() && lose.is_empty() {
            return Err(Error::InvalidChannel("both Kraus families are empty".into()));
        }
        let effect = |ks: &[Mat2]| ks.iter().fold(Mat2::zero(), |acc, k| acc + k.adjoint() * *k);
        let deliver_effect = effect(&deliver);
        let lose_effect = effect(&lose);
        let defect = (deliver_effect + lose_effect).max_abs_diff(&Mat2::identity());
        if defect >= STATE_TOL {
            return Err(Error::InvalidChannel(format!("sum of K†K differs from I by {defect:e}")));
        }
        let identity = lose.is_empty() && deliver.len() == 1 && deliver[0] == Mat2::identity();
        Ok(ChannelOp(Arc::new(ChannelInner { deliver, lose, deliver_effect, lose_effect, identity })))
    }

    pub fn identity() -> Self {
        Self::new(vec![Mat2::identity()], vec![]).expect("identity is trace preserving")
    }

    /// Every system is lost.
    pub fn all_lose() -> Self {
        Self::new(vec![], vec![Mat2::identity()]).expect("identity is trace preserving")
    }

    /// Composes a lossless channel with an independent loss of probability `p_loss`.
    pub fn with_loss(deliver: &[Mat2], p_loss: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_loss) {
            return Err(Error::InvalidChannel(format!("loss probability {p_loss} outside [0, 1]")));
        }
        let keep = (1.0 - p_loss).sqrt();
        let deliver = if p_loss < 1.0 { deliver.iter().map(|k| k.scale(keep)).collect() } else { vec![] };
        let lose = if p_loss > 0.0 { vec![Mat2::identity().scale(p_loss.sqrt())] } else { vec![] };
        Self::new(deliver, lose)
    }

    pub fn deliver_kraus(&self) -> &[Mat2] {
        &self.0.deliver
    }

    pub fn lose_kraus(&self) -> &[Mat2] {
        &self.0.lose
    }

    pub fn is_identity(&self) -> bool {
        self.0.identity
    }

    /// `‖Σ K†K − I‖_max` over both families.
    pub fn completeness_defect(&self) -> f64 {
        (self.0.deliver_effect + self.0.lose_effect).max_abs_diff(&Mat2::identity())
    }

    /// Sends a single qubit (prepare-and-measure picture).
    pub fn transmit_qubit<R: Rng + ?Sized>(&self, rho: &Density2, rng: &mut R) -> Result<QubitDelivery> {
        if self.0.identity {
            return Ok(QubitDelivery::Delivered(*rho));
        }
        let m = rho.matrix();
        let p_deliver = m.trace_product(&self.0.deliver_effect);
        let p_lose = m.trace_product(&self.0.lose_effect);
        if choose_first_branch(p_deliver, p_lose, rng)? {
            let out = self.0.deliver.iter().fold(Mat2::zero(), |acc, k| acc + m.sandwich(k));
            Ok(QubitDelivery::Delivered(Density2::from_matrix_unchecked(out.scale(1.0 / p_deliver))))
        } else {
            Ok(QubitDelivery::Lost)
        }
    }

    /// Applies the delivered branch to B without sampling or renormalizing.
    pub fn deliver_branch(&self, rho: &Density4) -> Density4 {
        let m = rho.matrix();
        let out = self.0.deliver.iter().fold(super::matrix::Mat4::zero(), |acc, k| acc + m.sandwich_b(k));
        Density4::from_matrix_unchecked(out)
    }
}

/// Samples between two branches with weights `p_first`, `p_second`.
/// Branches lighter than [`BRANCH_EPS`] are excluded from sampling.
pub(crate) fn choose_first_branch<R: Rng + ?Sized>(p_first: f64, p_second: f64, rng: &mut R) -> Result<bool> {
    let first_ok = p_first >= BRANCH_EPS;
    let second_ok = p_second >= BRANCH_EPS;
    match (first_ok, second_ok) {
        (true, false) => Ok(true),
        (false, true) => Ok(false),
        (false, false) => Err(Error::DegenerateState { probability: p_first.max(p_second) }),
        (true, true) => {
            let u: f64 = rng.random();
            Ok(u * (p_first + p_second) < p_first)
        }
    }
}

/// Junk B state paired with Alice's half after a loss; it is never measured.
pub fn junk_b_state() -> Density2 {
    Density2::from_matrix_unchecked(Mat2::from_real([[1.0, 0.0], [0.0, 0.0]]))
}

/// Eve's channel acting on B of a pair state.
///
/// Returns `(delivered, state)`. On delivery the state is the renormalized
/// post-branch pair; on loss it is Alice's renormalized half tensored with
/// [`junk_b_state`].
pub fn apply_channel_b<R: Rng + ?Sized>(rho: &Density4, ch: &ChannelOp, rng: &mut R) -> Result<(bool, Density4)> {
    if ch.0.identity {
        return Ok((true, *rho));
    }
    let m = rho.matrix();
    let p_deliver = m.expect_b(&ch.0.deliver_effect);
    let p_lose = m.expect_b(&ch.0.lose_effect);
    if choose_first_branch(p_deliver, p_lose, rng)? {
        let out = ch.deliver_branch(rho);
        Ok((true, Density4::normalized(*out.matrix(), p_deliver)))
    } else {
        let lost = ch.0.lose.iter().fold(super::matrix::Mat4::zero(), |acc, k| acc + m.sandwich_b(k));
        let alice = Density2::from_matrix_unchecked(lost.partial_trace_b().scale(1.0 / p_lose));
        Ok((false, Density4::product(&alice, &junk_b_state())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::matrix::Mat4;
    use crate::quantum::state::bell_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn depolarizing_kraus(p: f64) -> Vec<Mat2> {
        let w = (p / 4.0).sqrt();
        vec![
            Mat2::identity().scale((1.0 - p).sqrt()),
            Mat2::identity().scale(w),
            Mat2::pauli_x().scale(w),
            Mat2::pauli_y().scale(w),
            Mat2::pauli_z().scale(w),
        ]
    }

    #[test]
    fn construction_rejects_non_trace_preserving() {
        assert!(ChannelOp::new(vec![Mat2::identity().scale(0.9)], vec![]).is_err());
        assert!(ChannelOp::new(vec![], vec![]).is_err());
        assert!(ChannelOp::with_loss(&[Mat2::identity()], 1.5).is_err());
    }

    #[test]
    fn identity_channel_is_exact_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rho = bell_pair().mix(&Density4::maximally_mixed(), 0.8);
        let (delivered, out) = apply_channel_b(&rho, &ChannelOp::identity(), &mut rng).unwrap();
        assert!(delivered);
        assert_eq!(out, rho);
    }

    #[test]
    fn all_lose_channel_never_delivers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let (delivered, out) = apply_channel_b(&bell_pair(), &ChannelOp::all_lose(), &mut rng).unwrap();
            assert!(!delivered);
            assert!(out.reduced_a().matrix().max_abs_diff(&Mat2::identity().scale(0.5)) < 1e-15);
        }
    }

    #[test]
    fn depolarizing_delivered_branch_matches_matrix_oracle() {
        // Oracle: (1-p)·φ+ + p·(I_A/2 ⊗ I_B/2), built directly.
        let p = 0.2;
        let ch = ChannelOp::new(depolarizing_kraus(p), vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (delivered, out) = apply_channel_b(&bell_pair(), &ch, &mut rng).unwrap();
        assert!(delivered);
        let oracle = bell_pair().matrix().scale(1.0 - p) + Mat4::identity().scale(p / 4.0);
        assert!(out.matrix().max_abs_diff(&oracle) < 1e-14);
    }

    #[test]
    fn loss_frequency_matches_probability() {
        let ch = ChannelOp::with_loss(&[Mat2::identity()], 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 100_000;
        let lost = (0..trials)
            .filter(|_| !apply_channel_b(&bell_pair(), &ch, &mut rng).unwrap().0)
            .count() as f64;
        let sigma = (0.3 * 0.7 / trials as f64).sqrt();
        assert!((lost / trials as f64 - 0.3).abs() < 4.0 * sigma);
    }

    #[test]
    fn degenerate_state_is_reported() {
        let zero = Density4::from_matrix_unchecked(Mat4::zero());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ch = ChannelOp::with_loss(&[Mat2::identity()], 0.5).unwrap();
        assert!(matches!(apply_channel_b(&zero, &ch, &mut rng), Err(Error::DegenerateState { .. })));
    }
}
