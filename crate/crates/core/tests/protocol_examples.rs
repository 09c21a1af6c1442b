use std::sync::Arc;

use qkd_sift::adversary::{Adversary, BasisPolicy, EveStrategy, StrategyConfig};
use qkd_sift::protocol::{run_insecure_termination, TranscriptPrefix};
use qkd_sift::quantum::{bell_pair, Mat2};
use qkd_sift::{
    make_strategy, run_actual, run_estimation, run_virtual, Basis, ChannelOp, Error, ProtocolParams, SessionStreams,
    TerminationRule,
};
use rand::RngCore;

fn identity() -> EveStrategy {
    make_strategy(&StrategyConfig::IdentityLossy { p_loss: 0.0 }).unwrap()
}

/// Applies Z to Bob's half, turning φ+ into φ−.
#[derive(Debug)]
struct PhaseFlip;

impl Adversary for PhaseFlip {
    fn next_action(&self, _prefix: TranscriptPrefix<'_>, _rng: &mut dyn RngCore) -> ChannelOp {
        ChannelOp::new(vec![Mat2::pauli_z()], vec![]).unwrap()
    }
}

#[test]
fn identity_channel_stops_at_exactly_n_detections() {
    let params = ProtocolParams::symmetric(4, 0.1);
    for trial in 0..20 {
        let run = run_actual(&params, &identity(), &mut SessionStreams::derive(1, trial)).unwrap();
        assert_eq!(run.transcript.detected_count(), 4);
        assert_eq!(run.transcript.rounds.len(), 4);
    }
}

#[test]
fn identity_channel_gives_perfect_correlations() {
    let params = ProtocolParams::symmetric(500, 0.1);
    let run = run_actual(&params, &identity(), &mut SessionStreams::derive(2, 0)).unwrap();
    assert_eq!(run.sifted.s_az, run.sifted.s_bz);
    assert_eq!(run.sifted.x_errors(), 0);
    assert!(run.sifted.n_z > 0 && run.sifted.n_x > 0);
}

#[test]
fn all_lose_channel_exhausts_max_rounds() {
    let params = ProtocolParams { max_rounds: 100, ..ProtocolParams::symmetric(4, 0.1) };
    let eve = make_strategy(&StrategyConfig::IdentityLossy { p_loss: 1.0 }).unwrap();
    let err = run_actual(&params, &eve, &mut SessionStreams::derive(3, 0)).unwrap_err();
    assert_eq!(err, Error::MaxRoundsExceeded { max_rounds: 100, detected: 0 });
    assert!(matches!(run_virtual(&params, &eve, &mut SessionStreams::derive(3, 0)), Err(Error::MaxRoundsExceeded { .. })));
    assert!(matches!(run_estimation(&params, &eve, &mut SessionStreams::derive(3, 0)), Err(Error::MaxRoundsExceeded { .. })));
}

#[test]
fn virtual_identity_retains_bell_pairs() {
    let params = ProtocolParams::symmetric(200, 0.1);
    let run = run_virtual(&params, &identity(), &mut SessionStreams::derive(4, 0)).unwrap();
    assert_eq!(run.retained_states.len() as u64, run.sifted.n_z);
    for rho in &run.retained_states {
        assert!(rho.matrix().max_abs_diff(bell_pair().matrix()) < 1e-12);
    }
    assert_eq!(run.sifted.s_az, run.sifted.s_bz);
    assert_eq!(run.sifted.x_errors(), 0);
}

#[test]
fn estimation_identity_has_no_phase_errors() {
    let params = ProtocolParams::symmetric(300, 0.1);
    let run = run_estimation(&params, &identity(), &mut SessionStreams::derive(5, 0)).unwrap();
    assert_eq!((run.lambda_ph, run.lambda_xerr), (0, 0));
    assert!(run.per_round.iter().all(|r| r.p_ph == 0.0 && r.p_xerr == 0.0));
}

#[test]
fn phase_flip_channel_gives_quarter_probabilities() {
    let params = ProtocolParams::symmetric(200, 0.1);
    let eve = EveStrategy::new("phase-flip", Arc::new(PhaseFlip));
    let run = run_estimation(&params, &eve, &mut SessionStreams::derive(6, 0)).unwrap();
    for r in &run.per_round {
        assert!((r.p_ph - 0.25).abs() < 1e-12);
        assert!((r.p_xerr - 0.25).abs() < 1e-12);
        assert!(r.is_error());
    }
}

#[test]
fn estimation_probabilities_share_one_trace() {
    let params = ProtocolParams::symmetric(300, 0.1).with_z_probability(0.8);
    let eve = make_strategy(&StrategyConfig::AdaptiveBasisTracker { window: 5, bias_gain: 1.0 }).unwrap();
    let run = run_estimation(&params, &eve, &mut SessionStreams::derive(7, 0)).unwrap();
    for r in &run.per_round {
        assert!((r.p_ph / params.q_z() - r.p_xerr / params.q_x()).abs() < 1e-12);
    }
}

/// 4σ binomial envelope around `p`.
fn within_binomial(k: u64, n: u64, p: f64) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (k as f64 / n as f64 - p).abs() <= 4.0 * sigma
}

#[test]
fn depolarizing_error_rates_are_half_p() {
    let p = 0.2;
    let params = ProtocolParams::symmetric(2000, 0.1);
    let eve = make_strategy(&StrategyConfig::Depolarizing { p, p_loss: 0.1 }).unwrap();
    let (mut z_err, mut n_z, mut x_err, mut n_x) = (0, 0, 0, 0);
    let (mut vz_err, mut vn_z) = (0, 0);
    for trial in 0..5 {
        let run = run_actual(&params, &eve, &mut SessionStreams::derive(8, trial)).unwrap();
        z_err += run.sifted.z_errors();
        n_z += run.sifted.n_z;
        x_err += run.sifted.x_errors();
        n_x += run.sifted.n_x;
        let v = run_virtual(&params, &eve, &mut SessionStreams::derive(9, trial)).unwrap();
        vz_err += v.sifted.z_errors();
        vn_z += v.sifted.n_z;
    }
    assert!(within_binomial(z_err, n_z, p / 2.0), "{z_err}/{n_z}");
    assert!(within_binomial(x_err, n_x, p / 2.0), "{x_err}/{n_x}");
    assert!(within_binomial(vz_err, vn_z, p / 2.0), "{vz_err}/{vn_z}");

    let run = run_estimation(&params, &eve, &mut SessionStreams::derive(10, 0)).unwrap();
    for r in &run.per_round {
        assert!((r.p_ph / params.q_z() - p / 2.0).abs() < 1e-12);
    }
}

#[test]
fn intercept_resend_in_z_scrambles_x_rounds() {
    let params = ProtocolParams::symmetric(4000, 0.1);
    let eve = make_strategy(&StrategyConfig::InterceptResend { basis_policy: BasisPolicy::AlwaysZ }).unwrap();
    let run = run_actual(&params, &eve, &mut SessionStreams::derive(11, 0)).unwrap();
    assert_eq!(run.sifted.z_errors(), 0);
    assert!(within_binomial(run.sifted.x_errors(), run.sifted.n_x, 0.5));
}

#[test]
fn per_basis_termination_stops_on_the_binding_quota() {
    let params = ProtocolParams::symmetric(1, 0.1);
    let rule = TerminationRule::CountPerBasis { n_z_req: 1, n_x_req: 1 };
    for trial in 0..200 {
        let run = run_insecure_termination(&params, rule, &identity(), &mut SessionStreams::derive(12, trial)).unwrap();
        assert_eq!(run.sifted.n_z.min(run.sifted.n_x), 1);
        let agreed: Vec<Basis> = run.transcript.rounds.iter().filter_map(|r| r.agreed_basis()).collect();
        let last = *agreed.last().unwrap();
        // The final agreed round is the first one of its basis.
        assert_eq!(agreed.iter().filter(|b| **b == last).count(), 1);
        assert_eq!(run.transcript.rounds.last().unwrap().agreed_basis(), Some(last));
    }
    let bad = TerminationRule::CountPerBasis { n_z_req: 0, n_x_req: 1 };
    assert!(matches!(
        run_insecure_termination(&params, bad, &identity(), &mut SessionStreams::derive(12, 0)),
        Err(Error::InvalidParams(_))
    ));
    assert!(run_insecure_termination(&params, TerminationRule::CountDetected { n: 3 }, &identity(), &mut SessionStreams::derive(12, 0))
        .is_err());
}
