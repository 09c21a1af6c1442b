use serde::{Deserialize, Serialize};

use super::params::{ProtocolParams, TerminationRule};
use super::session::{drive, sample_basis, Played, RoundPhysics};
use super::transcript::{AnnouncementOrder, BitString, SiftedData, Transcript};
use crate::adversary::EveStrategy;
use crate::error::{Error, Result};
use crate::quantum::{
    apply_channel_b, bell_pair, filter_detect, measure_pair, prob_phase_error, source_state, Basis, Bit, BobOutcome,
    BobPovm, ChannelOp, Density4, QubitDelivery,
};
use crate::rng::{RandomStream, SessionStreams};

/// Output of the prepare-and-measure protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualRun {
    pub transcript: Transcript,
    pub sifted: SiftedData,
}

/// Output of the entanglement-based protocol with deferred measurements.
#[derive(Debug, Clone)]
pub struct VirtualRun {
    pub transcript: Transcript,
    pub sifted: SiftedData,
    /// Normalized conditional states of the Z-systems, in detection order.
    pub retained_states: Vec<Density4>,
}

/// One detected round of the estimation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationRound {
    /// Transcript round number.
    pub round: u64,
    pub basis_a: Basis,
    pub basis_b: Basis,
    /// X-basis outcomes of Alice and Bob.
    pub x_a: Bit,
    pub x_b: Bit,
    /// `q_Z · Tr(ρ_i Π_err^X)`.
    pub p_ph: f64,
    /// `q_X · Tr(ρ_i Π_err^X)`.
    pub p_xerr: f64,
}

impl EstimationRound {
    pub fn is_error(&self) -> bool {
        self.x_a != self.x_b
    }

    /// Z-announced round whose X outcomes disagree.
    pub fn is_phase_error(&self) -> bool {
        self.basis_a == Basis::Z && self.basis_b == Basis::Z && self.is_error()
    }

    /// X-announced round whose X outcomes disagree.
    pub fn is_x_error(&self) -> bool {
        self.basis_a == Basis::X && self.basis_b == Basis::X && self.is_error()
    }
}

/// Output of the estimation protocol (every detected pair measured in X).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRun {
    pub transcript: Transcript,
    pub per_round: Vec<EstimationRound>,
    pub lambda_ph: u64,
    pub lambda_xerr: u64,
    pub s_az_vir: BitString,
    pub s_bz_vir: BitString,
    pub s_ax: BitString,
    pub s_bx: BitString,
}

impl EstimationRun {
    pub fn n_det(&self) -> u64 {
        self.per_round.len() as u64
    }
}

fn povm_for(params: &ProtocolParams) -> Result<BobPovm> {
    BobPovm::with_efficiency(params.detector_efficiency)
}

fn detected_rule(params: &ProtocolParams) -> TerminationRule {
    TerminationRule::CountDetected { n: params.n_det_ter }
}

struct ActualPhysics {
    povm: BobPovm,
    p_z_a: f64,
    p_z_b: f64,
    sifted: SiftedData,
}

impl RoundPhysics for ActualPhysics {
    type Payload = (Bit, Bit);

    fn play(&mut self, op: &ChannelOp, rng: &mut RandomStream) -> Result<Played<(Bit, Bit)>> {
        let basis_a = sample_basis(self.p_z_a, rng);
        let bit_a = Bit::from_bool(rand::Rng::random::<bool>(rng));
        let basis_b = sample_basis(self.p_z_b, rng);
        let sent = source_state(bit_a, basis_a);
        let outcome = match op.transmit_qubit(&sent, rng)? {
            QubitDelivery::Lost => BobOutcome::Failed,
            QubitDelivery::Delivered(rho) => self.povm.measure_qubit(&rho, basis_b, rng),
        };
        Ok(match outcome {
            BobOutcome::Failed => Played::NotDetected { basis_b },
            BobOutcome::Detected(bit_b) => Played::Detected { basis_a, basis_b, payload: (bit_a, bit_b) },
        })
    }

    fn accept(&mut self, basis_a: Basis, basis_b: Basis, (a, b): (Bit, Bit), _rng: &mut RandomStream) -> Result<()> {
        if basis_a == basis_b {
            self.sifted.push(basis_a, a, b);
        }
        Ok(())
    }
}

fn run_actual_with_rule(
    params: &ProtocolParams,
    rule: TerminationRule,
    eve: &EveStrategy,
    streams: &mut SessionStreams,
) -> Result<ActualRun> {
    let mut physics =
        ActualPhysics { povm: povm_for(params)?, p_z_a: params.p_z_a, p_z_b: params.p_z_b, sifted: SiftedData::default() };
    let transcript = drive(params, rule, AnnouncementOrder::BobThenAlice, eve, streams, &mut physics)?;
    Ok(ActualRun { transcript, sifted: physics.sifted })
}

/// Prepare-and-measure BB84 with iterative sifting, stopping after
/// `n_det_ter` detections whatever the bases.
pub fn run_actual(params: &ProtocolParams, eve: &EveStrategy, streams: &mut SessionStreams) -> Result<ActualRun> {
    run_actual_with_rule(params, detected_rule(params), eve, streams)
}

/// Prepare-and-measure run with per-basis quotas. Its output is only meant
/// for the sampling-bias analysis.
pub fn run_insecure_termination(
    params: &ProtocolParams,
    rule: TerminationRule,
    eve: &EveStrategy,
    streams: &mut SessionStreams,
) -> Result<ActualRun> {
    if !matches!(rule, TerminationRule::CountPerBasis { .. }) {
        return Err(Error::InvalidParams("run_insecure_termination expects a CountPerBasis rule".into()));
    }
    run_actual_with_rule(params, rule, eve, streams)
}

/// Entanglement-based round: φ+ through Eve, then Bob's filter. Bases are
/// drawn only after a detection; Bob's basis on undetected rounds is drawn
/// afterwards so that the public record has the same shape as the actual run.
fn play_entangled(
    op: &ChannelOp,
    povm: &BobPovm,
    p_z_a: f64,
    p_z_b: f64,
    rng: &mut RandomStream,
) -> Result<Played<Density4>> {
    let (delivered, rho) = apply_channel_b(&bell_pair(), op, rng)?;
    let detected_state = if delivered {
        let (detected, rho) = filter_detect(&rho, povm, rng)?;
        detected.then_some(rho)
    } else {
        None
    };
    Ok(match detected_state {
        None => Played::NotDetected { basis_b: sample_basis(p_z_b, rng) },
        Some(rho) => {
            let basis_a = sample_basis(p_z_a, rng);
            let basis_b = sample_basis(p_z_b, rng);
            Played::Detected { basis_a, basis_b, payload: rho }
        }
    })
}

struct VirtualPhysics {
    povm: BobPovm,
    p_z_a: f64,
    p_z_b: f64,
    retained: Vec<(Basis, Density4)>,
}

impl RoundPhysics for VirtualPhysics {
    type Payload = Density4;

    fn play(&mut self, op: &ChannelOp, rng: &mut RandomStream) -> Result<Played<Density4>> {
        play_entangled(op, &self.povm, self.p_z_a, self.p_z_b, rng)
    }

    fn accept(&mut self, basis_a: Basis, basis_b: Basis, rho: Density4, _rng: &mut RandomStream) -> Result<()> {
        if basis_a == basis_b {
            self.retained.push((basis_a, rho));
        }
        Ok(())
    }
}

/// Entanglement-based protocol: basis-agreed pairs are kept as Z-/X-systems
/// and measured only after the loop.
pub fn run_virtual(params: &ProtocolParams, eve: &EveStrategy, streams: &mut SessionStreams) -> Result<VirtualRun> {
    let mut physics =
        VirtualPhysics { povm: povm_for(params)?, p_z_a: params.p_z_a, p_z_b: params.p_z_b, retained: Vec::new() };
    let transcript = drive(
        params,
        detected_rule(params),
        AnnouncementOrder::DetectionThenBases,
        eve,
        streams,
        &mut physics,
    )?;
    let mut sifted = SiftedData::default();
    let mut retained_states = Vec::new();
    for (basis, rho) in physics.retained {
        let (a, b) = measure_pair(&rho, basis, basis, &physics.povm, &mut streams.protocol)?;
        sifted.push(basis, a, b);
        if basis == Basis::Z {
            retained_states.push(rho);
        }
    }
    Ok(VirtualRun { transcript, sifted, retained_states })
}

struct EstimationPhysics {
    povm: BobPovm,
    p_z_a: f64,
    p_z_b: f64,
    q_z: f64,
    q_x: f64,
    round: u64,
    per_round: Vec<EstimationRound>,
}

impl RoundPhysics for EstimationPhysics {
    type Payload = Density4;

    fn play(&mut self, op: &ChannelOp, rng: &mut RandomStream) -> Result<Played<Density4>> {
        self.round += 1;
        play_entangled(op, &self.povm, self.p_z_a, self.p_z_b, rng)
    }

    fn accept(&mut self, basis_a: Basis, basis_b: Basis, rho: Density4, rng: &mut RandomStream) -> Result<()> {
        // One trace feeds both probabilities.
        let t = prob_phase_error(&rho, &self.povm);
        let (x_a, x_b) = measure_pair(&rho, Basis::X, Basis::X, &self.povm, rng)?;
        self.per_round.push(EstimationRound {
            round: self.round,
            basis_a,
            basis_b,
            x_a,
            x_b,
            p_ph: self.q_z * t,
            p_xerr: self.q_x * t,
        });
        Ok(())
    }
}

/// Estimation protocol: announcements as in [`run_virtual`], but every
/// detected pair is measured in X straight away and the conditional error
/// probabilities are recorded from the known pre-measurement state.
pub fn run_estimation(params: &ProtocolParams, eve: &EveStrategy, streams: &mut SessionStreams) -> Result<EstimationRun> {
    let mut physics = EstimationPhysics {
        povm: povm_for(params)?,
        p_z_a: params.p_z_a,
        p_z_b: params.p_z_b,
        q_z: params.q_z(),
        q_x: params.q_x(),
        round: 0,
        per_round: Vec::with_capacity(params.n_det_ter as usize),
    };
    let transcript = drive(
        params,
        detected_rule(params),
        AnnouncementOrder::DetectionThenBases,
        eve,
        streams,
        &mut physics,
    )?;
    let mut run = EstimationRun {
        transcript,
        per_round: physics.per_round,
        lambda_ph: 0,
        lambda_xerr: 0,
        s_az_vir: BitString::new(),
        s_bz_vir: BitString::new(),
        s_ax: BitString::new(),
        s_bx: BitString::new(),
    };
    for r in &run.per_round {
        match (r.basis_a, r.basis_b) {
            (Basis::Z, Basis::Z) => {
                run.s_az_vir.push(r.x_a);
                run.s_bz_vir.push(r.x_b);
            }
            (Basis::X, Basis::X) => {
                run.s_ax.push(r.x_a);
                run.s_bx.push(r.x_b);
            }
            _ => {}
        }
        run.lambda_ph += r.is_phase_error() as u64;
        run.lambda_xerr += r.is_x_error() as u64;
    }
    Ok(run)
}
