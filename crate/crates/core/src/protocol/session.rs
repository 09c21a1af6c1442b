//! The shared round loop: Eve acts on the prefix, the round is played,
//! announcements are appended, and termination is checked.

use rand::Rng;

use super::params::{ProtocolParams, TerminationRule};
use super::transcript::{AnnouncementOrder, RoundRecord, Transcript};
use crate::adversary::EveStrategy;
use crate::error::{Error, Result};
use crate::quantum::{Basis, ChannelOp};
use crate::rng::{RandomStream, SessionStreams};

/// What one round produced before the detection is counted.
pub(crate) enum Played<T> {
    NotDetected { basis_b: Basis },
    Detected { basis_a: Basis, basis_b: Basis, payload: T },
}

/// Protocol-specific physics of a round.
pub(crate) trait RoundPhysics {
    type Payload;

    fn play(&mut self, op: &ChannelOp, rng: &mut RandomStream) -> Result<Played<Self::Payload>>;

    /// Called for every detection that counts towards termination.
    fn accept(&mut self, basis_a: Basis, basis_b: Basis, payload: Self::Payload, rng: &mut RandomStream) -> Result<()>;
}

pub(crate) fn sample_basis<R: Rng + ?Sized>(p_z: f64, rng: &mut R) -> Basis {
    if rng.random::<f64>() < p_z {
        Basis::Z
    } else {
        Basis::X
    }
}

#[derive(Default)]
struct Counters {
    detected: u64,
    z_agreed: u64,
    x_agreed: u64,
}

impl Counters {
    fn satisfied(&self, rule: &TerminationRule) -> bool {
        match *rule {
            TerminationRule::CountDetected { n } => self.detected >= n,
            TerminationRule::CountPerBasis { n_z_req, n_x_req } => {
                self.z_agreed >= n_z_req && self.x_agreed >= n_x_req
            }
        }
    }
}

/// Runs rounds until `rule` holds, then finishes the in-flight batch with
/// further detections discarded (recorded as not detected).
pub(crate) fn drive<P: RoundPhysics>(
    params: &ProtocolParams,
    rule: TerminationRule,
    order: AnnouncementOrder,
    eve: &EveStrategy,
    streams: &mut SessionStreams,
    physics: &mut P,
) -> Result<Transcript> {
    params.validate()?;
    rule.validate()?;
    let mut transcript = Transcript::new(params.clone(), order);
    let mut counters = Counters::default();
    let mut batch_end: Option<u64> = None;
    let mut round = 0u64;
    loop {
        match batch_end {
            Some(end) if round >= end => break,
            None if round >= params.max_rounds => {
                return Err(Error::MaxRoundsExceeded { max_rounds: params.max_rounds, detected: counters.detected });
            }
            _ => {}
        }
        round += 1;
        let prefix = transcript.prefix();
        debug_assert_eq!(prefix.next_round(), round);
        let op = eve.next_action(prefix, &mut streams.eve);
        let played = physics.play(&op, &mut streams.protocol)?;
        let record = match played {
            Played::Detected { basis_a, basis_b, payload } if batch_end.is_none() => {
                counters.detected += 1;
                match (basis_a, basis_b) {
                    (Basis::Z, Basis::Z) => counters.z_agreed += 1,
                    (Basis::X, Basis::X) => counters.x_agreed += 1,
                    _ => {}
                }
                physics.accept(basis_a, basis_b, payload, &mut streams.protocol)?;
                RoundRecord { index: round, detected: true, basis_b, basis_a: Some(basis_a) }
            }
            Played::Detected { basis_b, .. } | Played::NotDetected { basis_b } => {
                RoundRecord { index: round, detected: false, basis_b, basis_a: None }
            }
        };
        transcript.push(record);
        if batch_end.is_none() && counters.satisfied(&rule) {
            batch_end = Some(round.div_ceil(params.batch_size) * params.batch_size);
        }
    }
    Ok(transcript)
}
