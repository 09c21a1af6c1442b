//! Protocol state machines.
//!
//! * [`run_actual`]: prepare-and-measure BB84 with iterative sifting and a
//!   basis-independent stop after `n_det_ter` detections.
//! * [`run_virtual`]: the entanglement-based equivalent with all sifted-key
//!   measurements deferred to after the loop.
//! * [`run_estimation`]: the virtual protocol with every detected pair
//!   measured in X immediately, recording the per-round error probabilities.
//! * [`run_insecure_termination`]: per-basis quotas, for the bias analysis only.
//!
//! Announcements of a round are appended to the [`Transcript`] before Eve
//! chooses her channel for the next round.

mod hashing;
mod params;
mod postprocess;
mod runs;
mod session;
mod transcript;

pub use hashing::{is_prime, tag_bits, PolynomialHash, ToeplitzHash};
pub use params::{ProtocolParams, ProtocolParamsSpec, TerminationRule, DEFAULT_F_EC, DEFAULT_MAX_ROUNDS_FACTOR};
pub use postprocess::{postprocess, AbortReason, FinalKeys, HashingRecord};
pub use runs::{
    run_actual, run_estimation, run_insecure_termination, run_virtual, ActualRun, EstimationRound, EstimationRun,
    VirtualRun,
};
pub use transcript::{AnnouncementOrder, BitString, RoundRecord, SiftedData, Transcript, TranscriptPrefix};
