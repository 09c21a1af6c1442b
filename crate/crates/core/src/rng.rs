//! Seeded random streams.
//!
//! Every protocol session owns two streams: the protocol stream drives the
//! honest parties and quantum sampling, the other drives Eve. Both are ChaCha8 streams keyed by the
//! master seed; the 64-bit ChaCha stream id selects the trial:
//!
//! ```text
//! protocol stream of trial t = ChaCha8(seed_from_u64(master), stream = 2t)
//! eve stream of trial t      = ChaCha8(seed_from_u64(master), stream = 2t + 1)
//! ```
//!
//! Streams therefore depend only on `(master, t)`, never on which worker
//! thread runs the trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type used throughout the crate.
pub type RandomStream = ChaCha8Rng;

/// Human-readable description of the derivation, echoed into report metadata.
pub const STREAM_DERIVATION: &str =
    "ChaCha8Rng::seed_from_u64(master); protocol stream id = 2*trial, eve stream id = 2*trial+1";

/// The pair of streams owned by one session.
#[derive(Debug, Clone)]
pub struct SessionStreams {
    pub protocol: RandomStream,
    pub eve: RandomStream,
}

impl SessionStreams {
    pub fn derive(master_seed: u64, trial: u64) -> Self {
        Self {
            protocol: stream(master_seed, 2 * trial),
            eve: stream(master_seed, 2 * trial + 1),
        }
    }
}

/// A single stream with the given ChaCha stream id.
pub fn stream(master_seed: u64, stream_id: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}
