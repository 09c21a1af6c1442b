//! Exact small-dimension quantum mechanics for single-photon BB84.
//!
//! Eve acts on B once per round; Bob's POVM has a failure element shared
//! between the Z and X bases. Pair states live on
//! A⊗B and are always stored normalized after a branch has been sampled.

pub mod channel;
pub mod matrix;
pub mod povm;
pub mod state;

pub use channel::{apply_channel_b, ChannelOp, QubitDelivery};
pub use matrix::{Mat2, Mat4, C64};
pub use povm::{filter_detect, measure_pair, pair_distribution, prob_phase_error, BobOutcome, BobPovm};
pub use state::{bell_pair, bell_phi_minus, source_state, Basis, Bit, Density2, Density4};
