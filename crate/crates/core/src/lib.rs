//! Simulation and analysis of BB84 with iterative sifting under a
//! basis-independent termination condition.
//!
//! The crate covers
//!
//! * exact two-qubit quantum arithmetic ([`quantum`]),
//! * the protocol variants, driven by an adaptive eavesdropper that acts on
//!   the public transcript ([`protocol`], [`adversary`]),
//! * the finite-key length from the Azuma phase-error bound ([`finite_key`]),
//! * empirical checks of the martingale argument and the sampling-bias
//!   counterexample for basis-dependent termination ([`stats`]).
//!
//! All randomness comes from [`rng::SessionStreams`], derived from a master
//! seed and a trial index.
//!
//! ```
//! use qkd_sift::{make_strategy, postprocess, run_actual, ProtocolParams, SessionStreams, StrategyConfig};
//!
//! let params = ProtocolParams { eps_s: 1e-2, ..ProtocolParams::symmetric(100_000, 0.02) };
//! let eve = make_strategy(&StrategyConfig::Depolarizing { p: 0.02, p_loss: 0.5 })?;
//! let mut streams = SessionStreams::derive(1, 0);
//! let run = run_actual(&params, &eve, &mut streams)?;
//! let keys = postprocess(&run.sifted, &params, &mut streams.protocol)?;
//! assert!(keys.key.l > 0 && !keys.aborted);
//! # Ok::<(), qkd_sift::Error>(())
//! ```

pub mod adversary;
pub mod error;
pub mod finite_key;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use adversary::{make_strategy, Adversary, BasisPolicy, EveStrategy, StrategyConfig};
pub use error::{Error, Result};
pub use finite_key::{azuma_tail, key_length, phase_error_bound, AzumaBound, KeyLengthResult, KeyLengthTerms};
pub use protocol::{
    postprocess, run_actual, run_estimation, run_insecure_termination, run_virtual, ActualRun, BitString,
    EstimationRun, FinalKeys, ProtocolParams, ProtocolParamsSpec, SiftedData, TerminationRule, Transcript,
};
pub use quantum::{Basis, Bit, ChannelOp, Density2, Density4};
pub use rng::{RandomStream, SessionStreams};
pub use stats::{
    azuma_coverage, build_trace, enumerate_bias, martingale_drift, BiasReport, CoverageReport, MartingaleTrace,
};
