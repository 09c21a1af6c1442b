//! Empirical checks of the martingale argument, plus the exact
//! sampling-bias enumeration for basis-dependent termination.

mod bias;
mod compare;
mod coverage;
mod martingale;

pub use bias::{
    enumerate_bias, BasisProbabilities, BiasReport, LengthTv, PatternProbability, DEPENDENCE_THRESHOLD,
    MAX_ENUMERATION_ROUNDS,
};
pub use compare::{total_variation, two_sample_chi_square, ChiSquareResult, MIN_POOLED_COUNT};
pub use coverage::{
    azuma_coverage, coverage_from_summaries, max_round_residual, relation_check, CoverageReport, EstimationSummary,
};
pub use martingale::{build_trace, martingale_drift, DriftAccumulator, DriftSummary, MartingaleTrace, RoundDrift};
