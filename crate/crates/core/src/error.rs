use thiserror::Error;

/// Errors raised by the simulator and the finite-key analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    /// The sampled branch of a Kraus decomposition has (numerically) zero weight.
    #[error("degenerate state: branch probability {probability:e} below 1e-12")]
    DegenerateState { probability: f64 },

    #[error("Born probabilities sum to {sum}, expected 1")]
    NormalizationError { sum: f64 },

    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),

    #[error("invalid strategy configuration: {0}")]
    ConfigError(String),

    #[error("termination not reached after {max_rounds} rounds ({detected} detections)")]
    MaxRoundsExceeded { max_rounds: u64, detected: u64 },

    #[error("domain error: {0}")]
    DomainError(String),

    /// `eps_s^2 <= eta`: the Azuma failure probability eats the whole secrecy budget.
    #[error("security parameter error: eps_s^2 = {eps_s_sq:e} <= eta = {eta:e}")]
    SecurityParameterError { eps_s_sq: f64, eta: f64 },

    #[error("no X-basis test data (n_x = 0)")]
    AbortNoTestData,

    #[error("martingale trace inconsistent: {0}")]
    TraceInconsistent(String),

    #[error("exhaustive enumeration over {max_rounds} rounds exceeds the limit of {limit}")]
    EnumerationTooLarge { max_rounds: usize, limit: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
