use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Table would exceed the desk-scale cap of 2^24 entries.
    #[error("dimension cap exceeded: {a}^{n} > 2^24 table entries")]
    DimensionCap { n: usize, a: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("non-stochastic kernel: row {row} sums to {sum}")]
    NonStochasticKernel { row: usize, sum: f64 },

    #[error("conditional undefined: prefix {prefix:?} has zero probability")]
    ZeroProbabilityPrefix { prefix: Vec<usize> },

    #[error("invalid permutation: {0:?} is not a bijection of 0..n")]
    InvalidPermutation(Vec<usize>),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("construction failure: {0}")]
    ConstructionFailure(String),

    #[error("power iteration did not converge after {iterations} iterations (last delta {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
