use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("no sequence of {n} distinct positive integers sums to {total} (minimum is {min})")]
    Infeasible { total: u64, n: usize, min: u64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("force singularity: |q| = {radius:e} is below the floor {floor:e}")]
    Singularity { radius: f64, floor: f64 },

    #[error("product T2^{k}(h/{k}) failed: {source}")]
    ProductFailure { k: u32, source: Box<Error> },

    #[error("step {step} failed: {source}")]
    StepFailure { step: u64, source: Box<Error> },

    #[error("degenerate orbit: the LRL direction is undefined at e = 0")]
    DegenerateOrbit,

    #[error("no limit: consecutive ratios never agreed within {tolerance} (ratios {ratios:?})")]
    NoLimit { ratios: Vec<f64>, tolerance: f64 },

    #[error("roundoff-dominated schedule: {0}")]
    RoundoffDominated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
