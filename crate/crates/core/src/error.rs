use thiserror::Error;

/// Errors raised by the lattice, norm, centralizer and diagnostic layers.
#[derive(Debug, Clone, Error)]
pub enum TwistError {
    #[error("atom space must have at least one atom")]
    EmptySpace,

    #[error("atom weight {weight} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("value vector has length {got}, atom space has {expected} atoms")]
    LengthMismatch { expected: usize, got: usize },

    #[error("vectors live on different atom spaces")]
    MixedSpaces,

    #[error("log-ratio domain error at atom {index}: numerator {num}, denominator {den}")]
    LogDomain { index: usize, num: f64, den: f64 },

    #[error("{norm} requires unit weights")]
    NonUnitWeights { norm: &'static str },

    #[error("{norm}: size {size} exceeds cap {cap}")]
    CapExceeded {
        norm: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("block sizes sum to {blocks}, atom space has {atoms} atoms")]
    PartitionMismatch { blocks: usize, atoms: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("Lozanovskii solver failed after {sweeps} sweeps (last improvement {last_improvement:e})")]
    SolverFailure {
        sweeps: usize,
        last_improvement: f64,
        best: Box<crate::centralizers::Decomposition>,
    },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("invalid disjoint family: {0}")]
    InvalidFamily(String),
}

pub type Result<T, E = TwistError> = std::result::Result<T, E>;
