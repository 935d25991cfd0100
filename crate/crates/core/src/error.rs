use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: precondition failures (bad input,
/// inadmissible parameters) and internal-consistency failures, which signal
/// that a numerical invariant the code relies on did not hold.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid step {step} too large for certification; maximal admissible step is {max_step} (exclusive)")]
    GridStepTooLarge { step: f64, max_step: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("too few domains for degree {degree}: need N >= {required}, have {available}")]
    TooFewDomains {
        degree: usize,
        required: usize,
        available: usize,
    },

    #[error("numerically singular basis (pivot ratio {pivot_ratio:.3e})")]
    SingularBasis { pivot_ratio: f64 },

    #[error("cannot certify regularity at this resolution (gamma estimate {gamma:.3e})")]
    RegularityNotCertified { gamma: f64 },

    #[error("trajectory left the regular neighborhood at t = {t:.3e} (|grad f| = {grad_norm:.3e})")]
    LeftNeighborhood { t: f64, grad_norm: f64 },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a broken
    /// internal invariant.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::Inconsistent(_) | Error::SingularBasis { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
