use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite: min eigenvalue {min_eigenvalue:e}, max eigenvalue {max_eigenvalue:e}")]
    Definiteness {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("matrix is not symmetric: max |A - A^T| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A vector length that is not a triangular number m(m+1)/2.
    #[error("invalid Mandel vector length {0}: not of the form m(m+1)/2")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis activations underflow at phase {phase:e}")]
    DegenerateActivation { phase: f64 },

    #[error("least-squares system is rank deficient (pivot {pivot:e})")]
    RankDeficiency { pivot: f64 },

    #[error("need at least {required} samples with distinct phases, got {found}")]
    InsufficientSamples { required: usize, found: usize },

    #[error("invalid demonstration: {0}")]
    InvalidDemonstration(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("rollout aborted at step {step}: {source}")]
    Rollout {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Definiteness { .. }
            | Error::DegenerateActivation { .. }
            | Error::RankDeficiency { .. } => true,
            Error::Rollout { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
