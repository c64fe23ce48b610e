use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside the supported range 1..=4")]
    QubitCount(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("state invariant violated: {0}")]
    InvalidState(String),

    #[error("operator is not a projector: {0}")]
    NotAProjector(String),

    #[error("outcome impossible: projection probability {prob:.3e} below threshold")]
    OutcomeImpossible { prob: f64 },

    #[error("invalid qubit index set: {0}")]
    InvalidIndices(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("requested signature carries no conditional state")]
    NoConditionalState,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
