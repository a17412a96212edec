use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no connected layout found after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("symmetric eigensolver did not converge")]
    EigenFailure,

    #[error("MDSG of node {owner} is empty")]
    EmptyMdsg { owner: usize },

    #[error("scenario has no destroyed nodes")]
    NoDamage,

    #[error("recovery did not terminate within {steps} steps")]
    NonTermination { steps: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("united graphs do not share node order or features")]
    InconsistentOrder,

    #[error("non-finite value encountered in {0}")]
    NumericalOverflow(&'static str),

    #[error("no candidate solution is connected")]
    NoConnectedCandidate,

    #[error("model format error: {0}")]
    Format(String),

    #[error("simulation exceeded its step budget of {budget}")]
    StepBudgetExceeded { budget: usize },

    #[error("policy speed {speed} m/s for node {node} exceeds v_max {v_max} m/s")]
    PolicySpeedViolation { node: usize, speed: f64, v_max: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch { expected: expected.to_string(), got: got.to_string() }
    }
}
