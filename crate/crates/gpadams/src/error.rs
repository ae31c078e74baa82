use crate::solver::Trajectory;

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The symbolic Gaussian conditioning could not be completed. This
    /// signals a broken basis construction, not a user error.
    #[error("derivation failure: {0}")]
    Derivation(String),

    /// A single step produced a non-finite state (stiff blow-up or overflow).
    #[error("solution diverged at step {step_index}")]
    StepDiverged { step_index: usize },

    /// Divergence detected by `solve`, with the partial trajectory attached.
    #[error("solution diverged at step {step_index}")]
    Divergence {
        step_index: usize,
        partial: Box<Trajectory>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn derivation(msg: impl Into<String>) -> Self {
        Error::Derivation(msg.into())
    }
}
