use thiserror::Error;

/// Errors raised by model construction, simulation, design and control.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FodsError {
    /// Inconsistent dimensions or invalid parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A recursion produced a non-finite value.
    #[error("numeric overflow at step {step}: {what} became non-finite")]
    NumericOverflow { step: usize, what: &'static str },

    /// Gain synthesis failed (undetectable / unstabilizable pairs, missed targets).
    #[error("design error: {0}")]
    Design(String),

    /// A least-squares problem was rank deficient without regularization.
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// Eigenvalue computation failed.
    #[error("eigensolver error: {0}")]
    Eigen(String),

    /// A caller-side precondition was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl FodsError {
    pub(crate) fn dims(what: impl Into<String>) -> Self {
        FodsError::Config(what.into())
    }
}

pub type Result<T> = std::result::Result<T, FodsError>;
