use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("photon truncation must be at least 1, got {0}")]
    InvalidTruncation(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coherent state with |alpha|^2 = {alpha_sq:.4} loses {lost:.3e} of its norm at n_max = {n_max}")]
    TruncationLoss { alpha_sq: f64, lost: f64, n_max: usize },
    #[error("operator is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("superoperator for dimension {dim} exceeds the memory budget of {budget}")]
    MemoryBudget { dim: usize, budget: usize },
    #[error("transfer matrix is singular: leading impulse sample is zero")]
    NotInvertible,
    #[error("outcome probability {0:.3e} too small to condition on")]
    ImprobableOutcome(f64),
    #[error("{0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
