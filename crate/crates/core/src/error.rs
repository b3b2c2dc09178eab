use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("point outside the domain: {0}")]
    OutOfDomain(String),

    #[error("step size must be positive, got {0}")]
    InvalidStepSize(String),

    #[error("point is not in the feasible set")]
    NotInSet,

    #[error("constraint list is empty")]
    EmptyConstraints,

    #[error("selected subgradient is zero; the normalized quantity is undefined")]
    ZeroSubgradient,

    #[error("constraint {constraint} reported value {value} > epsilon with a zero subgradient at iteration {iteration}")]
    OracleInconsistency {
        constraint: usize,
        iteration: usize,
        value: String,
    },

    #[error("matrix of piece {piece} is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositiveSemidefinite { piece: usize, min_eigenvalue: f64 },

    #[error("no productive iterate is available")]
    EmptyProductiveSet,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
