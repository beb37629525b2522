use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum QkdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e} > tol {tol:.3e})")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not a density operator: {0}")]
    InvalidDensity(String),

    #[error("unknown subsystem label '{0}'")]
    UnknownLabel(char),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("infeasible attack parameters: {0}")]
    Infeasible(String),

    #[error("no positive rate asymptotically")]
    NoAsymptoticRate,
}

pub type Result<T> = std::result::Result<T, QkdError>;
