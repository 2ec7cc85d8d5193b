use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum PhyschanError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:.3e})")]
    EigNonConvergence { sweeps: usize, residual: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} below -{tolerance:.0e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("empty vector")]
    EmptyVector,

    #[error("total photon count N must be positive")]
    ZeroTotal,

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unphysical chi matrix: {0}")]
    UnphysicalChi(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PhyschanError>;
