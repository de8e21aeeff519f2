use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("NotSquare: matrix has {rows} rows but row {row} has {cols} entries")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("DimensionTooSmall: dimension {dim} is below the minimum {min}")]
    DimensionTooSmall { dim: usize, min: usize },

    #[error("DimensionMismatch: expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("NotHermitian: max |m_ij - conj(m_ji)| = {deviation:e} exceeds tolerance {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("NotUnitTrace: trace = {trace}, |Tr - 1| = {deviation:e} exceeds tolerance {tol:e}")]
    NotUnitTrace { trace: f64, deviation: f64, tol: f64 },

    #[error("NotPSD: smallest eigenvalue {min_eigenvalue:e} is below -{tol:e}")]
    NotPsd { min_eigenvalue: f64, tol: f64 },

    #[error("NotNormalized: squared norm {norm_sq} differs from 1 by more than {tol:e}")]
    NotNormalized { norm_sq: f64, tol: f64 },

    #[error("NotProbabilityVector: {reason}")]
    NotProbabilityVector { reason: String },

    #[error("RankOutOfBounds: rank {rank} must lie in 1..={dim}")]
    RankOutOfBounds { rank: usize, dim: usize },

    #[error("RankMismatch: expected {expected} columns (state rank), found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("NotIsometry: max |(V^+ V - I)_ij| = {deviation:e}")]
    NotIsometry { deviation: f64 },

    #[error("ReconstructionMismatch: ensemble differs from the parent state by {error:e} (max entry)")]
    ReconstructionMismatch { error: f64 },

    #[error("EmptyCandidates: candidate list is empty")]
    EmptyCandidates,

    #[error("UnknownTag: '{0}' is not one of dd, dm, l1, entropy")]
    UnknownTag(String),

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("Format: field `{field}`: {reason}")]
    Format { field: String, reason: String },

    #[error("EigenFailure: Hermitian eigensolver failed on {matrix}")]
    EigenFailure { matrix: String },

    #[error("OptimizerFault: {0}")]
    OptimizerFault(String),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for faults raised by numerical machinery rather than by bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::EigenFailure { .. } | Error::OptimizerFault(_))
    }
}
