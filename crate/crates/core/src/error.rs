//! Crate-wide error type.

use thiserror::Error;

/// Errors produced while building designs, fitting models, or scoring
/// clusterings.
#[derive(Debug, Error)]
pub enum Error {
    /// The (stacked) design matrix is rank deficient. Aliased columns make
    /// the nested-model p-values meaningless, so this is never resolved
    /// silently with a pseudo-inverse.
    #[error("singular design matrix: rank {rank} < {cols} columns")]
    SingularDesign { rank: usize, cols: usize },

    /// Response vector is invalid for the requested family (negative or
    /// non-finite counts for log-link families, NaN for Gaussian).
    #[error("invalid response for {family}: {reason}")]
    InvalidResponse { family: &'static str, reason: String },

    /// A fitted or supplied mean is outside the family's domain
    /// (mu <= 0 under a log link).
    #[error("invalid mean for {family}: {reason}")]
    InvalidMean { family: &'static str, reason: String },

    /// Moment estimation of the dispersion needs residual degrees of freedom.
    #[error("zero residual degrees of freedom: dispersion estimate undefined")]
    ZeroResidualDf,

    /// The denominator degrees of freedom of an F-type test are not positive.
    #[error("insufficient denominator degrees of freedom ({df_den}) for the test")]
    InsufficientDf { df_den: i64 },

    /// A dispersion estimate was required but not supplied, or requested for
    /// a family without a dispersion parameter.
    #[error("dispersion error: {0}")]
    MissingDispersion(String),

    /// Two sequences that must align have different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An aggregate over replications received no input.
    #[error("empty input list")]
    EmptyList,

    /// A structural invariant of the inputs is violated (shape mismatch,
    /// empty cluster, out-of-range configuration, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
