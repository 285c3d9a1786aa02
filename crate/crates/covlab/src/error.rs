//! Crate-wide error type.
//!
//! Every fallible operation in the library reports one of these variants.
//! The variants are deliberately fine-grained: callers such as the CLI and
//! the C API map them to distinct exit/status codes, and tests assert on
//! specific failure modes rather than on message strings.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two matrices (or a matrix and a vector) had incompatible dimensions.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    /// A matrix entry was NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Input violated the symmetry tolerance at construction.
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation:.3e} exceeds tolerance")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// The Jacobi eigensolver failed to converge within the sweep cap.
    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal mass {offdiag:.3e})")]
    NonConvergence { sweeps: usize, offdiag: f64 },

    /// A scalar function was evaluated outside its domain.
    #[error("domain error in {what}: argument {value}")]
    Domain { what: &'static str, value: f64 },

    /// Wishart degrees of freedom too small for the dimension.
    #[error("invalid degrees of freedom: df = {df} must exceed {min} for dimension {p}")]
    InvalidDf { df: f64, min: f64, p: usize },

    /// An operation that requires a proper inverse-Wishart law got an improper one.
    #[error("improper inverse-Wishart parameters: df = {df}, dim = {p} (need df > p - 1 and SPD scale)")]
    ImproperPrior { df: f64, p: usize },

    /// Rejection sampling for the truncated inverse-Wishart gave up.
    #[error(
        "truncated sampling exhausted {attempts} attempts (acceptance rate {acceptance_rate:.3e}); widen [k1, k2]"
    )]
    TruncationExhausted { attempts: u64, acceptance_rate: f64 },

    /// A generated truth matrix failed the SPD check even after a retry.
    #[error("generated truth covariance is numerically singular (p = {p})")]
    SingularTruth { p: usize },

    /// The posterior scale matrix n*S + A is not positive definite.
    #[error("posterior scale matrix is singular (n = {n}, p = {p}, prior df = {nu})")]
    SingularPosterior { n: usize, p: usize, nu: f64 },

    /// A requested posterior/prior moment does not exist.
    #[error("moment undefined: {moment} requires {requirement}, got {actual}")]
    MomentUndefined {
        moment: &'static str,
        requirement: &'static str,
        actual: f64,
    },

    /// The tapering bandwidth must be even.
    #[error("tapering bandwidth k = {k} must be even")]
    OddK { k: usize },

    /// A closed form was requested for a loss family that has none.
    #[error("unsupported loss family for this operation: {family}")]
    UnsupportedLoss { family: String },

    /// A closed form was requested for a prior it does not cover.
    #[error("unsupported prior for this operation: {reason}")]
    UnsupportedPrior { reason: &'static str },

    /// The positivity condition of the chi-square affinity formula failed.
    #[error("affinity condition violated: inv(S1) + inv(S2) - inv(S0) is not positive definite")]
    ConditionViolated,

    /// A bound's tuning constants left their admissible range.
    #[error("constraint violated: {message}")]
    ConstraintViolated { message: String },

    /// Brute-force enumeration requested beyond its size cap.
    #[error("problem too large for brute force: p = {p} exceeds cap {max}")]
    TooLarge { p: usize, max: usize },

    /// Rate regression lacked enough usable points.
    #[error("degenerate rate fit: {reason}")]
    DegenerateFit { reason: String },

    /// A Monte Carlo replicate failed; carries the replicate index and cause.
    #[error("replicate {index} failed: {source}")]
    ReplicateFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Scenario or configuration validation failed.
    #[error("invalid configuration: {message}")]
    Config { message: String },

    /// Reading or writing a file failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Helper for configuration errors built from formatted strings.
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            message: message.into(),
        }
    }

    /// Helper for constraint violations built from formatted strings.
    pub fn constraint(message: impl Into<String>) -> Self {
        Error::ConstraintViolated {
            message: message.into(),
        }
    }
}
