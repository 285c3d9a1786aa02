//! covlab: a numerical laboratory for Bayesian covariance estimation.
//!
//! The crate provides, layer by layer:
//!
//! - [`matcore`]: symmetric/SPD matrix types with Cholesky, a deterministic
//!   Jacobi eigensolver, spectral matrix functions, and norms.
//! - [`specialfn`]: log-gamma, digamma, and trigamma with strict domain
//!   checking.
//! - [`randmat`]: a splittable counter-based RNG and samplers for Gaussian
//!   data, Wishart and inverse-Wishart matrices, and truncated variants.
//! - [`losses`]: squared spectral/Frobenius losses, Bregman divergences
//!   generated by spectral potentials, and scalar log-determinant loss.
//! - [`estimators`]: conjugate posterior updates, posterior means and
//!   element variances, mixture and truncated posteriors, tapering, and
//!   log-determinant point estimators.
//! - [`risk`]: Monte Carlo posterior-expected loss and integrated risk with
//!   paired sampling, closed-form fast paths, and rate fitting.
//! - [`bounds`]: minimax lower-bound calculators (two-point, hypercube, and
//!   affinity-based) with exact small-p cross-checks.
//! - [`cli`]: the `covlab` command-line front end (simulate / rates /
//!   bounds / verify).
//!
//! Everything is deterministic given a base seed: runs are reproducible
//! bit-for-bit across thread counts and process restarts.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod losses;
pub mod matcore;
pub mod randmat;
pub mod risk;
pub mod specialfn;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use matcore::{EigenDecomp, SpdMatrix, SymmetricMatrix};
