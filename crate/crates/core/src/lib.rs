//! Von Neumann entropy estimation from a handful of integer Rényi entropies.
//!
//! The estimator maps the Rényi function's strip of analyticity onto the unit
//! disk, then picks the residue `α` at the von Neumann point that minimizes
//! the boundary norm of the interpolating function. Exact data admit a closed
//! form; noisy data with a covariance matrix go through a χ²-constrained
//! minimal-norm problem solved with a single Lagrange multiplier.
//!
//! Around the estimator sit the pieces needed to benchmark it: exact
//! quantum states and entropies ([`quantum`]), a randomized-measurement
//! simulator with batch shadows and jackknife covariances ([`shadows`]),
//! polynomial extrapolation baselines ([`baselines`]) and the batch
//! pipeline behind the `sac` binary ([`pipeline`]).

// NaN has to fail the range checks, so `!(x > 0.0)` is kept on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod conformal;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod pipeline;
pub mod quantum;
pub mod shadows;
pub mod special;

pub use conformal::{ConformalParams, DiskPoints, W0Rule};
pub use error::{Error, Result};
pub use estimator::{estimate, estimate_noiseless, estimate_noisy, RenyiDataset, SacEstimate};
pub use kernel::KernelMatrix;
