//! Local mixture models of order four and finite mixtures of them.
//!
//! A local mixture model (LMM) perturbs an exponential-family density
//! `f(x; mu0)` by its first four derivatives in the mean,
//!
//! ```text
//! g(x; lambda) = f(x; mu0) * (1 + sum_j lambda_j q_j(x; mu0)),   q_j = f^(j) / f,
//! ```
//!
//! and is a density exactly when `lambda` lies in the convex set of
//! coefficients keeping the bracket nonnegative on the whole sample space.
//! Mixing several such models over a fixed grid of anchor means gives an
//! identifiable parameter space for general mixtures; [`emfit::fit`]
//! estimates one while pruning components that the data cannot support.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and simulation live in the companion `locmix` crate.
//!
//! Modules:
//! - [`expfam`]: base densities, derivative-ratio polynomials and fifth
//!   derivative envelopes.
//! - [`lmm`]: LMM densities, moments, and the geometry of the parameter space.
//! - [`gridsel`]: support-point grids from a sup-norm tolerance.
//! - [`emfit`]: the pruning classification-EM fit.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod math;
pub mod poly;
pub mod quad;

pub mod emfit;
pub mod expfam;
pub mod gridsel;
pub mod lmm;

pub use error::{Error, Result};
pub use expfam::BaseFamily;
pub use lmm::{FeasibilityReport, FeasibilityStatus, Lambda, Lmm};
