//! Numerics for unified entropy-power / Brascamp-Lieb data.
//!
//! A datum `(A, c, r, d)` couples linear maps `A_j: R^n -> R^{n_j}` with
//! exponents `c_j` and a block partition `r` of `R^n` with exponents `d_i`.
//! The quantity of interest is
//!
//! ```text
//! M = sup  Σ_i d_i h(X_i) − Σ_j c_j h(A_j X)
//! ```
//!
//! over random vectors with independent blocks `X_i`. The supremum equals
//! its restriction to Gaussian inputs, so everything here is built around
//! the Gaussian objective:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`datum`] | data model, validation, named special cases |
//! | [`subspace`] | product-form subspaces, image dimensions, criticality slack |
//! | [`finiteness`] | finite / infinite verdicts, witnesses, split certificates |
//! | [`gauss`] | Gaussian objective, gradient, multi-start maximizer, doubling identities |
//! | [`closed_forms`] | EPI, Zamir-Feder / Cauchy-Binet, the two-plus-one dependent example |
//! | [`estimate`] | sampling, k-NN entropy, Monte Carlo check of the inequality |
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line driver live in the `blepi` companion crate.
//!
//! All entropies are in nats.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod closed_forms;
pub mod datum;
pub mod error;
pub mod estimate;
pub mod finiteness;
pub mod gauss;
pub mod linalg;
pub mod rng;
pub mod special;
pub mod subspace;

pub use datum::{BlepDatum, IssueCode, Location, Partition, ValidationIssue, ValidationReport};
pub use error::{Error, Result};
pub use estimate::{EntropyEstimate, EstimationMethod, SampleModel, VerificationReport};
pub use finiteness::{FinitenessOptions, FinitenessVerdict, SplitTree, Verdict, Witness};
pub use gauss::{BlockCovariance, GaussianSolveResult, PerturbationParams, SolverOptions};
pub use subspace::{ProductSubspace, SearchBudget, SlackResult};

/// `|slack| <= CRITICAL_TOL` declares a product subspace critical.
pub const CRITICAL_TOL: f64 = 1e-7;

/// Tolerance on the scaling residual `Σ d_i r_i − Σ c_j n_j`.
pub const SCALING_TOL: f64 = 1e-9;
