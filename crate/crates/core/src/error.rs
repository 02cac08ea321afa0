use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::closed_forms::Section6Condition;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("{what} is not symmetric positive definite")]
    NotSpd { what: String },

    /// `A_j Σ A_jᵀ` is numerically singular: the objective sits on its −∞ side.
    #[error("image covariance of map {map} is numerically singular (condition {condition:e})")]
    SingularImage { map: usize, condition: f64 },

    #[error("{what} does not have orthonormal rows/columns (deviation {deviation:e})")]
    NotOrthonormal { what: &'static str, deviation: f64 },

    #[error("subspace is not critical (slack {slack})")]
    NotCritical { slack: f64 },

    #[error("subspace must be proper and nonzero (dimension {dim} of {n})")]
    TrivialSubspace { dim: usize, n: usize },

    #[error("datum is invalid ({0} issue(s))")]
    InvalidDatum(usize),

    #[error("finiteness conditions fail: {0}")]
    NotFinite(String),

    #[error("infeasible parameters, failed condition(s): {}", fmt_conditions(.0))]
    Section6Infeasible(Vec<Section6Condition>),

    #[error("no closed-form entropy for block {0}")]
    NoClosedForm(usize),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
}

fn fmt_conditions(conds: &[Section6Condition]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, c) in conds.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{c}");
    }
    out
}
