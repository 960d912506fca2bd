//! Numerical laboratory for U(n)-invariant Kähler metrics on Cⁿ generated by
//! a radial profile ξ(r).

// Negated comparisons reject NaN on purpose; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod conditions;
pub mod config;
pub mod curvature;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod perturbation;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod synthesis;

pub use error::{Error, Result};
