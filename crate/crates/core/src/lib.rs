//! Numerical laboratory for the fractional Hardy parabolic equation
//! `u_t + (-Delta)^{theta/2} u = |x|^{-gamma} u^p`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod error;
pub mod field;
pub mod format;
pub mod harness;
pub mod kernel;
pub mod lowerbound;
pub mod measure;
pub mod picard;
pub mod problem;
pub mod profiles;
pub mod quadrature;
pub mod semigroup;

pub use error::{Error, Result};
