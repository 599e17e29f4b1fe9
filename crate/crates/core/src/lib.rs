//! Feedback control of a resonantly driven two-level atom under homodyne
//! detection.
//!
//! Units: the spontaneous emission rate is 1. States live in the x-z plane of
//! the Bloch sphere and are written `(r, theta)` with `theta = atan2(x, z)`.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod bloch;
mod error;
pub mod markov;
pub mod quadrature;
pub mod trajectory;

pub use error::{Error, Result};
