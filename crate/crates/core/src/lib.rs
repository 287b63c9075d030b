//! Symmetric inclusion and exclusion processes on finite graphs, their
//! dualities, and executable versions of their correlation inequalities.
//!
//! Exact parts (duality residuals, detailed balance, absorption
//! probabilities) are computed over arbitrary-precision rationals; semigroups
//! use uniformization with a certified truncation bound; Monte Carlo
//! estimators carry standard errors.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod duality;
pub mod engine;
pub mod error;
pub mod inequalities;
pub mod measures;
pub mod model;
pub mod montecarlo;
pub mod num;
pub mod suite;

pub use error::{Error, Result};
