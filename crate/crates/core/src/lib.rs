//! Computational laboratory for quasihyperbolic geometry in finite-dimensional
//! normed spaces.

// `!(x >= y)` is how NaN inputs are rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arcs;
pub mod error;
pub mod lab;
pub mod ledger;
pub mod mappings;
pub mod metrics;
pub mod space;
pub mod uniformity;

pub use error::{Error, Result};
