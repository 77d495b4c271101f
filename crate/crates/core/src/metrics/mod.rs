//! Distance-ratio metric, quasihyperbolic length, and two-sided `k_D` estimates.

pub mod cache;
pub mod geodesic;
pub mod graph;
pub mod lower;
pub mod quadrature;

pub use geodesic::{k_between, k_between_with, refinement_study, PairEstimate, RefineParams};
pub use graph::{build_qh_graph, GraphParams, QHGraph};
pub use lower::{j_metric, k_lower_bound, k_upper_local, log_ratio};

use crate::error::Result;
use crate::space::{Domain, Polyline};

/// Quasihyperbolic length of a validated polyline.
pub fn qh_length(domain: &Domain, curve: &Polyline) -> Result<f64> {
    // Re-validate: the curve may have been built for another domain.
    let line = Polyline::new(domain, curve.vertices().to_vec())?;
    Ok(line.qh_length())
}
