use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{k_between_with, k_lower_bound, QHGraph, RefineParams};
use crate::space::{Domain, Point, Polyline};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeargeodesicOptions {
    /// Rebuilds at half the resolution after a failed verification.
    pub retries: usize,
    pub refine: RefineParams,
}

impl Default for NeargeodesicOptions {
    fn default() -> Self {
        Self { retries: 4, refine: RefineParams::default() }
    }
}

/// Worst vertex pair `(i, j, ratio)` of `sub_qh(i, j) / k_lower(v_i, v_j)`.
/// Coincident vertices are skipped; a single vertex gives ratio 0.
pub fn neargeodesic_worst(domain: &Domain, curve: &Polyline) -> Result<(usize, usize, f64)> {
    let n = curve.len();
    let v = curve.vertices();
    let rows: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = (i, i, 0.0f64);
            for j in i + 1..n {
                let len = curve.sub_qh(i, j);
                if len == 0.0 {
                    continue;
                }
                let k = k_lower_bound(domain, &v[i], &v[j])?;
                let ratio = if k > 0.0 { len / k } else { f64::INFINITY };
                if ratio > worst.2 {
                    worst = (i, j, ratio);
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold((0, 0, 0.0), |w, r| if r.2 > w.2 { r } else { w }))
}

/// Refined graph witness between `z1` and `z2`, verified to be a
/// `nu`-neargeodesic against certified lower bounds.
pub fn construct_neargeodesic(domain: &Domain, z1: &Point, z2: &Point, nu: f64, graph: &QHGraph) -> Result<Polyline> {
    construct_neargeodesic_with(domain, z1, z2, nu, graph, &NeargeodesicOptions::default())
}

pub fn construct_neargeodesic_with(
    domain: &Domain,
    z1: &Point,
    z2: &Point,
    nu: f64,
    graph: &QHGraph,
    opts: &NeargeodesicOptions,
) -> Result<Polyline> {
    if !(nu > 1.0) {
        return Err(Error::InvalidParameter(format!("nu must exceed 1, got {nu}")));
    }
    let mut fine: Option<QHGraph> = None;
    let mut last = None;
    for attempt in 0..=opts.retries {
        if attempt > 0 {
            let base = fine.as_ref().unwrap_or(graph);
            let mut p = base.params().clone();
            p.resolution *= 0.5;
            p.min_clearance *= 0.5;
            fine = Some(QHGraph::build(domain, &p)?);
        }
        let g = fine.as_ref().unwrap_or(graph);
        let est = k_between_with(domain, z1, z2, g, &opts.refine)?;
        let (i, j, ratio) = neargeodesic_worst(domain, &est.witness)?;
        if ratio <= nu {
            return Ok(est.witness);
        }
        last = Some((i, j, ratio));
    }
    let (i, j, ratio) = last.expect("at least one attempt");
    Err(Error::VerificationFailed { i, j, ratio, nu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::solidity::solidity_profile;
    use crate::metrics::build_qh_graph;

    #[test]
    fn vertical_segment_verifies() {
        let hp = Domain::upper_half_plane(Some((Point::xy(-3.0, 0.0), Point::xy(3.0, 4.0))));
        let g = build_qh_graph(&hp, 0.1, 8, 1).unwrap();
        let e = std::f64::consts::E;
        let line = construct_neargeodesic(&hp, &Point::xy(0.0, 1.0), &Point::xy(0.0, e), 2.0, &g).unwrap();
        let (_, _, ratio) = neargeodesic_worst(&hp, &line).unwrap();
        assert!(ratio <= 1.01, "{ratio}");
    }

    #[test]
    fn ball_diameter_verifies() {
        let ball = Domain::unit_disk();
        let g = build_qh_graph(&ball, 0.05, 8, 1).unwrap();
        let line = construct_neargeodesic(&ball, &Point::xy(-0.5, 0.0), &Point::xy(0.5, 0.0), 2.0, &g).unwrap();
        assert_eq!(line.first(), Point::xy(-0.5, 0.0));
        assert_eq!(line.last(), Point::xy(0.5, 0.0));
        // Oracle: the diameter has qh length 2 log 2.
        assert!(line.qh_length() <= 2.0 * 2f64.ln() * 1.01, "{}", line.qh_length());
    }

    #[test]
    fn slit_pair_goes_around_the_tip() {
        let slit = Domain::slit_disk();
        let g = build_qh_graph(&slit, 0.02, 8, 1).unwrap();
        let (a, b) = (Point::xy(0.5, 0.1), Point::xy(0.5, -0.1));
        let line = construct_neargeodesic(&slit, &a, &b, 2.0, &g).unwrap();
        assert!(line.vertices().iter().any(|v| v.x() < 0.0));
        let (_, _, ratio) = neargeodesic_worst(&slit, &line).unwrap();
        assert!(ratio <= 2.0);
        // A verified neargeodesic is solid at every h.
        for h in [0.0, 0.1, 1.0] {
            let r = solidity_profile(&slit, &line, h, &g).unwrap();
            assert!(r.nu_estimate <= 2.0 + 1e-9, "h = {h}: {}", r.nu_estimate);
        }
    }

    #[test]
    fn failure_names_the_worst_pair() {
        let ball = Domain::unit_disk();
        let g = build_qh_graph(&ball, 0.2, 8, 1).unwrap();
        let opts = NeargeodesicOptions { retries: 0, refine: RefineParams::disabled() };
        let err =
            construct_neargeodesic_with(&ball, &Point::xy(-0.5, 0.0), &Point::xy(0.5, 0.0), 1.0 + 1e-9, &g, &opts)
                .unwrap_err();
        assert!(matches!(err, Error::VerificationFailed { .. }));
        assert!(matches!(
            construct_neargeodesic(&ball, &Point::xy(0.0, 0.0), &Point::xy(0.1, 0.0), 1.0, &g),
            Err(Error::InvalidParameter(_))
        ));
    }
}
