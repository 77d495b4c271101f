use serde::Serialize;

use super::{Domain, Point};
use crate::error::{Error, Result};
use crate::metrics::quadrature::{segment_qh, DEFAULT_QUAD_TOL};

/// Interior vertex chain with cumulative norm and quasihyperbolic lengths.
///
/// Single-vertex chains are allowed so degenerate arcs flow through the arc
/// analysis as zero-valued reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    vertices: Vec<Point>,
    cum_norm: Vec<f64>,
    cum_qh: Vec<f64>,
}

impl Polyline {
    pub fn new(domain: &Domain, vertices: Vec<Point>) -> Result<Self> {
        Self::with_tol(domain, vertices, DEFAULT_QUAD_TOL)
    }

    pub fn with_tol(domain: &Domain, vertices: Vec<Point>, tol: f64) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("polyline needs a vertex".into()));
        }
        for v in &vertices {
            domain.boundary_distance(v)?;
        }
        let mut cum_norm = Vec::with_capacity(vertices.len());
        let mut cum_qh = Vec::with_capacity(vertices.len());
        cum_norm.push(0.0);
        cum_qh.push(0.0);
        for (i, w) in vertices.windows(2).enumerate() {
            if !domain.segment_in_domain(&w[0], &w[1]) {
                return Err(Error::CurveNotInDomain { segment: i });
            }
            cum_norm.push(cum_norm[i] + domain.dist(&w[0], &w[1]));
            cum_qh.push(cum_qh[i] + segment_qh(domain, &w[0], &w[1], tol));
        }
        Ok(Self { vertices, cum_norm, cum_qh })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn first(&self) -> Point {
        self.vertices[0]
    }

    pub fn last(&self) -> Point {
        *self.vertices.last().expect("non-empty")
    }

    pub fn cum_norm(&self) -> &[f64] {
        &self.cum_norm
    }

    pub fn cum_qh(&self) -> &[f64] {
        &self.cum_qh
    }

    pub fn norm_length(&self) -> f64 {
        *self.cum_norm.last().expect("non-empty")
    }

    pub fn qh_length(&self) -> f64 {
        *self.cum_qh.last().expect("non-empty")
    }

    /// Quasihyperbolic length of the subarc between vertices `i <= j`.
    pub fn sub_qh(&self, i: usize, j: usize) -> f64 {
        self.cum_qh[j] - self.cum_qh[i]
    }

    pub fn sub_norm(&self, i: usize, j: usize) -> f64 {
        self.cum_norm[j] - self.cum_norm[i]
    }

    pub fn reversed(&self, domain: &Domain) -> Result<Self> {
        let mut v = self.vertices.clone();
        v.reverse();
        Self::new(domain, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_lengths() {
        let hp = Domain::upper_half_plane(None);
        let e = std::f64::consts::E;
        let line = Polyline::new(&hp, vec![Point::xy(0.0, 1.0), Point::xy(0.0, e), Point::xy(0.0, e * e)]).unwrap();
        assert!((line.qh_length() - 2.0).abs() < 1e-12);
        assert!((line.sub_qh(1, 2) - 1.0).abs() < 1e-12);
        assert!(line.cum_norm().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_invalid_curves() {
        let slit = Domain::slit_disk();
        let err = Polyline::new(&slit, vec![Point::xy(0.5, 0.2), Point::xy(0.5, -0.2)]).unwrap_err();
        assert!(matches!(err, Error::CurveNotInDomain { segment: 0 }));
        let err = Polyline::new(&slit, vec![Point::xy(0.5, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::PointNotInDomain(_)));
    }

    #[test]
    fn additive_over_concatenation() {
        let ball = Domain::unit_disk();
        let pts = vec![Point::xy(-0.6, 0.1), Point::xy(0.0, 0.5), Point::xy(0.7, 0.0)];
        let whole = Polyline::new(&ball, pts.clone()).unwrap();
        let a = Polyline::new(&ball, pts[..2].to_vec()).unwrap();
        let b = Polyline::new(&ball, pts[1..].to_vec()).unwrap();
        assert!((whole.qh_length() - a.qh_length() - b.qh_length()).abs() < 1e-12);
    }
}
