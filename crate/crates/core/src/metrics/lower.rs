//! Closed-form metric values and certified lower bounds for `k_D`.
//!
//! Beyond `j_D`, lower bounds come from superdomains whose quasihyperbolic (or
//! hyperbolic, when its density is dominated by `1 / d`) distance is explicit:
//! `D ⊂ G` implies `d_D <= d_G`, hence `k_D >= k_G`. These bounds need the
//! Euclidean norm; other norms fall back to `j_D`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::space::domain::{Obstacle, Shape};
use crate::space::predicates::orient;
use crate::space::{Domain, Point};

/// `log(1 + |z1 - z2| / min(d(z1), d(z2)))`.
pub fn j_metric(domain: &Domain, z1: &Point, z2: &Point) -> Result<f64> {
    let d1 = domain.boundary_distance(z1)?;
    let d2 = domain.boundary_distance(z2)?;
    Ok((domain.dist(z1, z2) / d1.min(d2)).ln_1p())
}

/// `|log(d(z2) / d(z1))|`.
pub fn log_ratio(domain: &Domain, z1: &Point, z2: &Point) -> Result<f64> {
    let d1 = domain.boundary_distance(z1)?;
    let d2 = domain.boundary_distance(z2)?;
    Ok((d2 / d1).ln().abs())
}

/// Best certified analytic lower bound on `k_D(z1, z2)`.
pub fn k_lower_bound(domain: &Domain, z1: &Point, z2: &Point) -> Result<f64> {
    let j = j_metric(domain, z1, z2)?;
    let lr = log_ratio(domain, z1, z2)?;
    let mut best = j.max(lr);
    if z1 != z2 && domain.norm().is_euclidean() {
        best = best.max(shape_bound(&domain.shape, z1, z2));
    }
    Ok(best)
}

/// Local upper bound `log(1 + r / (d(z1) - r))`, valid when `r = |z1 - z2| < d(z1)`.
/// `None` outside that range.
pub fn k_upper_local(domain: &Domain, z1: &Point, z2: &Point) -> Result<Option<f64>> {
    let d1 = domain.boundary_distance(z1)?;
    domain.boundary_distance(z2)?;
    let r = domain.dist(z1, z2);
    if r < d1 {
        Ok(Some((r / (d1 - r)).ln_1p()))
    } else {
        Ok(None)
    }
}

/// `log(d / (d - r))`, the same bound in the form used for segment checks.
pub fn segment_log_bound(d1: f64, r: f64) -> f64 {
    -(-r / d1).ln_1p()
}

/// `r / (1 - r/2) <= log(1 / (1 - r)) <= r / (1 - r)` for `r` in `[0, 1)`.
pub fn log_inequality_holds(r: f64) -> bool {
    let mid = -(-r).ln_1p();
    r / (1.0 - 0.5 * r) <= mid && mid <= r / (1.0 - r)
}

/// `arccosh(1 + x)` without cancellation for small `x`.
fn acosh1p(x: f64) -> f64 {
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// Distance in a half-space whose boundary distance is `d(z) = <n, z> - o`, `|n| = 1`.
fn half_space_k(n: &Point, o: f64, z1: &Point, z2: &Point) -> f64 {
    let (d1, d2) = (n.dot(z1) - o, n.dot(z2) - o);
    if !(d1 > 0.0 && d2 > 0.0) {
        return 0.0;
    }
    let delta = *z1 - *z2;
    acosh1p(delta.dot(&delta) / (2.0 * d1 * d2))
}

fn collinear(a: &Point, b: &Point, c: &Point) -> bool {
    if a.dim() == 2 {
        return orient(a, b, c) == 0;
    }
    let proj = |u: &Point, i: usize, j: usize| Point::xy(u.coords()[i], u.coords()[j]);
    [(0, 1), (1, 2), (0, 2)]
        .iter()
        .all(|&(i, j)| orient(&proj(a, i, j), &proj(b, i, j), &proj(c, i, j)) == 0)
}

/// Lower bound for the ball `B(c, r)`.
fn ball_k(c: &Point, r: f64, z1: &Point, z2: &Point) -> f64 {
    let (v1, v2) = (*z1 - *c, *z2 - *c);
    let (s1, s2) = (v1.euclid(), v2.euclid());
    if !(s1 < r && s2 < r) {
        return 0.0;
    }
    // On a common ray from the centre the radial segment is a geodesic.
    if s1 == 0.0 || s2 == 0.0 || (collinear(c, z1, z2) && v1.dot(&v2) > 0.0) {
        return ((r - s2) / (r - s1)).ln().abs();
    }
    let mut best = 0.0f64;
    // Supporting half-spaces at the boundary points nearest z1, z2 and their bisector.
    let mid = v1 * (1.0 / s1) + v2 * (1.0 / s2);
    for u in [v1 * (1.0 / s1), v2 * (1.0 / s2), mid * (1.0 / mid.euclid())] {
        if !u.is_finite() {
            continue;
        }
        best = best.max(half_space_k(&-u, -r - c.dot(&u), z1, z2));
    }
    // Hyperbolic distance; 1/d = ((r + |z|) / 2r) * hyperbolic density.
    let delta = *z1 - *z2;
    let x = 2.0 * r * r * delta.dot(&delta) / ((r - s1) * (r + s1) * (r - s2) * (r + s2));
    let rho = acosh1p(x);
    // Either the curve stays outside B(c, m) or it reaches radius m.
    let top = s1.min(s2);
    const STEPS: usize = 64;
    for k in 0..=STEPS {
        let m = top * k as f64 / STEPS as f64;
        let stay = (r + m) / (2.0 * r) * rho;
        let dive = ((r - m) / (r - s1)).ln() + ((r - m) / (r - s2)).ln();
        best = best.max(stay.min(dive));
    }
    best
}

/// Exact distance in the punctured space `R^n \ {p}`.
fn punctured_k(p: &Point, z1: &Point, z2: &Point) -> f64 {
    let (v1, v2) = (*z1 - *p, *z2 - *p);
    let (a, b) = (v1.euclid(), v2.euclid());
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let cross = if v1.dim() == 2 {
        (v1.x() * v2.y() - v1.y() * v2.x()).abs()
    } else {
        let (x, y) = (v1.coords(), v2.coords());
        Point::xyz(x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]).euclid()
    };
    let theta = cross.atan2(v1.dot(&v2));
    (theta * theta + (a / b).ln().powi(2)).sqrt()
}

/// Hyperbolic distance of the plane slit along the ray from `p` through `q`.
/// Its density is at most `1 / d` there, so it bounds `k` from below.
fn slit_plane_k(p: &Point, q: &Point, z1: &Point, z2: &Point) -> f64 {
    let u = *q - *p;
    let u = u * (1.0 / u.euclid());
    let root = |z: &Point| {
        let w = *z - *p;
        // Rotate so the ray becomes the positive real axis.
        let (re, im) = (w.x() * u.x() + w.y() * u.y(), w.y() * u.x() - w.x() * u.y());
        let mut arg = im.atan2(re);
        if arg < 0.0 {
            arg += 2.0 * PI;
        }
        let m = (re * re + im * im).sqrt().sqrt();
        Point::xy(m * (0.5 * arg).cos(), m * (0.5 * arg).sin())
    };
    let (w1, w2) = (root(z1), root(z2));
    if !(w1.y() > 0.0 && w2.y() > 0.0) {
        return 0.0;
    }
    let delta = w1 - w2;
    acosh1p(delta.dot(&delta) / (2.0 * w1.y() * w2.y()))
}

fn shape_bound(shape: &Shape, z1: &Point, z2: &Point) -> f64 {
    match shape {
        Shape::Ball { center, radius } => ball_k(center, *radius, z1, z2),
        Shape::HalfSpace { normal, offset, .. } => half_space_k(normal, *offset, z1, z2),
        Shape::SlitBall { center, radius, p, q } => {
            let mut b = ball_k(center, *radius, z1, z2).max(punctured_k(p, z1, z2)).max(punctured_k(q, z1, z2));
            if (*q - *center).euclid() >= radius * (1.0 - 1e-12) {
                b = b.max(slit_plane_k(p, q, z1, z2));
            }
            b
        }
        Shape::PuncturedBall { center, radius, puncture } => {
            ball_k(center, *radius, z1, z2).max(punctured_k(puncture, z1, z2))
        }
        Shape::Annulus { center, r_out, .. } => ball_k(center, *r_out, z1, z2).max(punctured_k(center, z1, z2)),
        Shape::Polygon(poly) => {
            let n = poly.vertices.len();
            let edge_bound = |i: usize| {
                if !poly.supporting[i] {
                    return 0.0;
                }
                let (a, b) = (poly.vertices[i], poly.vertices[(i + 1) % n]);
                let t = b - a;
                let inner = Point::xy(-t.y(), t.x()) * (poly.orientation as f64 / t.euclid());
                half_space_k(&inner, inner.dot(&a), z1, z2)
            };
            if n <= 64 {
                (0..n).map(edge_bound).fold(0.0, f64::max)
            } else {
                let norm = crate::space::Norm::Euclidean;
                [z1, z2, &z1.midpoint(z2)]
                    .iter()
                    .filter_map(|z| poly.bvh.nearest(z, &norm))
                    .map(|(_, i)| edge_bound(i))
                    .fold(0.0, f64::max)
            }
        }
        Shape::Intersection(parts) => parts.iter().map(|p| shape_bound(p, z1, z2)).fold(0.0, f64::max),
        Shape::ComplementInBox { lo, hi, obstacle } => {
            let dim = lo.dim();
            let mut b = 0.0f64;
            for i in 0..dim {
                let e = Point::axis(dim, i);
                b = b.max(half_space_k(&e, lo.coords()[i], z1, z2));
                b = b.max(half_space_k(&-e, -hi.coords()[i], z1, z2));
            }
            let hole = match obstacle {
                Obstacle::Ball { center, .. } => *center,
                Obstacle::Box { lo, hi } => lo.midpoint(hi),
            };
            b.max(punctured_k(&hole, z1, z2))
        }
    }
}
