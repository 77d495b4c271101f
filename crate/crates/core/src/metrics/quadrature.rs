//! Segment integrals of the quasihyperbolic density `1 / d(z)`.

use crate::space::domain::Shape;
use crate::space::{Domain, Point};

/// Relative tolerance of segment quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-6;
const MAX_DEPTH: u32 = 40;

/// Adaptive Simpson over `[a, b]` with `panels` initial subintervals and
/// relative tolerance `rel_tol` against the coarse estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut pieces = Vec::with_capacity(panels);
    let mut coarse = 0.0;
    for i in 0..panels {
        let (l, r) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let m = 0.5 * (l + r);
        let (fl, fm, fr) = (f(l), f(m), f(r));
        let s = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
        coarse += s;
        pieces.push((l, r, fl, fm, fr, s));
    }
    if !coarse.is_finite() {
        return f64::INFINITY;
    }
    let eps = (rel_tol * coarse.abs()).max(f64::MIN_POSITIVE) / panels as f64;
    pieces
        .into_iter()
        .map(|(l, r, fl, fm, fr, s)| refine(&f, l, r, fl, fm, fr, s, eps, MAX_DEPTH))
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return f64::INFINITY;
    }
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// `ln(y / x) / (y - x)`, stable when `y` is close to `x`.
fn log_mean_inv(x: f64, y: f64) -> f64 {
    let r = (y - x) / x;
    if r.abs() < 1e-8 {
        (1.0 - 0.5 * r + r * r / 3.0) / x
    } else {
        r.ln_1p() / (y - x)
    }
}

fn integrand<'a>(domain: &'a Domain, a: &'a Point, b: &'a Point, len: f64) -> impl Fn(f64) -> f64 + 'a {
    move |t| {
        let d = domain.clearance(&a.lerp(b, t));
        if d > 0.0 {
            len / d
        } else {
            f64::INFINITY
        }
    }
}

/// Quasihyperbolic length of the segment `[a, b]`; +inf if it touches the boundary.
///
/// Exact for half-spaces (the density is affine there); adaptive Simpson otherwise.
pub fn segment_qh(domain: &Domain, a: &Point, b: &Point, rel_tol: f64) -> f64 {
    let len = domain.dist(a, b);
    if len == 0.0 {
        return 0.0;
    }
    let (da, db) = (domain.clearance(a), domain.clearance(b));
    if !(da > 0.0 && db > 0.0) {
        return f64::INFINITY;
    }
    if let Shape::HalfSpace { .. } = domain.shape {
        return len * log_mean_inv(da, db);
    }
    let panels = if da.min(db) < len { 8 } else { 2 };
    adaptive_simpson(integrand(domain, a, b, len), 0.0, 1.0, rel_tol, panels)
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Fixed 5-point Gauss-Legendre estimate; cheap objective for local descent.
pub fn segment_qh_gl5(domain: &Domain, a: &Point, b: &Point) -> f64 {
    let len = domain.dist(a, b);
    if len == 0.0 {
        return 0.0;
    }
    if let Shape::HalfSpace { .. } = domain.shape {
        let (da, db) = (domain.clearance(a), domain.clearance(b));
        if !(da > 0.0 && db > 0.0) {
            return f64::INFINITY;
        }
        return len * log_mean_inv(da, db);
    }
    let f = integrand(domain, a, b, len);
    let mut s = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
        s += w * f(0.5 * (x + 1.0));
    }
    0.5 * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_on_known_integrals() {
        let v = adaptive_simpson(|t: f64| 1.0 / (1.0 - t), 0.0, 0.999, 1e-10, 8);
        assert_relative_eq!(v, (1000.0f64).ln(), max_relative = 1e-9);
        let v = adaptive_simpson(|t: f64| t.sin(), 0.0, std::f64::consts::PI, 1e-10, 2);
        assert_relative_eq!(v, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn segment_examples() {
        let hp = Domain::upper_half_plane(None);
        let e = std::f64::consts::E;
        assert_relative_eq!(segment_qh(&hp, &Point::xy(0.0, 1.0), &Point::xy(0.0, e), 1e-6), 1.0, max_relative = 1e-12);
        assert_relative_eq!(segment_qh(&hp, &Point::xy(0.0, 1.0), &Point::xy(3.0, 1.0), 1e-6), 3.0, max_relative = 1e-12);
        let ball = Domain::unit_disk();
        assert_relative_eq!(
            segment_qh(&ball, &Point::xy(0.0, 0.0), &Point::xy(0.5, 0.0), 1e-6),
            2f64.ln(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn steep_segment_near_boundary() {
        let ball = Domain::unit_disk();
        let v = segment_qh(&ball, &Point::xy(0.0, 0.0), &Point::xy(0.999, 0.0), 1e-6);
        assert_relative_eq!(v, 1000f64.ln(), max_relative = 1e-6);
    }

    #[test]
    fn gl5_close_on_short_segments() {
        let ball = Domain::unit_disk();
        let (a, b) = (Point::xy(0.1, 0.2), Point::xy(0.15, 0.22));
        assert_relative_eq!(segment_qh_gl5(&ball, &a, &b), segment_qh(&ball, &a, &b, 1e-10), max_relative = 1e-9);
    }

    #[test]
    fn blocked_segment_is_infinite() {
        let slit = Domain::slit_disk();
        // Straight through the slit: the density blows up at the crossing.
        let v = segment_qh(&slit, &Point::xy(0.5, 0.25), &Point::xy(0.5, -0.25), 1e-6);
        assert!(v > 10.0);
    }
}
