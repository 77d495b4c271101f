//! Exact orientation-based predicates for 2D visibility.

use robust::{orient2d, Coord};

use super::norm::Point;

fn c(p: &Point) -> Coord<f64> {
    Coord { x: p.x(), y: p.y() }
}

/// Sign of the orientation determinant of (a, b, p): +1 left turn, -1 right turn, 0 collinear.
pub fn orient(a: &Point, b: &Point, p: &Point) -> i8 {
    let v = orient2d(c(a), c(b), c(p));
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn in_box(a: &Point, b: &Point, p: &Point) -> bool {
    p.x() >= a.x().min(b.x())
        && p.x() <= a.x().max(b.x())
        && p.y() >= a.y().min(b.y())
        && p.y() <= a.y().max(b.y())
}

/// Whether `p` lies on the closed segment `[a, b]` (2D, exact).
pub fn on_segment_2d(a: &Point, b: &Point, p: &Point) -> bool {
    orient(a, b, p) == 0 && in_box(a, b, p)
}

/// Whether closed segments `[a, b]` and `[p, q]` share at least one point (2D, exact).
pub fn segments_intersect(a: &Point, b: &Point, p: &Point, q: &Point) -> bool {
    let d1 = orient(p, q, a);
    let d2 = orient(p, q, b);
    let d3 = orient(a, b, p);
    let d4 = orient(a, b, q);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && in_box(p, q, a))
        || (d2 == 0 && in_box(p, q, b))
        || (d3 == 0 && in_box(a, b, p))
        || (d4 == 0 && in_box(a, b, q))
}

/// Whether `p` lies on the closed segment `[a, b]` in 2D or 3D.
///
/// In 3D collinearity holds iff every coordinate-plane projection is collinear,
/// since those projections are exactly the components of the cross product.
pub fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    if a.dim() == 2 {
        return on_segment_2d(a, b, p);
    }
    let proj = |u: &Point, i: usize, j: usize| Point::xy(u.coords()[i], u.coords()[j]);
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if orient(&proj(a, i, j), &proj(b, i, j), &proj(p, i, j)) != 0 {
            return false;
        }
    }
    (0..3).all(|i| {
        let (x, y, z) = (a.coords()[i], b.coords()[i], p.coords()[i]);
        z >= x.min(y) && z <= x.max(y)
    })
}

/// Even-odd containment in a closed polygon loop (vertices not repeated).
/// Points on the boundary are reported by `on_polygon_boundary`, not here.
pub fn point_in_polygon(vertices: &[Point], p: &Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (&vertices[i], &vertices[j]);
        if (vi.y() > p.y()) != (vj.y() > p.y()) {
            // Crossing test with exact orientation relative to the upward edge.
            let o = if vi.y() > vj.y() { orient(vj, vi, p) } else { orient(vi, vj, p) };
            if o > 0 {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_touching() {
        let (a, b) = (Point::xy(0.5, 0.2), Point::xy(0.5, -0.2));
        let (p, q) = (Point::xy(0.0, 0.0), Point::xy(1.0, 0.0));
        assert!(segments_intersect(&a, &b, &p, &q));
        let (a, b) = (Point::xy(-0.5, 0.2), Point::xy(-0.5, -0.2));
        assert!(!segments_intersect(&a, &b, &p, &q));
        // Touching the slit endpoint counts as contact.
        assert!(segments_intersect(&Point::xy(0.0, 1.0), &Point::xy(0.0, -1.0), &p, &q));
        // Collinear overlap.
        assert!(segments_intersect(&Point::xy(-1.0, 0.0), &Point::xy(0.1, 0.0), &p, &q));
        assert!(!segments_intersect(&Point::xy(-1.0, 0.0), &Point::xy(-0.1, 0.0), &p, &q));
    }

    #[test]
    fn near_degenerate_is_exact() {
        // A point 1 ulp off the line through (0,0)-(1,1) is not collinear.
        let a = Point::xy(0.0, 0.0);
        let b = Point::xy(1.0, 1.0);
        let p = Point::xy(0.5, f64::from_bits(0.5f64.to_bits() + 1));
        assert_ne!(orient(&a, &b, &p), 0);
        assert!(!on_segment_2d(&a, &b, &p));
        assert!(on_segment_2d(&a, &b, &Point::xy(0.5, 0.5)));
    }

    #[test]
    fn collinearity_in_3d() {
        let a = Point::xyz(0.0, 0.0, 0.0);
        let b = Point::xyz(2.0, 2.0, 2.0);
        assert!(on_segment(&a, &b, &Point::xyz(1.0, 1.0, 1.0)));
        assert!(!on_segment(&a, &b, &Point::xyz(1.0, 1.0, 1.0 + 1e-15)));
        assert!(!on_segment(&a, &b, &Point::xyz(3.0, 3.0, 3.0)));
    }

    #[test]
    fn polygon_containment() {
        let sq = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0), Point::xy(0.0, 1.0)];
        assert!(point_in_polygon(&sq, &Point::xy(0.5, 0.5)));
        assert!(!point_in_polygon(&sq, &Point::xy(1.5, 0.5)));
        let cw: Vec<_> = sq.iter().rev().copied().collect();
        assert!(point_in_polygon(&cw, &Point::xy(0.5, 0.5)));
    }
}
