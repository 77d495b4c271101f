use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};

use super::norm::Point;

/// Euclidean k-nearest-neighbour index over 2D or 3D points.
pub enum KdIndex {
    D2(ImmutableKdTree<f64, 2>),
    D3(ImmutableKdTree<f64, 3>),
}

impl KdIndex {
    pub fn new(points: &[Point]) -> Self {
        match points.first().map(Point::dim).unwrap_or(2) {
            2 => {
                let v: Vec<[f64; 2]> = points.iter().map(|p| [p.x(), p.y()]).collect();
                KdIndex::D2(ImmutableKdTree::new_from_slice(&v).expect("finite points"))
            }
            _ => {
                let v: Vec<[f64; 3]> = points.iter().map(|p| p.padded()).collect();
                KdIndex::D3(ImmutableKdTree::new_from_slice(&v).expect("finite points"))
            }
        }
    }

    /// Indices of the `k` nearest points with Euclidean distances, nearest first.
    pub fn nearest(&self, q: &Point, k: usize) -> Vec<(usize, f64)> {
        let Some(k) = NonZero::new(k) else { return Vec::new() };
        let mut out: Vec<(usize, f64)> = match self {
            KdIndex::D2(t) => t
                .query(&[q.x(), q.y()])
                .nearest_n::<SquaredEuclidean<f64>>(k)
                .execute()
                .into_iter()
                .map(|r| (r.item as usize, r.distance.sqrt()))
                .collect(),
            KdIndex::D3(t) => t
                .query(&q.padded())
                .nearest_n::<SquaredEuclidean<f64>>(k)
                .execute()
                .into_iter()
                .map(|r| (r.item as usize, r.distance.sqrt()))
                .collect(),
        };
        // Ties broken by index so results never depend on tree internals.
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

impl std::fmt::Debug for KdIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("KdIndex")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_brute_force() {
        let pts: Vec<Point> = (0..400).map(|i| Point::xy((i % 20) as f64 * 0.1, (i / 20) as f64 * 0.13)).collect();
        let idx = KdIndex::new(&pts);
        let q = Point::xy(0.77, 1.01);
        let got = idx.nearest(&q, 6);
        let mut brute: Vec<(usize, f64)> =
            pts.iter().enumerate().map(|(i, p)| (i, (*p - q).euclid())).collect();
        brute.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        for (g, b) in got.iter().zip(&brute) {
            assert!((g.1 - b.1).abs() < 1e-12);
        }
    }
}
