//! Bounding-volume hierarchy over 2D segments.

use super::norm::{Norm, Point};
use super::predicates::segments_intersect;

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Aabb {
    fn of_segment(a: &Point, b: &Point) -> Self {
        Self {
            lo: [a.x().min(b.x()), a.y().min(b.y())],
            hi: [a.x().max(b.x()), a.y().max(b.y())],
        }
    }

    fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            lo: [self.lo[0].min(o.lo[0]), self.lo[1].min(o.lo[1])],
            hi: [self.hi[0].max(o.hi[0]), self.hi[1].max(o.hi[1])],
        }
    }

    fn overlaps(&self, o: &Aabb) -> bool {
        self.lo[0] <= o.hi[0] && o.lo[0] <= self.hi[0] && self.lo[1] <= o.hi[1] && o.lo[1] <= self.hi[1]
    }

    /// Exact norm distance from `z` to the box; valid for every monotone norm.
    fn dist(&self, z: &Point, norm: &Norm) -> f64 {
        let gx = (self.lo[0] - z.x()).max(0.0).max(z.x() - self.hi[0]);
        let gy = (self.lo[1] - z.y()).max(0.0).max(z.y() - self.hi[1]);
        norm.norm(&Point::xy(gx, gy))
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, edges: Vec<u32> },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Segment soup with nearest-segment and intersection queries.
#[derive(Clone, Debug)]
pub struct SegmentBvh {
    segments: Vec<(Point, Point)>,
    nodes: Vec<Node>,
}

impl SegmentBvh {
    pub fn new(segments: Vec<(Point, Point)>) -> Self {
        let mut bvh = SegmentBvh { segments, nodes: Vec::new() };
        let mut idx: Vec<u32> = (0..bvh.segments.len() as u32).collect();
        if !idx.is_empty() {
            bvh.build(&mut idx);
        }
        bvh
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segments
    }

    fn seg_box(&self, i: u32) -> Aabb {
        let (a, b) = &self.segments[i as usize];
        Aabb::of_segment(a, b)
    }

    fn build(&mut self, idx: &mut [u32]) -> usize {
        let bounds = idx
            .iter()
            .map(|&i| self.seg_box(i))
            .reduce(|a, b| a.union(&b))
            .expect("non-empty slice");
        if idx.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, edges: idx.to_vec() });
            return self.nodes.len() - 1;
        }
        let axis = if bounds.hi[0] - bounds.lo[0] >= bounds.hi[1] - bounds.lo[1] { 0 } else { 1 };
        let key = |s: &(Point, Point)| s.0.coords()[axis] + s.1.coords()[axis];
        idx.sort_by(|&i, &j| {
            key(&self.segments[i as usize]).total_cmp(&key(&self.segments[j as usize]))
        });
        let mid = idx.len() / 2;
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { bounds, edges: Vec::new() });
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l);
        let right = self.build(r);
        self.nodes[slot] = Node::Inner { bounds, left, right };
        slot
    }

    /// Nearest segment to `z` under `norm`: (distance, segment index).
    pub fn nearest(&self, z: &Point, norm: &Norm) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let euclid = norm.is_euclidean();
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![(0usize, self.nodes[0].bounds().dist(z, norm))];
        while let Some((n, lb)) = stack.pop() {
            if lb >= best.0 {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { edges, .. } => {
                    for &e in edges {
                        let (a, b) = &self.segments[e as usize];
                        let d = if euclid {
                            let t = super::norm::euclid_segment_param(z, a, b);
                            norm.dist(z, &a.lerp(b, t))
                        } else {
                            norm.dist_to_segment(z, a, b)
                        };
                        if d < best.0 {
                            best = (d, e as usize);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().dist(z, norm);
                    let dr = self.nodes[*right].bounds().dist(z, norm);
                    // Push the farther child first so the nearer is explored first.
                    if dl <= dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        Some(best)
    }

    /// Whether the closed segment `[a, b]` touches any stored segment.
    pub fn intersects(&self, a: &Point, b: &Point) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let q = Aabb::of_segment(a, b);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds().overlaps(&q) {
                continue;
            }
            match node {
                Node::Leaf { edges, .. } => {
                    for &e in edges {
                        let (p, r) = &self.segments[e as usize];
                        if segments_intersect(a, b, p, r) {
                            return true;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let segs: Vec<_> = (0..200)
            .map(|_| {
                let a = Point::xy(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let b = a + Point::xy(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                (a, b)
            })
            .collect();
        let bvh = SegmentBvh::new(segs.clone());
        for norm in [Norm::Euclidean, Norm::Sup, Norm::P { p: 1.5 }] {
            for _ in 0..50 {
                let z = Point::xy(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
                let brute = segs
                    .iter()
                    .map(|(a, b)| norm.dist_to_segment(&z, a, b))
                    .fold(f64::INFINITY, f64::min);
                let (d, _) = bvh.nearest(&z, &norm).unwrap();
                assert!((d - brute).abs() < 1e-9, "{d} vs {brute}");
            }
        }
    }

    #[test]
    fn intersection_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let segs: Vec<_> = (0..100)
            .map(|_| {
                let a = Point::xy(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                (a, a + Point::xy(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let bvh = SegmentBvh::new(segs.clone());
        for _ in 0..200 {
            let a = Point::xy(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let b = Point::xy(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let brute = segs.iter().any(|(p, q)| segments_intersect(&a, &b, p, q));
            assert_eq!(bvh.intersects(&a, &b), brute);
        }
    }
}
