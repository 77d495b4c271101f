use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bvh::SegmentBvh;
use super::norm::{Norm, NormSpace, Point};
use super::predicates::{on_segment, orient, point_in_polygon, segments_intersect};
use crate::error::{Error, Result};

/// Axis-aligned sampling window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub lo: Point,
    pub hi: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

/// Serializable description of a domain shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Ball { center: Point, radius: f64 },
    /// `{ x : <normal, x> > offset }`.
    HalfSpace { normal: Point, offset: f64 },
    /// Ball minus the closed segment `[slit_start, slit_end]`; 2D only.
    SlitBall { center: Point, radius: f64, slit_start: Point, slit_end: Point },
    PuncturedBall { center: Point, radius: f64, puncture: Point },
    /// Interior of a simple closed polygon; 2D only.
    Polygon { vertices: Vec<Point> },
    Annulus { center: Point, r_in: f64, r_out: f64 },
    Intersection { parts: Vec<ShapeSpec> },
    /// Open box minus a closed obstacle strictly inside it.
    ComplementInBox { lo: Point, hi: Point, obstacle: ObstacleSpec },
}

impl ShapeSpec {
    fn dimension(&self) -> Result<usize> {
        let d = match self {
            ShapeSpec::Ball { center, .. }
            | ShapeSpec::SlitBall { center, .. }
            | ShapeSpec::PuncturedBall { center, .. }
            | ShapeSpec::Annulus { center, .. } => center.dim(),
            ShapeSpec::HalfSpace { normal, .. } => normal.dim(),
            ShapeSpec::Polygon { vertices } => vertices
                .first()
                .ok_or_else(|| Error::InvalidDomain("polygon has no vertices".into()))?
                .dim(),
            ShapeSpec::Intersection { parts } => parts
                .first()
                .ok_or_else(|| Error::InvalidDomain("empty intersection".into()))?
                .dimension()?,
            ShapeSpec::ComplementInBox { lo, .. } => lo.dim(),
        };
        Ok(d)
    }

    fn is_convex(&self) -> bool {
        match self {
            ShapeSpec::Ball { .. } | ShapeSpec::HalfSpace { .. } => true,
            ShapeSpec::Intersection { parts } => parts.iter().all(ShapeSpec::is_convex),
            _ => false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ShapeSpec::HalfSpace { .. } => false,
            ShapeSpec::Intersection { parts } => parts.iter().any(ShapeSpec::is_bounded),
            _ => true,
        }
    }
}

/// Serializable domain: shape, ambient norm, optional sampling window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default)]
    pub norm: Norm,
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl DomainSpec {
    pub fn new(shape: ShapeSpec) -> Self {
        Self { norm: Norm::Euclidean, shape, window: None }
    }

    pub fn with_window(mut self, lo: Point, hi: Point) -> Self {
        self.window = Some(Window { lo, hi });
        self
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn build(&self) -> Result<Domain> {
        Domain::new(self.clone())
    }
}

#[derive(Debug)]
pub(crate) struct PolygonData {
    pub vertices: Vec<Point>,
    pub bvh: SegmentBvh,
    /// Edge `i` joins vertex `i` and `i + 1`; true when the whole polygon lies on
    /// its inner side, so the edge line bounds a half-plane containing the domain.
    pub supporting: Vec<bool>,
    /// +1 for counter-clockwise vertex order, -1 otherwise.
    pub orientation: i8,
}

#[derive(Clone, Debug)]
pub(crate) enum Obstacle {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

#[derive(Clone, Debug)]
pub(crate) enum Shape {
    Ball { center: Point, radius: f64 },
    HalfSpace { normal: Point, offset: f64, dual_scale: f64 },
    SlitBall { center: Point, radius: f64, p: Point, q: Point },
    PuncturedBall { center: Point, radius: f64, puncture: Point },
    Polygon(Arc<PolygonData>),
    Annulus { center: Point, r_in: f64, r_out: f64 },
    Intersection(Vec<Shape>),
    ComplementInBox { lo: Point, hi: Point, obstacle: Obstacle },
}

/// A validated domain with boundary-distance and visibility queries.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: DomainSpec,
    space: NormSpace,
    pub(crate) shape: Shape,
    hash: String,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDomain(msg.into())
}

fn check_dim(p: &Point, dim: usize, what: &str) -> Result<()> {
    if p.dim() != dim {
        return Err(invalid(format!("{what} has dimension {} but domain has {dim}", p.dim())));
    }
    Ok(())
}

fn positive(x: f64, what: &str) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid(format!("{what} must be positive and finite, got {x}")));
    }
    Ok(())
}

fn build_shape(spec: &ShapeSpec, space: &NormSpace) -> Result<Shape> {
    let dim = space.dimension;
    let shape = match spec {
        ShapeSpec::Ball { center, radius } => {
            check_dim(center, dim, "center")?;
            positive(*radius, "radius")?;
            Shape::Ball { center: *center, radius: *radius }
        }
        ShapeSpec::HalfSpace { normal, offset } => {
            check_dim(normal, dim, "normal")?;
            let len = normal.euclid();
            if !(len > 0.0) || !offset.is_finite() {
                return Err(invalid("half-space needs a nonzero normal and finite offset"));
            }
            let n = *normal * (1.0 / len);
            let dual_scale = space.norm.dual().norm(&n);
            Shape::HalfSpace { normal: n, offset: offset / len, dual_scale }
        }
        ShapeSpec::SlitBall { center, radius, slit_start, slit_end } => {
            if dim != 2 {
                return Err(invalid("slit balls are 2D only"));
            }
            for (p, w) in [(center, "center"), (slit_start, "slit_start"), (slit_end, "slit_end")] {
                check_dim(p, dim, w)?;
            }
            positive(*radius, "radius")?;
            if !(space.dist(slit_start, center) < *radius) {
                return Err(invalid("slit_start must be interior to the ball"));
            }
            if space.dist(slit_end, center) > *radius * (1.0 + 1e-12) {
                return Err(invalid("slit_end must lie in the closed ball"));
            }
            if slit_start == slit_end {
                return Err(invalid("slit endpoints coincide"));
            }
            Shape::SlitBall { center: *center, radius: *radius, p: *slit_start, q: *slit_end }
        }
        ShapeSpec::PuncturedBall { center, radius, puncture } => {
            check_dim(center, dim, "center")?;
            check_dim(puncture, dim, "puncture")?;
            positive(*radius, "radius")?;
            if !(space.dist(puncture, center) < *radius) {
                return Err(invalid("puncture must be interior to the ball"));
            }
            Shape::PuncturedBall { center: *center, radius: *radius, puncture: *puncture }
        }
        ShapeSpec::Polygon { vertices } => {
            if dim != 2 {
                return Err(invalid("polygons are 2D only"));
            }
            Shape::Polygon(Arc::new(build_polygon(vertices)?))
        }
        ShapeSpec::Annulus { center, r_in, r_out } => {
            check_dim(center, dim, "center")?;
            positive(*r_in, "r_in")?;
            positive(*r_out, "r_out")?;
            if r_in >= r_out {
                return Err(invalid("annulus needs r_in < r_out"));
            }
            Shape::Annulus { center: *center, r_in: *r_in, r_out: *r_out }
        }
        ShapeSpec::Intersection { parts } => {
            if parts.is_empty() {
                return Err(invalid("empty intersection"));
            }
            Shape::Intersection(parts.iter().map(|p| build_shape(p, space)).collect::<Result<_>>()?)
        }
        ShapeSpec::ComplementInBox { lo, hi, obstacle } => {
            check_dim(lo, dim, "lo")?;
            check_dim(hi, dim, "hi")?;
            if (0..dim).any(|i| !(lo.coords()[i] < hi.coords()[i])) {
                return Err(invalid("box needs lo < hi in every coordinate"));
            }
            let inside = |p: &Point, margin: f64| {
                (0..dim).all(|i| {
                    p.coords()[i] - margin > lo.coords()[i] && p.coords()[i] + margin < hi.coords()[i]
                })
            };
            let obstacle = match obstacle {
                ObstacleSpec::Ball { center, radius } => {
                    check_dim(center, dim, "obstacle center")?;
                    positive(*radius, "obstacle radius")?;
                    // The sup-ball of the same radius contains every p-ball.
                    if !inside(center, *radius) {
                        return Err(invalid("obstacle must lie strictly inside the box"));
                    }
                    Obstacle::Ball { center: *center, radius: *radius }
                }
                ObstacleSpec::Box { lo: olo, hi: ohi } => {
                    check_dim(olo, dim, "obstacle lo")?;
                    check_dim(ohi, dim, "obstacle hi")?;
                    if (0..dim).any(|i| !(olo.coords()[i] < ohi.coords()[i])) {
                        return Err(invalid("obstacle box needs lo < hi"));
                    }
                    if !inside(olo, 0.0) || !inside(ohi, 0.0) {
                        return Err(invalid("obstacle must lie strictly inside the box"));
                    }
                    Obstacle::Box { lo: *olo, hi: *ohi }
                }
            };
            Shape::ComplementInBox { lo: *lo, hi: *hi, obstacle }
        }
    };
    Ok(shape)
}

fn build_polygon(vertices: &[Point]) -> Result<PolygonData> {
    let n = vertices.len();
    if n < 3 {
        return Err(invalid("polygon needs at least 3 vertices"));
    }
    if vertices.iter().any(|v| v.dim() != 2) {
        return Err(invalid("polygon vertices must be 2D"));
    }
    let edges: Vec<(Point, Point)> = (0..n).map(|i| (vertices[i], vertices[(i + 1) % n])).collect();
    if edges.iter().any(|(a, b)| a == b) {
        return Err(invalid("polygon has a zero-length edge"));
    }
    let area2: f64 = edges.iter().map(|(a, b)| a.x() * b.y() - b.x() * a.y()).sum();
    if area2 == 0.0 {
        return Err(invalid("polygon has zero area"));
    }
    let orientation = if area2 > 0.0 { 1 } else { -1 };
    let bvh = SegmentBvh::new(edges.clone());
    // Simplicity: non-adjacent edges must be disjoint, adjacent ones must not fold back.
    for i in 0..n {
        let (a, b) = edges[i];
        let (_, c) = edges[(i + 1) % n];
        if orient(&a, &b, &c) == 0 && (b - a).dot(&(c - b)) < 0.0 {
            return Err(invalid(format!("polygon folds back at vertex {}", (i + 1) % n)));
        }
    }
    if n > 3 {
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_intersect(&a, &b, &c, &d) {
                    return Err(invalid(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
    }
    let supporting = edges
        .iter()
        .map(|(a, b)| vertices.iter().all(|v| orient(a, b, v) * orientation >= 0))
        .collect();
    Ok(PolygonData { vertices: vertices.to_vec(), bvh, supporting, orientation })
}

/// Signed distance from `z` to the closed box `[lo, hi]` (negative inside).
fn box_signed_dist(z: &Point, lo: &Point, hi: &Point, norm: &Norm) -> f64 {
    let d = z.dim();
    let mut gap = Point::zero(d);
    let mut inner = f64::INFINITY;
    for i in 0..d {
        let (x, l, h) = (z.coords()[i], lo.coords()[i], hi.coords()[i]);
        gap.coords_mut()[i] = (l - x).max(0.0).max(x - h);
        inner = inner.min((x - l).min(h - x));
    }
    let out = norm.norm(&gap);
    if out > 0.0 {
        out
    } else {
        -inner
    }
}

/// Whether the closed segment `[a, b]` meets the closed box `[lo, hi]`.
fn segment_hits_box(a: &Point, b: &Point, lo: &Point, hi: &Point) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..a.dim() {
        let (p, dir) = (a.coords()[i], b.coords()[i] - a.coords()[i]);
        let (l, h) = (lo.coords()[i], hi.coords()[i]);
        if dir == 0.0 {
            if p < l || p > h {
                return false;
            }
        } else {
            let (mut u, mut v) = ((l - p) / dir, (h - p) / dir);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            t0 = t0.max(u);
            t1 = t1.min(v);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

impl Shape {
    fn clearance(&self, z: &Point, space: &NormSpace) -> f64 {
        match self {
            Shape::Ball { center, radius } => radius - space.dist(z, center),
            Shape::HalfSpace { normal, offset, dual_scale } => (normal.dot(z) - offset) / dual_scale,
            Shape::SlitBall { center, radius, p, q } => {
                let ball = radius - space.dist(z, center);
                if ball <= 0.0 {
                    return ball;
                }
                ball.min(space.dist_to_segment(z, p, q))
            }
            Shape::PuncturedBall { center, radius, puncture } => {
                let ball = radius - space.dist(z, center);
                if ball <= 0.0 {
                    return ball;
                }
                ball.min(space.dist(z, puncture))
            }
            Shape::Polygon(poly) => {
                let (d, _) = poly.bvh.nearest(z, &space.norm).expect("polygon has edges");
                if d == 0.0 {
                    0.0
                } else if point_in_polygon(&poly.vertices, z) {
                    d
                } else {
                    -d
                }
            }
            Shape::Annulus { center, r_in, r_out } => {
                let r = space.dist(z, center);
                (r_out - r).min(r - r_in)
            }
            Shape::Intersection(parts) => {
                parts.iter().map(|p| p.clearance(z, space)).fold(f64::INFINITY, f64::min)
            }
            Shape::ComplementInBox { lo, hi, obstacle } => {
                let bx = -box_signed_dist(z, lo, hi, &space.norm);
                let ob = match obstacle {
                    Obstacle::Ball { center, radius } => space.dist(z, center) - radius,
                    Obstacle::Box { lo, hi } => box_signed_dist(z, lo, hi, &space.norm),
                };
                bx.min(ob)
            }
        }
    }

    fn segment_ok(&self, a: &Point, b: &Point, space: &NormSpace) -> bool {
        match self {
            Shape::Ball { .. } | Shape::HalfSpace { .. } => true,
            Shape::SlitBall { p, q, .. } => !segments_intersect(a, b, p, q),
            Shape::PuncturedBall { puncture, .. } => !on_segment(a, b, puncture),
            Shape::Polygon(poly) => !poly.bvh.intersects(a, b),
            Shape::Annulus { center, r_in, .. } => space.dist_to_segment(center, a, b) > *r_in,
            Shape::Intersection(parts) => parts.iter().all(|p| p.segment_ok(a, b, space)),
            Shape::ComplementInBox { obstacle, .. } => match obstacle {
                Obstacle::Ball { center, radius } => space.dist_to_segment(center, a, b) > *radius,
                Obstacle::Box { lo, hi } => !segment_hits_box(a, b, lo, hi),
            },
        }
    }

    fn bbox(&self, space: &NormSpace) -> Option<(Point, Point)> {
        let dim = space.dimension;
        let around = |c: &Point, r: f64| {
            let mut ext = Point::zero(dim);
            ext.coords_mut().iter_mut().for_each(|e| *e = r);
            (*c - ext, *c + ext)
        };
        match self {
            Shape::Ball { center, radius }
            | Shape::SlitBall { center, radius, .. }
            | Shape::PuncturedBall { center, radius, .. } => Some(around(center, *radius)),
            Shape::Annulus { center, r_out, .. } => Some(around(center, *r_out)),
            Shape::HalfSpace { .. } => None,
            Shape::Polygon(poly) => {
                let mut lo = poly.vertices[0];
                let mut hi = lo;
                for v in &poly.vertices {
                    for i in 0..2 {
                        lo.coords_mut()[i] = lo.coords()[i].min(v.coords()[i]);
                        hi.coords_mut()[i] = hi.coords()[i].max(v.coords()[i]);
                    }
                }
                Some((lo, hi))
            }
            Shape::Intersection(parts) => parts
                .iter()
                .filter_map(|p| p.bbox(space))
                .reduce(|a, b| intersect_boxes(&a, &b)),
            Shape::ComplementInBox { lo, hi, .. } => Some((*lo, *hi)),
        }
    }
}

fn intersect_boxes(a: &(Point, Point), b: &(Point, Point)) -> (Point, Point) {
    let mut lo = a.0;
    let mut hi = a.1;
    for i in 0..lo.dim() {
        lo.coords_mut()[i] = a.0.coords()[i].max(b.0.coords()[i]);
        hi.coords_mut()[i] = a.1.coords()[i].min(b.1.coords()[i]);
    }
    (lo, hi)
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        let dimension = spec.shape.dimension()?;
        let space = NormSpace { dimension, norm: spec.norm.canonical() };
        space.validate().map_err(|e| invalid(e.to_string()))?;
        if let Some(w) = &spec.window {
            check_dim(&w.lo, dimension, "window lo")?;
            check_dim(&w.hi, dimension, "window hi")?;
            if (0..dimension).any(|i| !(w.lo.coords()[i] < w.hi.coords()[i])) {
                return Err(invalid("window needs lo < hi in every coordinate"));
            }
        }
        let shape = build_shape(&spec.shape, &space)?;
        let json = serde_json::to_string(&spec).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        let hash = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
        let domain = Domain { spec, space, shape, hash };
        if let ShapeSpec::Intersection { .. } = domain.spec.shape {
            if !domain.spec.shape.is_convex() {
                super::sampling::connectivity_probe(&domain)?;
            }
        }
        Ok(domain)
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        DomainSpec::new(ShapeSpec::Ball { center, radius }).build()
    }

    pub fn unit_disk() -> Self {
        Self::ball(Point::xy(0.0, 0.0), 1.0).expect("valid")
    }

    /// Upper half-plane `y > 0` with the given sampling window.
    pub fn upper_half_plane(window: Option<(Point, Point)>) -> Self {
        let mut spec = DomainSpec::new(ShapeSpec::HalfSpace { normal: Point::xy(0.0, 1.0), offset: 0.0 });
        if let Some((lo, hi)) = window {
            spec = spec.with_window(lo, hi);
        }
        spec.build().expect("valid")
    }

    /// Unit disk minus the closed segment from the origin to (1, 0).
    pub fn slit_disk() -> Self {
        DomainSpec::new(ShapeSpec::SlitBall {
            center: Point::xy(0.0, 0.0),
            radius: 1.0,
            slit_start: Point::xy(0.0, 0.0),
            slit_end: Point::xy(1.0, 0.0),
        })
        .build()
        .expect("valid")
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn space(&self) -> &NormSpace {
        &self.space
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension
    }

    pub fn norm(&self) -> &Norm {
        &self.space.norm
    }

    /// Stable content hash of the spec (hex).
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Signed clearance: the boundary distance inside, and a value whose
    /// magnitude never exceeds the distance to the domain outside.
    pub fn clearance(&self, z: &Point) -> f64 {
        self.shape.clearance(z, &self.space)
    }

    pub fn contains(&self, z: &Point) -> bool {
        z.dim() == self.dimension() && z.is_finite() && self.clearance(z) > 0.0
    }

    pub fn boundary_distance(&self, z: &Point) -> Result<f64> {
        if z.dim() != self.dimension() {
            return Err(Error::PointNotInDomain(z.to_vec()));
        }
        let d = self.clearance(z);
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::PointNotInDomain(z.to_vec()))
        }
    }

    /// Whether the closed segment `[a, b]` lies in the domain; false on any boundary contact.
    pub fn segment_in_domain(&self, a: &Point, b: &Point) -> bool {
        self.contains(a) && self.contains(b) && self.shape.segment_ok(a, b, &self.space)
    }

    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.space.dist(a, b)
    }

    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        self.shape.bbox(&self.space)
    }

    /// Box used for sampling: the shape bounds clipped to the window.
    pub fn sampling_box(&self) -> Result<(Point, Point)> {
        let window = self.spec.window.map(|w| (w.lo, w.hi));
        match (self.bounding_box(), window) {
            (Some(b), Some(w)) => Ok(intersect_boxes(&b, &w)),
            (Some(b), None) => Ok(b),
            (None, Some(w)) => Ok(w),
            (None, None) => Err(Error::SamplingWindowRequired),
        }
    }

    pub fn is_polygon(&self) -> bool {
        matches!(self.shape, Shape::Polygon(_))
    }

    /// Unit (Euclidean) direction of steepest clearance increase, by central differences.
    pub fn clearance_gradient(&self, z: &Point) -> Point {
        let d = self.clearance(z).abs().max(1e-12);
        let h = 1e-5 * d;
        let mut g = Point::zero(self.dimension());
        for i in 0..self.dimension() {
            let e = Point::axis(self.dimension(), i) * h;
            g.coords_mut()[i] = (self.clearance(&(*z + e)) - self.clearance(&(*z - e))) / (2.0 * h);
        }
        let len = g.euclid();
        if len > 0.0 {
            g * (1.0 / len)
        } else {
            Point::axis(self.dimension(), 0)
        }
    }

    /// Moves `z` along the clearance gradient until its clearance is `target`.
    pub fn push_to_clearance(&self, z: &Point, target: f64) -> Option<Point> {
        let mut p = *z;
        if !self.contains(&p) {
            return None;
        }
        for _ in 0..40 {
            let d = self.clearance(&p);
            if (d - target).abs() <= 1e-10 * target.max(1e-300) {
                return Some(p);
            }
            let g = self.clearance_gradient(&p);
            let mut step = target - d;
            loop {
                let cand = p + g * step;
                if self.contains(&cand) {
                    p = cand;
                    break;
                }
                step *= 0.5;
                if step.abs() < 1e-15 {
                    return None;
                }
            }
        }
        let d = self.clearance(&p);
        ((d - target).abs() <= 1e-6 * target).then_some(p)
    }

    /// Adversarial pairs at clearance about `eps` near boundary features
    /// (slits, punctures, holes, reflex corners). Both points are interior.
    pub fn feature_pairs(&self, eps: f64) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        self.shape.collect_features(eps, &self.space, &mut out);
        out.retain(|(a, b)| {
            let (da, db) = (self.clearance(a), self.clearance(b));
            da >= 0.5 * eps && db >= 0.5 * eps && a != b
        });
        out
    }
}

fn unit2(v: Point) -> Point {
    v * (1.0 / v.euclid())
}

fn perp(v: Point) -> Point {
    Point::xy(-v.y(), v.x())
}

impl Shape {
    fn collect_features(&self, eps: f64, space: &NormSpace, out: &mut Vec<(Point, Point)>) {
        let dim = space.dimension;
        let e1 = Point::axis(dim, 0);
        match self {
            Shape::SlitBall { p, q, .. } => {
                let u = unit2(*q - *p);
                let n = perp(u);
                for t in [0.25, 0.5, 0.75] {
                    let s = p.lerp(q, t);
                    out.push((s + n * eps, s - n * eps));
                }
                // Straddle both tips just beyond the segment, and just inside it.
                for (tip, dir) in [(*p, -u), (*q, u)] {
                    out.push((tip + dir * eps + n * eps, tip + dir * eps - n * eps));
                    out.push((tip - dir * (0.5 * eps) + n * eps, tip - dir * (2.0 * eps) - n * eps));
                }
            }
            Shape::PuncturedBall { puncture, .. } => {
                out.push((*puncture + e1 * eps, *puncture - e1 * eps));
            }
            Shape::Annulus { center, r_in, .. } => {
                out.push((*center + e1 * (r_in + eps), *center - e1 * (r_in + eps)));
                let e2 = Point::axis(dim, 1);
                out.push((*center + e1 * (r_in + eps), *center + e2 * (r_in + eps)));
            }
            Shape::Polygon(poly) => {
                let n = poly.vertices.len();
                if n > 32 {
                    return;
                }
                let s = poly.orientation as f64;
                for i in 0..n {
                    let v = poly.vertices[i];
                    let prev = poly.vertices[(i + n - 1) % n];
                    let next = poly.vertices[(i + 1) % n];
                    let reflex = orient(&prev, &v, &next) * poly.orientation < 0;
                    if !reflex {
                        continue;
                    }
                    let d_prev = unit2(prev - v);
                    let d_next = unit2(next - v);
                    // Inward normals of the two incident edges.
                    let n_prev = perp(unit2(v - prev)) * s;
                    let n_next = perp(unit2(next - v)) * s;
                    out.push((v + d_prev * (2.0 * eps) + n_prev * eps, v + d_next * (2.0 * eps) + n_next * eps));
                }
            }
            Shape::Intersection(parts) => {
                for p in parts {
                    p.collect_features(eps, space, out);
                }
            }
            Shape::ComplementInBox { obstacle, .. } => match obstacle {
                Obstacle::Ball { center, radius } => {
                    out.push((*center + e1 * (radius + eps), *center - e1 * (radius + eps)));
                }
                Obstacle::Box { lo, hi } => {
                    let c = lo.midpoint(hi);
                    let half = 0.5 * (hi.x() - lo.x());
                    out.push((c + e1 * (half + eps), c - e1 * (half + eps)));
                }
            },
            Shape::Ball { .. } | Shape::HalfSpace { .. } => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn catalog() -> Vec<Domain> {
        let o = Point::xy(0.0, 0.0);
        let specs = vec![
            DomainSpec::new(ShapeSpec::Ball { center: o, radius: 1.0 }),
            DomainSpec::new(ShapeSpec::HalfSpace { normal: Point::xy(0.0, 1.0), offset: 0.0 })
                .with_window(Point::xy(-2.0, 0.0), Point::xy(2.0, 2.0)),
            DomainSpec::new(ShapeSpec::SlitBall {
                center: o,
                radius: 1.0,
                slit_start: o,
                slit_end: Point::xy(1.0, 0.0),
            }),
            DomainSpec::new(ShapeSpec::PuncturedBall { center: o, radius: 1.0, puncture: Point::xy(0.2, 0.1) }),
            DomainSpec::new(ShapeSpec::Polygon {
                vertices: vec![
                    Point::xy(0.0, 0.0),
                    Point::xy(2.0, 0.0),
                    Point::xy(2.0, 2.0),
                    Point::xy(1.0, 1.0),
                    Point::xy(0.0, 2.0),
                ],
            }),
            DomainSpec::new(ShapeSpec::Annulus { center: o, r_in: 0.5, r_out: 1.0 }),
            DomainSpec::new(ShapeSpec::Intersection {
                parts: vec![
                    ShapeSpec::Ball { center: o, radius: 1.0 },
                    ShapeSpec::HalfSpace { normal: Point::xy(1.0, 0.0), offset: 0.0 },
                ],
            }),
            DomainSpec::new(ShapeSpec::ComplementInBox {
                lo: Point::xy(-1.0, -1.0),
                hi: Point::xy(1.0, 1.0),
                obstacle: ObstacleSpec::Ball { center: o, radius: 0.3 },
            }),
            DomainSpec::new(ShapeSpec::Ball { center: o, radius: 1.0 }).with_norm(Norm::Sup),
            DomainSpec::new(ShapeSpec::Ball { center: Point::xyz(0.0, 0.0, 0.0), radius: 1.0 }),
        ];
        specs.into_iter().map(|s| s.build().unwrap()).collect()
    }

    fn random_interior(d: &Domain, rng: &mut ChaCha8Rng) -> Point {
        let (lo, hi) = d.sampling_box().unwrap();
        loop {
            let mut p = lo;
            for i in 0..d.dimension() {
                p.coords_mut()[i] = rng.gen_range(lo.coords()[i]..hi.coords()[i]);
            }
            if d.contains(&p) {
                return p;
            }
        }
    }

    #[test]
    fn boundary_distance_examples() {
        let ball = Domain::unit_disk();
        assert_eq!(ball.boundary_distance(&Point::xy(0.5, 0.0)).unwrap(), 0.5);
        let hp = Domain::upper_half_plane(None);
        assert_eq!(hp.boundary_distance(&Point::xy(7.0, 2.0)).unwrap(), 2.0);
        let slit = Domain::slit_disk();
        let z = Point::xy(0.5, 0.3);
        // Oracle: min(1 - |z|, vertical distance to the slit).
        let oracle = (1.0 - (0.5f64.powi(2) + 0.3f64.powi(2)).sqrt()).min(0.3);
        assert!((slit.boundary_distance(&z).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.3).abs() < 1e-15);
    }

    #[test]
    fn outside_and_boundary_points_rejected() {
        let slit = Domain::slit_disk();
        for z in [Point::xy(0.5, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0), Point::xy(0.0, 0.0)] {
            assert!(matches!(slit.boundary_distance(&z), Err(Error::PointNotInDomain(_))));
        }
        assert!(slit.boundary_distance(&Point::xy(-0.5, 0.0)).is_ok());
    }

    #[test]
    fn visibility_examples() {
        let ball = Domain::unit_disk();
        assert!(ball.segment_in_domain(&Point::xy(-0.5, 0.0), &Point::xy(0.5, 0.0)));
        let slit = Domain::slit_disk();
        assert!(!slit.segment_in_domain(&Point::xy(0.5, 0.2), &Point::xy(0.5, -0.2)));
        assert!(slit.segment_in_domain(&Point::xy(-0.5, 0.2), &Point::xy(-0.5, -0.2)));
        // Passing exactly through the slit tip at the origin is contact.
        assert!(!slit.segment_in_domain(&Point::xy(-0.1, 0.1), &Point::xy(0.1, -0.1)));
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let o = Point::xy(0.0, 0.0);
        let bad = [
            ShapeSpec::Ball { center: o, radius: 0.0 },
            ShapeSpec::Annulus { center: o, r_in: 1.0, r_out: 0.5 },
            ShapeSpec::SlitBall { center: o, radius: 1.0, slit_start: Point::xy(1.0, 0.0), slit_end: o },
            ShapeSpec::Polygon {
                vertices: vec![o, Point::xy(1.0, 1.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)],
            },
            ShapeSpec::PuncturedBall { center: o, radius: 1.0, puncture: Point::xy(2.0, 0.0) },
        ];
        for s in bad {
            assert!(matches!(DomainSpec::new(s).build(), Err(Error::InvalidDomain(_))));
        }
        // Two disjoint balls do not form a connected intersection with a slab.
        let two = ShapeSpec::Intersection {
            parts: vec![
                ShapeSpec::Annulus { center: o, r_in: 0.5, r_out: 1.0 },
                ShapeSpec::HalfSpace { normal: Point::xy(0.0, 1.0), offset: -0.1 },
                ShapeSpec::HalfSpace { normal: Point::xy(0.0, -1.0), offset: -0.1 },
            ],
        };
        assert!(DomainSpec::new(two).build().is_err());
    }

    #[test]
    fn unbounded_needs_window() {
        let hp = Domain::upper_half_plane(None);
        assert!(matches!(hp.sampling_box(), Err(Error::SamplingWindowRequired)));
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        for d in catalog() {
            let s = toml::to_string(d.spec()).unwrap();
            let back: DomainSpec = toml::from_str(&s).unwrap();
            assert_eq!(&back, d.spec());
        }
        let err = toml::from_str::<DomainSpec>("[shape]\nkind = \"ball\"\ncenter = [0, 0]\nradius = 1\nradus = 2\n");
        assert!(err.is_err());
    }

    #[test]
    fn lipschitz_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in catalog() {
            for _ in 0..1000 {
                let (a, b) = (random_interior(&d, &mut rng), random_interior(&d, &mut rng));
                let gap = (d.boundary_distance(&a).unwrap() - d.boundary_distance(&b).unwrap()).abs();
                assert!(gap <= d.dist(&a, &b) * (1.0 + 1e-12) + 1e-12, "{:?}", d.spec());
            }
        }
    }

    #[test]
    fn visible_segments_stay_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for d in catalog() {
            for _ in 0..300 {
                let (a, b) = (random_interior(&d, &mut rng), random_interior(&d, &mut rng));
                if d.segment_in_domain(&a, &b) {
                    for k in 0..=32 {
                        assert!(d.clearance(&a.lerp(&b, k as f64 / 32.0)) > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn features_are_interior_at_scale() {
        for d in catalog() {
            for eps in [0.1, 0.01, 0.001] {
                for (a, b) in d.feature_pairs(eps) {
                    assert!(d.clearance(&a) >= 0.5 * eps && d.clearance(&b) >= 0.5 * eps);
                }
            }
        }
        assert_eq!(Domain::slit_disk().feature_pairs(0.01).len(), 5);
    }

    #[test]
    fn push_to_clearance_hits_target() {
        let slit = Domain::slit_disk();
        let p = slit.push_to_clearance(&Point::xy(0.5, 0.3), 0.01).unwrap();
        assert!((slit.clearance(&p) - 0.01).abs() < 1e-9);
        assert!((p.x() - 0.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn similarity_equivariance(lam in 0.1..10.0f64, tx in -5.0..5.0f64, ty in -5.0..5.0f64,
                                   x in -0.7..0.7f64, y in -0.7..0.7f64) {
            let z = Point::xy(x, y);
            let t = Point::xy(tx, ty);
            let ball = Domain::unit_disk();
            let scaled = Domain::ball(t, lam).unwrap();
            let lhs = scaled.boundary_distance(&(z * lam + t)).unwrap();
            prop_assert!((lhs - lam * ball.boundary_distance(&z).unwrap()).abs() <= 1e-12 * lam.max(1.0) * 10.0);

            let hp = Domain::upper_half_plane(None);
            let shifted = DomainSpec::new(ShapeSpec::HalfSpace { normal: Point::xy(0.0, 1.0), offset: ty })
                .build().unwrap();
            let z = Point::xy(x, y.abs() + 0.1);
            let lhs = shifted.boundary_distance(&(z * lam + Point::xy(tx, ty))).unwrap();
            prop_assert!((lhs - lam * hp.boundary_distance(&z).unwrap()).abs() <= 1e-12 * (1.0 + lam * 10.0));
        }
    }
}
