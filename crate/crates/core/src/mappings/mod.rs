//! Explicit homeomorphisms between catalog domains and their empirical
//! quasihyperbolic and quasisymmetric diagnostics.

pub mod cqh;
pub mod growth;
pub mod qs;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Domain, DomainSpec, Norm, ObstacleSpec, Point, ShapeSpec};

pub use cqh::{
    estimate_cqh, estimate_solidity_growth, node_pairs, target_graph, CQHEstimate, CqhFit, CqhPair, GrowthSample,
    SolidityGrowth, SolidityGrowthParams,
};
pub use growth::{GrowthFunction, Tail};
pub use qs::{local_qs_test, qs_ratio_test, BallReport, LocalQsParams, LocalQsReport, QsReport};

/// Boundary samples of the polygon stand-in for images without a catalog shape.
pub const FALLBACK_SAMPLES: usize = 2048;

/// Serializable map description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapKind {
    Identity,
    /// `x -> scale * R x + translation`; `angle` rotates in 2D, `rotation` is a row-major matrix.
    Similarity {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
        translation: Point,
    },
    /// `z -> (a z + b) / (c z + d)` with complex coefficients `[re, im]`.
    #[serde(rename = "moebius")]
    Moebius2D { a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2] },
    /// `x -> center + (x - center) |x - center|^(exponent - 1)`.
    RadialPower {
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Point>,
    },
    /// `z -> z^exponent` with the argument taken in the open sector `(sector[0], sector[1])`.
    #[serde(rename = "complex_power")]
    ComplexPower2D { exponent: f64, sector: [f64; 2] },
    /// Conformal map of the unit disk onto the disk minus `[0, 1)`.
    #[serde(rename = "slit_riemann")]
    SlitRiemann2D,
    Composition { maps: Vec<MapKind> },
}

/// How the target domain was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImageRepr {
    Exact,
    /// Mapped boundary samples joined into a polygon.
    PolygonFallback { vertices: usize },
}

/// A validated map from `source` onto `target`.
#[derive(Clone, Debug)]
pub struct Mapping {
    kind: MapKind,
    source: Domain,
    target: Domain,
    image: ImageRepr,
    op: Op,
}

#[derive(Clone, Debug)]
enum Op {
    Identity,
    Similarity { scale: f64, rot: Vec<Vec<f64>>, translation: Point },
    Moebius { a: Complex64, b: Complex64, c: Complex64, d: Complex64 },
    Radial { exponent: f64, center: Point, norm: Norm },
    Power { exponent: f64, lo: f64, hi: f64 },
    Slit,
    Chain(Vec<Mapping>),
}

fn cx(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn to_c(p: &Point) -> Complex64 {
    Complex64::new(p.x(), p.y())
}

fn to_p(z: Complex64) -> Point {
    Point::xy(z.re, z.im)
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::MapValidation(msg.into())
}

/// Argument of `z` normalized into `[lo, lo + 2 pi)`.
fn arg_from(z: Complex64, lo: f64) -> f64 {
    let a = z.arg();
    lo + (a - lo).rem_euclid(TAU)
}

fn sector_power(z: Complex64, exponent: f64, lo: f64, hi: f64) -> Option<Complex64> {
    if z.norm() == 0.0 {
        return None;
    }
    let a = arg_from(z, lo);
    (a > lo && a < hi).then(|| Complex64::from_polar(z.norm().powf(exponent), exponent * a))
}

/// Unit disk onto the disk minus `[0, 1)`: disk to half-plane, square root,
/// half-plane back to the upper half-disk, square.
fn slit_forward(zeta: Complex64) -> Complex64 {
    let i = Complex64::i();
    let w3 = i * (1.0 + zeta) / (1.0 - zeta);
    let w2 = Complex64::from_polar(w3.norm().sqrt(), 0.5 * arg_from(w3, 0.0).min(PI));
    let w1 = (w2 - 1.0) / (w2 + 1.0);
    w1 * w1
}

fn slit_inverse(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let w1 = Complex64::from_polar(z.norm().sqrt(), 0.5 * arg_from(z, 0.0));
    let w2 = (1.0 + w1) / (1.0 - w1);
    let w3 = w2 * w2;
    (w3 - i) / (w3 + i)
}

fn rotation_matrix(dim: usize, angle: Option<f64>, rotation: &Option<Vec<Vec<f64>>>) -> Result<Vec<Vec<f64>>> {
    let mut r = vec![vec![0.0; dim]; dim];
    for (k, row) in r.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    match (angle, rotation) {
        (Some(_), Some(_)) => return Err(invalid("give either angle or rotation, not both")),
        (Some(t), None) => {
            if dim != 2 {
                return Err(invalid("angle rotations are 2D only"));
            }
            r = vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]];
        }
        (None, Some(m)) => {
            if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                return Err(invalid(format!("rotation must be {dim}x{dim}")));
            }
            for a in 0..dim {
                for b in 0..dim {
                    let dot: f64 = (0..dim).map(|k| m[k][a] * m[k][b]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (dot - want).abs() > 1e-9 {
                        return Err(invalid("rotation matrix is not orthogonal"));
                    }
                }
            }
            r = m.clone();
        }
        (None, None) => {}
    }
    Ok(r)
}

fn mat_vec(m: &[Vec<f64>], v: &Point) -> Point {
    let mut out = Point::zero(v.dim());
    for (i, row) in m.iter().enumerate() {
        out.coords_mut()[i] = row.iter().zip(v.coords()).map(|(a, b)| a * b).sum();
    }
    out
}

fn mat_t_vec(m: &[Vec<f64>], v: &Point) -> Point {
    let mut out = Point::zero(v.dim());
    for (i, o) in out.coords_mut().iter_mut().enumerate() {
        *o = m.iter().zip(v.coords()).map(|(row, x)| row[i] * x).sum();
    }
    out
}

fn is_identity(m: &[Vec<f64>]) -> bool {
    m.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &x)| x == if i == j { 1.0 } else { 0.0 }))
}

impl Op {
    fn forward(&self, z: &Point) -> Result<Point> {
        Ok(match self {
            Op::Identity => *z,
            Op::Similarity { scale, rot, translation } => mat_vec(rot, z) * *scale + *translation,
            Op::Moebius { a, b, c, d } => {
                let w = to_c(z);
                to_p((a * w + b) / (c * w + d))
            }
            Op::Radial { exponent, center, norm } => {
                let v = *z - *center;
                let r = norm.norm(&v);
                if r == 0.0 {
                    *center
                } else {
                    *center + v * r.powf(exponent - 1.0)
                }
            }
            Op::Power { exponent, lo, hi } => {
                to_p(sector_power(to_c(z), *exponent, *lo, *hi).ok_or_else(|| Error::BranchViolation(z.to_vec()))?)
            }
            Op::Slit => to_p(slit_forward(to_c(z))),
            Op::Chain(steps) => {
                let mut p = *z;
                for s in steps {
                    p = s.op.forward(&p)?;
                }
                p
            }
        })
    }

    fn backward(&self, w: &Point) -> Result<Point> {
        Ok(match self {
            Op::Identity => *w,
            Op::Similarity { scale, rot, translation } => mat_t_vec(rot, &((*w - *translation) * (1.0 / scale))),
            Op::Moebius { a, b, c, d } => {
                let u = to_c(w);
                to_p((d * u - b) / (a - c * u))
            }
            Op::Radial { exponent, center, norm } => {
                let v = *w - *center;
                let r = norm.norm(&v);
                if r == 0.0 {
                    *center
                } else {
                    *center + v * r.powf(1.0 / exponent - 1.0)
                }
            }
            Op::Power { exponent, lo, hi } => {
                let u = sector_power(to_c(w), 1.0 / exponent, exponent * lo, exponent * hi)
                    .ok_or_else(|| Error::BranchViolation(w.to_vec()))?;
                to_p(u)
            }
            Op::Slit => to_p(slit_inverse(to_c(w))),
            Op::Chain(steps) => {
                let mut p = *w;
                for s in steps.iter().rev() {
                    p = s.op.backward(&p)?;
                }
                p
            }
        })
    }
}

impl Mapping {
    /// Validates `kind` on `source` and constructs the image domain.
    pub fn new(kind: MapKind, source: &Domain) -> Result<Self> {
        let dim = source.dimension();
        let need_plane = |what: &str| {
            if dim != 2 || !source.norm().is_euclidean() {
                Err(invalid(format!("{what} needs the Euclidean plane")))
            } else {
                Ok(())
            }
        };
        let op = match &kind {
            MapKind::Identity => Op::Identity,
            MapKind::Similarity { scale, angle, rotation, translation } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(format!("similarity scale must be positive, got {scale}")));
                }
                if translation.dim() != dim {
                    return Err(invalid("translation dimension mismatch"));
                }
                let rot = rotation_matrix(dim, *angle, rotation)?;
                if !is_identity(&rot) && !source.norm().is_euclidean() {
                    return Err(invalid("rotations preserve only the Euclidean norm"));
                }
                Op::Similarity { scale: *scale, rot, translation: *translation }
            }
            MapKind::Moebius2D { a, b, c, d } => {
                need_plane("a Moebius map")?;
                let (a, b, c, d) = (cx(*a), cx(*b), cx(*c), cx(*d));
                if (a * d - b * c).norm() < 1e-12 {
                    return Err(invalid("Moebius map is degenerate (ad - bc = 0)"));
                }
                if c.norm() > 0.0 {
                    let pole = to_p(-d / c);
                    if !(source.clearance(&pole) < -1e-9) {
                        return Err(invalid(format!("pole {pole:?} is not outside the closed source")));
                    }
                }
                Op::Moebius { a, b, c, d }
            }
            MapKind::RadialPower { exponent, center } => {
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(invalid(format!("radial exponent must be positive, got {exponent}")));
                }
                let center = center.unwrap_or_else(|| Point::zero(dim));
                if center.dim() != dim {
                    return Err(invalid("center dimension mismatch"));
                }
                Op::Radial { exponent: *exponent, center, norm: *source.norm() }
            }
            MapKind::ComplexPower2D { exponent, sector } => {
                need_plane("a complex power")?;
                let [lo, hi] = *sector;
                let width = hi - lo;
                if !(*exponent > 0.0) || !(width > 0.0 && width <= TAU) || exponent * width > TAU {
                    return Err(invalid("complex power needs exponent > 0 and a sector of width <= 2 pi / max(1, exponent)"));
                }
                Op::Power { exponent: *exponent, lo, hi }
            }
            MapKind::SlitRiemann2D => {
                need_plane("the slit map")?;
                if source.spec().shape != (ShapeSpec::Ball { center: Point::xy(0.0, 0.0), radius: 1.0 }) {
                    return Err(invalid("the slit map is defined on the unit disk"));
                }
                Op::Slit
            }
            MapKind::Composition { maps } => {
                if maps.is_empty() {
                    return Err(invalid("empty composition"));
                }
                let mut steps = Vec::with_capacity(maps.len());
                let mut cur = source.clone();
                for m in maps {
                    let step = Mapping::new(m.clone(), &cur)?;
                    cur = step.target.clone();
                    steps.push(step);
                }
                Op::Chain(steps)
            }
        };
        let (target, image) = match &op {
            Op::Chain(steps) => {
                let last = steps.last().expect("non-empty");
                let image = if steps.iter().all(|s| s.image == ImageRepr::Exact) {
                    ImageRepr::Exact
                } else {
                    ImageRepr::PolygonFallback { vertices: FALLBACK_SAMPLES }
                };
                (last.target.clone(), image)
            }
            _ => image_domain(&op, source)?,
        };
        let mapping = Mapping { kind, source: source.clone(), target, image, op };
        if matches!(mapping.op, Op::Slit) {
            mapping.validate_slit()?;
        }
        Ok(mapping)
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn source(&self) -> &Domain {
        &self.source
    }

    pub fn target(&self) -> &Domain {
        &self.target
    }

    pub fn image_repr(&self) -> ImageRepr {
        self.image
    }

    /// Image of an interior point, checked to be interior to the target.
    pub fn evaluate(&self, z: &Point) -> Result<Point> {
        self.source.boundary_distance(z)?;
        let w = self.op.forward(z)?;
        if !self.target.contains(&w) {
            return Err(Error::PointNotInDomain(w.to_vec()));
        }
        Ok(w)
    }

    pub fn inverse(&self, w: &Point) -> Result<Point> {
        self.target.boundary_distance(w)?;
        let z = self.op.backward(w)?;
        if !self.source.contains(&z) {
            return Err(Error::PointNotInDomain(z.to_vec()));
        }
        Ok(z)
    }

    /// The formula alone, without domain checks.
    pub fn apply(&self, z: &Point) -> Result<Point> {
        self.op.forward(z)
    }

    pub fn apply_inverse(&self, w: &Point) -> Result<Point> {
        self.op.backward(w)
    }

    /// Restriction to a subdomain of the source, with its own image domain.
    pub fn restrict(&self, sub: &Domain) -> Result<Mapping> {
        Mapping::new(self.kind.clone(), sub)
    }

    fn validate_slit(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x51_17);
        let mut accepted = 0;
        while accepted < 10_000 {
            let p = Point::xy(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if !self.source.contains(&p) {
                continue;
            }
            accepted += 1;
            let w = self.op.forward(&p)?;
            if !self.target.contains(&w) {
                return Err(invalid(format!("slit map sends {p:?} to {w:?} outside the slit disk")));
            }
            let back = self.op.backward(&w)?;
            if self.source.dist(&back, &p) >= 1e-8 {
                return Err(invalid(format!("slit map inverse error {} at {p:?}", self.source.dist(&back, &p))));
            }
        }
        for k in 1..1000 {
            let t = TAU * k as f64 / 1000.0;
            let w = self.op.forward(&Point::xy(t.cos(), t.sin()))?;
            if self.target.clearance(&w).abs() > 1e-6 {
                return Err(invalid(format!("boundary point at angle {t} maps off the slit disk boundary")));
            }
        }
        Ok(())
    }
}

fn similarity_shape(shape: &ShapeSpec, f: &dyn Fn(&Point) -> Point, lin: &dyn Fn(&Point) -> Point, scale: f64, axis_aligned: bool) -> Option<ShapeSpec> {
    Some(match shape {
        ShapeSpec::Ball { center, radius } => ShapeSpec::Ball { center: f(center), radius: scale * radius },
        ShapeSpec::HalfSpace { normal, offset } => {
            let n = lin(&(*normal * (1.0 / normal.euclid())));
            let o = offset / normal.euclid();
            // A point on the old boundary maps onto the new one.
            let on = f(&(*normal * (o / normal.euclid())));
            ShapeSpec::HalfSpace { normal: n, offset: n.dot(&on) }
        }
        ShapeSpec::SlitBall { center, radius, slit_start, slit_end } => ShapeSpec::SlitBall {
            center: f(center),
            radius: scale * radius,
            slit_start: f(slit_start),
            slit_end: f(slit_end),
        },
        ShapeSpec::PuncturedBall { center, radius, puncture } => {
            ShapeSpec::PuncturedBall { center: f(center), radius: scale * radius, puncture: f(puncture) }
        }
        ShapeSpec::Polygon { vertices } => ShapeSpec::Polygon { vertices: vertices.iter().map(f).collect() },
        ShapeSpec::Annulus { center, r_in, r_out } => {
            ShapeSpec::Annulus { center: f(center), r_in: scale * r_in, r_out: scale * r_out }
        }
        ShapeSpec::Intersection { parts } => ShapeSpec::Intersection {
            parts: parts.iter().map(|p| similarity_shape(p, f, lin, scale, axis_aligned)).collect::<Option<_>>()?,
        },
        ShapeSpec::ComplementInBox { lo, hi, obstacle } => {
            if !axis_aligned {
                return None;
            }
            let obstacle = match obstacle {
                ObstacleSpec::Ball { center, radius } => ObstacleSpec::Ball { center: f(center), radius: scale * radius },
                ObstacleSpec::Box { lo, hi } => ObstacleSpec::Box { lo: f(lo), hi: f(hi) },
            };
            ShapeSpec::ComplementInBox { lo: f(lo), hi: f(hi), obstacle }
        }
    })
}

fn image_domain(op: &Op, source: &Domain) -> Result<(Domain, ImageRepr)> {
    let spec = source.spec();
    let exact = |shape: ShapeSpec, window: Option<(Point, Point)>| -> Result<(Domain, ImageRepr)> {
        let mut s = DomainSpec::new(shape).with_norm(spec.norm);
        if let Some((lo, hi)) = window {
            s = s.with_window(lo, hi);
        }
        let d = s.build().map_err(|e| Error::ImageDomainInvalid(e.to_string()))?;
        Ok((d, ImageRepr::Exact))
    };
    match op {
        Op::Identity => return Ok((source.clone(), ImageRepr::Exact)),
        Op::Similarity { scale, rot, translation } => {
            let f = |p: &Point| mat_vec(rot, p) * *scale + *translation;
            let lin = |p: &Point| mat_vec(rot, p);
            if let Some(shape) = similarity_shape(&spec.shape, &f, &lin, *scale, is_identity(rot)) {
                let window = spec.window.map(|w| mapped_box(&w.lo, &w.hi, &f));
                return exact(shape, window);
            }
        }
        Op::Radial { exponent, center, .. } => {
            let shape = match &spec.shape {
                ShapeSpec::Ball { center: c, radius } if c == center => {
                    Some(ShapeSpec::Ball { center: *c, radius: radius.powf(*exponent) })
                }
                ShapeSpec::Annulus { center: c, r_in, r_out } if c == center => {
                    Some(ShapeSpec::Annulus { center: *c, r_in: r_in.powf(*exponent), r_out: r_out.powf(*exponent) })
                }
                ShapeSpec::PuncturedBall { center: c, radius, puncture } if c == center && puncture == center => {
                    Some(ShapeSpec::PuncturedBall { center: *c, radius: radius.powf(*exponent), puncture: *c })
                }
                _ => None,
            };
            if let Some(shape) = shape {
                return exact(shape, None);
            }
        }
        Op::Moebius { .. } => {
            if let ShapeSpec::Ball { center, radius } = &spec.shape {
                // Circles go to circles; the pole is outside, so the image is a disk.
                let pts: Vec<Point> = [0.0, TAU / 3.0, 2.0 * TAU / 3.0]
                    .iter()
                    .map(|t| op.forward(&(*center + Point::xy(t.cos(), t.sin()) * *radius)))
                    .collect::<Result<_>>()?;
                if let Some((c, r)) = circumcircle(&pts[0], &pts[1], &pts[2]) {
                    return exact(ShapeSpec::Ball { center: c, radius: r }, None);
                }
            }
        }
        Op::Slit => {
            return exact(
                ShapeSpec::SlitBall {
                    center: Point::xy(0.0, 0.0),
                    radius: 1.0,
                    slit_start: Point::xy(0.0, 0.0),
                    slit_end: Point::xy(1.0, 0.0),
                },
                None,
            );
        }
        Op::Power { .. } | Op::Chain(_) => {}
    }
    polygon_fallback(op, source)
}

fn mapped_box(lo: &Point, hi: &Point, f: &dyn Fn(&Point) -> Point) -> (Point, Point) {
    let dim = lo.dim();
    let mut out_lo = Point::zero(dim);
    let mut out_hi = Point::zero(dim);
    out_lo.coords_mut().fill(f64::INFINITY);
    out_hi.coords_mut().fill(f64::NEG_INFINITY);
    for mask in 0..(1u32 << dim) {
        let mut corner = *lo;
        for k in 0..dim {
            if mask >> k & 1 == 1 {
                corner.coords_mut()[k] = hi.coords()[k];
            }
        }
        let m = f(&corner);
        for k in 0..dim {
            out_lo.coords_mut()[k] = out_lo.coords()[k].min(m.coords()[k]);
            out_hi.coords_mut()[k] = out_hi.coords()[k].max(m.coords()[k]);
        }
    }
    (out_lo, out_hi)
}

fn circumcircle(a: &Point, b: &Point, c: &Point) -> Option<(Point, f64)> {
    let d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
    if d.abs() < 1e-300 {
        return None;
    }
    let (a2, b2, c2) = (a.dot(a), b.dot(b), c.dot(c));
    let ux = (a2 * (b.y() - c.y()) + b2 * (c.y() - a.y()) + c2 * (a.y() - b.y())) / d;
    let uy = (a2 * (c.x() - b.x()) + b2 * (a.x() - c.x()) + c2 * (b.x() - a.x())) / d;
    let center = Point::xy(ux, uy);
    Some((center, (center - *a).euclid()))
}

/// Boundary loop of a bounded planar domain: the polygon itself, or rays from
/// the deepest grid point for star-shaped shapes without holes.
fn boundary_loop(source: &Domain) -> Result<Vec<Point>> {
    let bad = |m: &str| Error::ImageDomainInvalid(m.to_string());
    if source.dimension() != 2 {
        return Err(bad("polygon fallback is 2D only"));
    }
    match &source.spec().shape {
        ShapeSpec::Polygon { vertices } => {
            let n = vertices.len();
            let perim: f64 = (0..n).map(|i| (vertices[(i + 1) % n] - vertices[i]).euclid()).sum();
            let mut out = Vec::with_capacity(FALLBACK_SAMPLES + n);
            for i in 0..n {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let pieces = (((b - a).euclid() / perim) * FALLBACK_SAMPLES as f64).ceil().max(1.0) as usize;
                for k in 0..pieces {
                    out.push(a.lerp(&b, k as f64 / pieces as f64));
                }
            }
            Ok(out)
        }
        ShapeSpec::Ball { .. } | ShapeSpec::Intersection { .. } => {
            let (lo, hi) = source.sampling_box()?;
            let mut best = (lo.midpoint(&hi), f64::NEG_INFINITY);
            for i in 0..=32 {
                for j in 0..=32 {
                    let p = Point::xy(
                        lo.x() + (hi.x() - lo.x()) * i as f64 / 32.0,
                        lo.y() + (hi.y() - lo.y()) * j as f64 / 32.0,
                    );
                    let d = source.clearance(&p);
                    if d > best.1 {
                        best = (p, d);
                    }
                }
            }
            let (c, depth) = best;
            if !(depth > 0.0) {
                return Err(bad("no interior point found"));
            }
            let reach = (hi - lo).euclid() * 2.0;
            let mut out = Vec::with_capacity(FALLBACK_SAMPLES);
            for k in 0..FALLBACK_SAMPLES {
                let t = TAU * k as f64 / FALLBACK_SAMPLES as f64;
                let dir = Point::xy(t.cos(), t.sin());
                let (mut inside, mut outside) = (0.0f64, reach);
                for _ in 0..80 {
                    let m = 0.5 * (inside + outside);
                    if source.contains(&(c + dir * m)) {
                        inside = m;
                    } else {
                        outside = m;
                    }
                }
                out.push(c + dir * outside);
            }
            Ok(out)
        }
        _ => Err(bad("no polygon fallback for shapes with holes or slits")),
    }
}

fn polygon_fallback(op: &Op, source: &Domain) -> Result<(Domain, ImageRepr)> {
    let ring = boundary_loop(source)?;
    let mut mapped = Vec::with_capacity(ring.len());
    for p in &ring {
        let w = op.forward(p).map_err(|e| Error::ImageDomainInvalid(format!("boundary sample {p:?}: {e}")))?;
        if !w.is_finite() {
            return Err(Error::ImageDomainInvalid(format!("boundary sample {p:?} maps to infinity")));
        }
        if mapped.last() != Some(&w) {
            mapped.push(w);
        }
    }
    let n = mapped.len();
    let spec = DomainSpec::new(ShapeSpec::Polygon { vertices: mapped });
    let d = spec.build().map_err(|e| Error::ImageDomainInvalid(e.to_string()))?;
    Ok((d, ImageRepr::PolygonFallback { vertices: n }))
}
