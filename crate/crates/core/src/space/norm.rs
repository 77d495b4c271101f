use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A point (or vector) of R^2 or R^3, stored inline so it is `Copy`.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() < 2 || coords.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "point dimension {} not in [2, {MAX_DIM}]",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite point {coords:?}")));
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self { coords: c, dim: coords.len() as u8 })
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        Self { coords: [x, y, 0.0], dim: 2 }
    }

    pub const fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self { coords: [x, y, z], dim: 3 }
    }

    pub fn zero(dim: usize) -> Self {
        Self { coords: [0.0; MAX_DIM], dim: dim as u8 }
    }

    /// Unit vector along axis `i`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.coords[i] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        let d = self.dim as usize;
        &mut self.coords[..d]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords().to_vec()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords().iter().zip(other.coords()).map(|(a, b)| a * b).sum()
    }

    pub fn euclid(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        *self + (*other - *self) * t
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        self.lerp(other, 0.5)
    }

    /// Raw storage, padded with zeros to three coordinates.
    pub fn padded(&self) -> [f64; MAX_DIM] {
        self.coords
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(mut self, rhs: Point) -> Point {
        for i in 0..MAX_DIM {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(mut self, rhs: Point) -> Point {
        for i in 0..MAX_DIM {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(mut self, rhs: f64) -> Point {
        for c in &mut self.coords {
            *c *= rhs;
        }
        self
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Norm tag of the ambient space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum Norm {
    #[default]
    Euclidean,
    P { p: f64 },
    Sup,
}


impl Norm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Norm::P { p } if !(p >= 1.0) => {
                Err(Error::InvalidParameter(format!("p-norm needs p >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// Collapses `P { p }` with p = 2 or p = inf onto the dedicated variants.
    pub fn canonical(self) -> Norm {
        match self {
            Norm::P { p: 2.0 } => Norm::Euclidean,
            Norm::P { p } if p.is_infinite() => Norm::Sup,
            n => n,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.canonical(), Norm::Euclidean)
    }

    pub fn norm(&self, v: &Point) -> f64 {
        let c = v.coords();
        match self.canonical() {
            Norm::Euclidean => {
                let m = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if m == 0.0 || !m.is_finite() {
                    return m;
                }
                m * c.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
            }
            Norm::Sup => c.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            Norm::P { p } => {
                if p == 1.0 {
                    return c.iter().map(|x| x.abs()).sum();
                }
                let m = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * c.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }

    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.norm(&(*a - *b))
    }

    /// Dual norm, used for distances to hyperplanes.
    pub fn dual(&self) -> Norm {
        match self.canonical() {
            Norm::Euclidean => Norm::Euclidean,
            Norm::Sup => Norm::P { p: 1.0 },
            Norm::P { p: 1.0 } => Norm::Sup,
            Norm::P { p } => Norm::P { p: p / (p - 1.0) },
        }
    }

    /// Distance from `z` to the closed segment `[a, b]`.
    pub fn dist_to_segment(&self, z: &Point, a: &Point, b: &Point) -> f64 {
        self.segment_argmin(a, b, |q| self.dist(z, q)).1
    }

    /// Minimizes a convex function of the segment parameter; returns (t, value).
    /// Exact for the Euclidean norm, ternary search to 1e-12 otherwise.
    pub fn segment_argmin<F: Fn(&Point) -> f64>(&self, a: &Point, b: &Point, f: F) -> (f64, f64) {
        let _ = self;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-12 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(&a.lerp(b, m1)) <= f(&a.lerp(b, m2)) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let t = 0.5 * (lo + hi);
        let mut best = (t, f(&a.lerp(b, t)));
        for t0 in [0.0, 1.0] {
            let v = f(&a.lerp(b, t0));
            if v < best.1 {
                best = (t0, v);
            }
        }
        best
    }
}

/// Euclidean parameter of the point of `[a, b]` nearest to `z`.
pub fn euclid_segment_param(z: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len2 = ab.dot(&ab);
    if len2 == 0.0 {
        return 0.0;
    }
    ((*z - *a).dot(&ab) / len2).clamp(0.0, 1.0)
}

/// A finite-dimensional normed space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpace {
    pub dimension: usize,
    #[serde(default)]
    pub norm: Norm,
}

impl NormSpace {
    pub fn euclidean(dimension: usize) -> Self {
        Self { dimension, norm: Norm::Euclidean }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_DIM).contains(&self.dimension) {
            return Err(Error::InvalidParameter(format!(
                "dimension {} not in [2, {MAX_DIM}]",
                self.dimension
            )));
        }
        self.norm.validate()
    }

    pub fn norm(&self, v: &Point) -> f64 {
        self.norm.norm(v)
    }

    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.norm.dist(a, b)
    }

    pub fn dist_to_segment(&self, z: &Point, a: &Point, b: &Point) -> f64 {
        if self.norm.is_euclidean() {
            let t = euclid_segment_param(z, a, b);
            return self.dist(z, &a.lerp(b, t));
        }
        self.norm.dist_to_segment(z, a, b)
    }
}
