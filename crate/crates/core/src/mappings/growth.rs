use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuation beyond the last knot `(T, y_T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Tail {
    /// `y_T + slope (t - T)`.
    Affine { slope: f64 },
    /// `y_T (t / T)^exponent`.
    Power { exponent: f64 },
}

/// Strictly increasing piecewise-linear homeomorphism of `[0, inf)` through
/// the origin, with a declared tail law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrowthRepr", into = "GrowthRepr")]
pub struct GrowthFunction {
    knots: Vec<(f64, f64)>,
    tail: Tail,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GrowthRepr {
    knots: Vec<(f64, f64)>,
    tail: Tail,
}

impl TryFrom<GrowthRepr> for GrowthFunction {
    type Error = Error;

    fn try_from(r: GrowthRepr) -> Result<Self> {
        GrowthFunction::new(r.knots, r.tail)
    }
}

impl From<GrowthFunction> for GrowthRepr {
    fn from(g: GrowthFunction) -> Self {
        GrowthRepr { knots: g.knots, tail: g.tail }
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl GrowthFunction {
    /// Knots after the origin, which is prepended when missing.
    pub fn new(mut knots: Vec<(f64, f64)>, tail: Tail) -> Result<Self> {
        if knots.first() != Some(&(0.0, 0.0)) {
            knots.insert(0, (0.0, 0.0));
        }
        if knots.len() < 2 {
            return Err(bad("growth function needs a knot beyond the origin".into()));
        }
        for w in knots.windows(2) {
            let ((t0, y0), (t1, y1)) = (w[0], w[1]);
            if !(t1.is_finite() && y1.is_finite() && t1 > t0 && y1 > y0) {
                return Err(bad(format!("knots must be finite and strictly increasing: {:?} then {:?}", w[0], w[1])));
            }
        }
        match tail {
            Tail::Affine { slope } if !(slope > 0.0 && slope.is_finite()) => {
                return Err(bad(format!("affine tail slope must be positive, got {slope}")))
            }
            Tail::Power { exponent } if !(exponent > 0.0 && exponent.is_finite()) => {
                return Err(bad(format!("power tail exponent must be positive, got {exponent}")))
            }
            _ => {}
        }
        Ok(Self { knots, tail })
    }

    pub fn identity() -> Self {
        Self { knots: vec![(0.0, 0.0), (1.0, 1.0)], tail: Tail::Affine { slope: 1.0 } }
    }

    /// `t -> slope * t`.
    pub fn linear(slope: f64) -> Result<Self> {
        Self::new(vec![(1.0, slope)], Tail::Affine { slope })
    }

    /// `t -> t^exponent` beyond `t = 1`, linear before.
    pub fn power(exponent: f64) -> Result<Self> {
        Self::new(vec![(1.0, 1.0)], Tail::Power { exponent })
    }

    /// Growth function of distortion type: additionally `f(t) >= t` everywhere.
    pub fn new_phi(knots: Vec<(f64, f64)>, tail: Tail) -> Result<Self> {
        let g = Self::new(knots, tail)?;
        g.check_phi()?;
        Ok(g)
    }

    pub fn check_phi(&self) -> Result<()> {
        if let Some(&(t, y)) = self.knots.iter().find(|(t, y)| y < t) {
            return Err(bad(format!("growth function drops below the diagonal at ({t}, {y})")));
        }
        let ok = match self.tail {
            Tail::Affine { slope } => slope >= 1.0,
            Tail::Power { exponent } => exponent >= 1.0,
        };
        if !ok {
            return Err(bad("tail must grow at least linearly for a distortion function".into()));
        }
        Ok(())
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn last_knot(&self) -> (f64, f64) {
        *self.knots.last().expect("validated")
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (tt, yt) = self.last_knot();
        if t >= tt {
            return match self.tail {
                Tail::Affine { slope } => yt + slope * (t - tt),
                Tail::Power { exponent } => yt * (t / tt).powf(exponent),
            };
        }
        let k = self.knots.partition_point(|&(x, _)| x <= t);
        let ((t0, y0), (t1, y1)) = (self.knots[k - 1], self.knots[k]);
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0 && y.is_finite()) {
            return Err(Error::InversionOutOfRange(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let (tt, yt) = self.last_knot();
        if y >= yt {
            return Ok(match self.tail {
                Tail::Affine { slope } => tt + (y - yt) / slope,
                Tail::Power { exponent } => tt * (y / yt).powf(1.0 / exponent),
            });
        }
        let k = self.knots.partition_point(|&(_, v)| v <= y);
        let ((t0, y0), (t1, y1)) = (self.knots[k - 1], self.knots[k]);
        Ok(t0 + (t1 - t0) * (y - y0) / (y1 - y0))
    }

    /// Non-decreasing upper envelope of `(t, value)` samples, made strictly
    /// increasing by dropping flat steps. With `phi`, values are clamped to
    /// at least `t` and the tail slope to at least 1.
    pub fn envelope(samples: &[(f64, f64)], phi: bool) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> =
            samples.iter().copied().filter(|(t, v)| t.is_finite() && v.is_finite() && *t > 0.0).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut knots: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        let mut running = 0.0f64;
        for (t, v) in pts {
            running = running.max(v);
            let y = if phi { running.max(t) } else { running };
            match knots.last_mut() {
                Some(last) if last.0 == t => last.1 = last.1.max(y),
                Some(last) if y <= last.1 => {}
                _ => knots.push((t, y)),
            }
        }
        knots.retain(|&(_, y)| y > 0.0);
        if knots.is_empty() {
            return Ok(Self::identity());
        }
        let slope = match knots.as_slice() {
            [.., (t0, y0), (t1, y1)] => (y1 - y0) / (t1 - t0),
            [(t, y)] => y / t,
            [] => unreachable!(),
        };
        let slope = if phi { slope.max(1.0) } else { slope };
        Self::new(knots, Tail::Affine { slope })
    }

    /// Largest `eval(t) / t` over knots and the tail limit.
    pub fn max_ratio(&self) -> f64 {
        let knots = self.knots.iter().skip(1).map(|(t, y)| y / t).fold(0.0, f64::max);
        match self.tail {
            Tail::Affine { slope } => knots.max(slope),
            Tail::Power { .. } => knots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_and_power_tails() {
        let g = GrowthFunction::new(vec![(1.0, 2.0), (2.0, 5.0)], Tail::Affine { slope: 4.0 }).unwrap();
        assert_eq!(g.eval(0.5), 1.0);
        assert_eq!(g.eval(1.5), 3.5);
        assert_eq!(g.eval(3.0), 9.0);
        assert_eq!(g.inverse(9.0).unwrap(), 3.0);
        let p = GrowthFunction::power(2.0).unwrap();
        assert_eq!(p.eval(3.0), 9.0);
        assert!((p.inverse(16.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(matches!(p.inverse(-1.0), Err(Error::InversionOutOfRange(_))));
        assert!(matches!(p.inverse(f64::NAN), Err(Error::InversionOutOfRange(_))));
    }

    #[test]
    fn rejects_non_monotone_and_sub_diagonal() {
        assert!(GrowthFunction::new(vec![(1.0, 2.0), (2.0, 2.0)], Tail::Affine { slope: 1.0 }).is_err());
        assert!(GrowthFunction::new_phi(vec![(1.0, 0.5)], Tail::Affine { slope: 1.0 }).is_err());
        assert!(GrowthFunction::new_phi(vec![(1.0, 2.0)], Tail::Affine { slope: 0.5 }).is_err());
    }

    #[test]
    fn envelope_of_identity_samples_is_identity() {
        let s: Vec<_> = (1..20).map(|k| (k as f64 * 0.3, k as f64 * 0.3)).collect();
        let g = GrowthFunction::envelope(&s, true).unwrap();
        for k in 1..40 {
            let t = k as f64 * 0.17;
            assert!((g.eval(t) - t).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn serde_round_trip() {
        let g = GrowthFunction::new(vec![(1.0, 2.0), (3.0, 7.0)], Tail::Power { exponent: 1.5 }).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GrowthFunction>(&s).unwrap(), g);
        assert!(serde_json::from_str::<GrowthFunction>(r#"{"knots":[[1,1],[0.5,2]],"tail":{"kind":"affine","slope":1}}"#).is_err());
    }

    proptest! {
        #[test]
        fn inverse_round_trip(steps in prop::collection::vec((0.01f64..3.0, 0.01f64..3.0), 1..8),
                              gamma in 0.2f64..4.0, t in 0.0f64..50.0) {
            let mut knots = Vec::new();
            let (mut x, mut y) = (0.0, 0.0);
            for (dx, dy) in steps {
                x += dx;
                y += dy;
                knots.push((x, y));
            }
            let g = GrowthFunction::new(knots, Tail::Power { exponent: gamma }).unwrap();
            let back = g.inverse(g.eval(t)).unwrap();
            prop_assert!((back - t).abs() <= 1e-12 * (1.0 + t), "{} vs {}", back, t);
        }

        #[test]
        fn envelope_dominates_and_is_monotone(samples in prop::collection::vec((0.01f64..10.0, 0.0f64..20.0), 1..40)) {
            let g = GrowthFunction::envelope(&samples, true).unwrap();
            for &(t, v) in &samples {
                prop_assert!(g.eval(t) >= v.max(t) * (1.0 - 1e-12));
            }
            let mut prev = 0.0;
            for k in 0..200 {
                let y = g.eval(k as f64 * 0.07);
                prop_assert!(y >= prev);
                prev = y;
            }
            prop_assert!(g.check_phi().is_ok());
        }
    }
}
