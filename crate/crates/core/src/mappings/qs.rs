use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Mapping;
use crate::error::{Error, Result};
use crate::space::{Domain, Point};

/// Triples closer than this to degenerate are rejected.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Distance-ratio scatter of a map and its non-decreasing upper envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QsReport {
    /// `(rho(T), rho(fT))` per triple.
    pub samples: Vec<(f64, f64)>,
    /// Knots `(t, max rho(fT) over rho(T) <= t)`, strictly increasing in both.
    pub envelope: Vec<(f64, f64)>,
    pub eta_at_one: f64,
}

impl QsReport {
    /// Envelope value at `t`; zero below the first sample.
    pub fn eta(&self, t: f64) -> f64 {
        let k = self.envelope.partition_point(|&(x, _)| x <= t);
        if k == 0 {
            0.0
        } else {
            self.envelope[k - 1].1
        }
    }

    fn from_samples(samples: Vec<(f64, f64)>) -> Self {
        let envelope = step_envelope(&samples);
        let mut r = Self { samples, envelope, eta_at_one: 0.0 };
        r.eta_at_one = r.eta(1.0);
        r
    }
}

fn step_envelope(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (t, v) in pts {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 = last.1.max(v),
            Some(last) if v <= last.1 => {}
            _ => out.push((t, v)),
        }
    }
    out
}

fn ratio(domain: &Domain, x: &Point, a: &Point, b: &Point, idx: usize) -> Result<f64> {
    let den = domain.dist(b, x);
    if den < DEGENERATE_TOL {
        return Err(Error::DegenerateTriple(idx));
    }
    Ok(domain.dist(a, x) / den)
}

fn in_set(set: &[Point], p: &Point) -> bool {
    set.iter().any(|q| (*q - *p).euclid() <= DEGENERATE_TOL)
}

/// Ratios `|a - x| / |b - x|` before and after `map` for each `(x, a, b)`.
/// With `rel_set`, each triple needs `x` in the set or both `a` and `b` in it.
pub fn qs_ratio_test(map: &Mapping, triples: &[(Point, Point, Point)], rel_set: Option<&[Point]>) -> Result<QsReport> {
    let samples = triples
        .par_iter()
        .enumerate()
        .map(|(idx, (x, a, b))| {
            if let Some(set) = rel_set {
                if !(in_set(set, x) || (in_set(set, a) && in_set(set, b))) {
                    return Err(Error::TripleNotInPair(idx));
                }
            }
            let t = ratio(map.source(), x, a, b, idx)?;
            let (fx, fa, fb) = (map.evaluate(x)?, map.evaluate(a)?, map.evaluate(b)?);
            Ok((t, ratio(map.target(), &fx, &fa, &fb, idx)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QsReport::from_samples(samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalQsParams {
    pub balls: usize,
    pub triples_per_ball: usize,
    pub seed: u64,
}

impl Default for LocalQsParams {
    fn default() -> Self {
        Self { balls: 16, triples_per_ball: 64, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallReport {
    pub center: Point,
    pub radius: f64,
    pub report: QsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalQsReport {
    pub q: f64,
    pub balls: Vec<BallReport>,
    /// Envelope over all balls together.
    pub envelope: QsReport,
    /// Ball with the largest envelope value at 1.
    pub worst_ball: usize,
}

fn point_in_ball(rng: &mut ChaCha8Rng, domain: &Domain, center: &Point, radius: f64) -> Point {
    loop {
        let mut p = *center;
        for c in p.coords_mut() {
            *c += rng.gen_range(-radius..radius);
        }
        if domain.dist(&p, center) < radius {
            return p;
        }
    }
}

/// Ratio tests restricted to random balls `B(a, q d(a))`.
pub fn local_qs_test(map: &Mapping, q: f64, params: &LocalQsParams) -> Result<LocalQsReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    if params.balls == 0 || params.triples_per_ball == 0 {
        return Err(Error::InvalidParameter("local test needs balls and triples".into()));
    }
    let source = map.source();
    let (lo, hi) = source.sampling_box()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centers = Vec::with_capacity(params.balls);
    while centers.len() < params.balls {
        let mut p = lo;
        for (k, c) in p.coords_mut().iter_mut().enumerate() {
            *c = rng.gen_range(lo.coords()[k]..hi.coords()[k]);
        }
        if source.contains(&p) {
            centers.push(p);
        }
    }
    let balls = centers
        .into_iter()
        .enumerate()
        .map(|(i, center)| {
            let radius = q * source.boundary_distance(&center)?;
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_mul(31).wrapping_add(i as u64 + 1));
            let triples: Vec<_> = (0..params.triples_per_ball)
                .map(|_| {
                    let x = point_in_ball(&mut rng, source, &center, radius);
                    let a = point_in_ball(&mut rng, source, &center, radius);
                    let b = point_in_ball(&mut rng, source, &center, radius);
                    (x, a, b)
                })
                .collect();
            Ok(BallReport { center, radius, report: qs_ratio_test(map, &triples, None)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<(f64, f64)> = balls.iter().flat_map(|b| b.report.samples.iter().copied()).collect();
    let worst_ball = balls
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |w, (i, b)| if b.report.eta_at_one > w.1 { (i, b.report.eta_at_one) } else { w })
        .0;
    Ok(LocalQsReport { q, balls, envelope: QsReport::from_samples(all), worst_ball })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::MapKind;

    fn disk() -> Domain {
        Domain::unit_disk()
    }

    #[test]
    fn radial_square_triple() {
        let m = Mapping::new(MapKind::RadialPower { exponent: 2.0, center: None }, &disk()).unwrap();
        let r = qs_ratio_test(&m, &[(Point::xy(0.5, 0.0), Point::xy(0.6, 0.0), Point::xy(0.4, 0.0))], None).unwrap();
        let (t, v) = r.samples[0];
        assert!((t - 1.0).abs() < 1e-12);
        // (0.36 - 0.25) / (0.25 - 0.16)
        assert!((v - 11.0 / 9.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn similarity_keeps_ratios() {
        let m = Mapping::new(
            MapKind::Similarity { scale: 4.0, angle: Some(1.0), rotation: None, translation: Point::xy(3.0, 3.0) },
            &disk(),
        )
        .unwrap();
        let r = local_qs_test(&m, 0.5, &LocalQsParams::default()).unwrap();
        for b in &r.balls {
            for &(t, v) in &b.report.samples {
                assert!((t - v).abs() <= 1e-12 * (1.0 + t));
            }
        }
        for &(t, v) in &r.envelope.envelope {
            assert!((t - v).abs() <= 1e-12 * (1.0 + t));
        }
        let id = Mapping::new(MapKind::Identity, &disk()).unwrap();
        let r = local_qs_test(&id, 0.75, &LocalQsParams::default()).unwrap();
        assert!(r.envelope.envelope.iter().all(|&(t, v)| t == v));
    }

    #[test]
    fn degenerate_and_relative_checks() {
        let id = Mapping::new(MapKind::Identity, &disk()).unwrap();
        let x = Point::xy(0.1, 0.1);
        assert!(matches!(qs_ratio_test(&id, &[(x, Point::xy(0.2, 0.0), x)], None), Err(Error::DegenerateTriple(0))));
        let set = [Point::xy(0.2, 0.0), Point::xy(0.3, 0.0)];
        let ok = (Point::xy(0.0, 0.0), set[0], set[1]);
        let bad = (Point::xy(0.0, 0.0), set[0], Point::xy(0.5, 0.5));
        assert!(qs_ratio_test(&id, &[ok], Some(&set)).is_ok());
        assert!(matches!(qs_ratio_test(&id, &[ok, bad], Some(&set)), Err(Error::TripleNotInPair(1))));
        assert!(matches!(local_qs_test(&id, 1.0, &LocalQsParams::default()), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn moebius_local_envelope_is_bounded() {
        let m = Mapping::new(
            crate::mappings::MapKind::Moebius2D { a: [1.0, 0.0], b: [0.5, 0.0], c: [0.5, 0.0], d: [1.0, 0.0] },
            &disk(),
        )
        .unwrap();
        let r = local_qs_test(&m, 0.75, &LocalQsParams::default()).unwrap();
        let worst = r.balls[r.worst_ball].report.eta_at_one;
        assert!(worst.is_finite() && (1.0..50.0).contains(&worst), "{worst}");
        for w in r.envelope.envelope.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
        }
    }
}
