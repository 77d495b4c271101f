use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{Domain, Point, Polyline};

/// Point of the curve where a cone constant is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeWitness {
    pub point: Point,
    /// Norm arclength from the first vertex.
    pub position: f64,
    /// Smaller of the two one-sided quantities at `point`.
    pub side: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeReport {
    /// `max_z min(l(a[z1, z]), l(a[z, z2])) / d(z)`.
    pub c_length: f64,
    /// `l(a) / |z1 - z2|`.
    pub c_turning: f64,
    /// `max_z min(diam a[z1, z], diam a[z, z2]) / d(z)`.
    pub mu_diam: f64,
    pub length_at: Option<ConeWitness>,
    pub diam_at: Option<ConeWitness>,
    pub length: f64,
    pub chord: f64,
}

impl ConeReport {
    fn zero() -> Self {
        Self { c_length: 0.0, c_turning: 0.0, mu_diam: 0.0, length_at: None, diam_at: None, length: 0.0, chord: 0.0 }
    }

    /// Double-cone constant of the arc: the larger of the two conditions.
    pub fn c_curve(&self) -> f64 {
        self.c_length.max(self.c_turning)
    }
}

/// Sample along the curve: vertices interleaved with segment midpoints.
struct Probe {
    point: Point,
    position: f64,
    /// Index of the last vertex at or before the probe.
    vertex: usize,
}

fn probes(domain: &Domain, curve: &Polyline) -> Vec<Probe> {
    let v = curve.vertices();
    let cum = curve.cum_norm();
    let mut out = Vec::with_capacity(2 * v.len());
    for i in 0..v.len() {
        out.push(Probe { point: v[i], position: cum[i], vertex: i });
        if i + 1 < v.len() {
            let m = v[i].midpoint(&v[i + 1]);
            out.push(Probe { point: m, position: cum[i] + domain.dist(&v[i], &m), vertex: i });
        }
    }
    out
}

/// Diameters of the prefixes `a[z1, p]` and suffixes `a[p, z2]` at every probe.
fn side_diameters(domain: &Domain, curve: &Polyline, probes: &[Probe]) -> (Vec<f64>, Vec<f64>) {
    let v = curve.vertices();
    let n = v.len();
    // prefix[i]: diameter of vertices 0..=i; suffix[i]: of vertices i..n.
    let mut prefix = vec![0.0f64; n];
    for i in 1..n {
        let far = (0..i).map(|k| domain.dist(&v[k], &v[i])).fold(0.0, f64::max);
        prefix[i] = prefix[i - 1].max(far);
    }
    let mut suffix = vec![0.0f64; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let far = (i + 1..n).map(|k| domain.dist(&v[k], &v[i])).fold(0.0, f64::max);
        suffix[i] = suffix[i + 1].max(far);
    }
    let mut pre = Vec::with_capacity(probes.len());
    let mut suf = Vec::with_capacity(probes.len());
    for p in probes {
        let i = p.vertex;
        if p.point == v[i] {
            pre.push(prefix[i]);
            suf.push(suffix[i]);
        } else {
            // A midpoint of [v_i, v_{i+1}].
            let far_pre = (0..=i).map(|k| domain.dist(&v[k], &p.point)).fold(0.0, f64::max);
            let far_suf = (i + 1..n).map(|k| domain.dist(&v[k], &p.point)).fold(0.0, f64::max);
            pre.push(prefix[i].max(far_pre));
            suf.push(suffix[i + 1].max(far_suf));
        }
    }
    (pre, suf)
}

/// Cone (cigar) constants of `curve`, evaluated at vertices and segment midpoints.
pub fn cone_report(domain: &Domain, curve: &Polyline) -> Result<ConeReport> {
    let v = curve.vertices();
    let distinct = v.iter().any(|p| *p != v[0]);
    if !distinct {
        return Ok(ConeReport::zero());
    }
    let chord = domain.dist(&curve.first(), &curve.last());
    if chord < 1e-12 {
        return Err(Error::DegeneratePair);
    }
    let length = curve.norm_length();
    let probes = probes(domain, curve);
    let (pre, suf) = side_diameters(domain, curve, &probes);
    let mut report = ConeReport { c_turning: length / chord, length, chord, ..ConeReport::zero() };
    for (k, p) in probes.iter().enumerate() {
        let d = domain.boundary_distance(&p.point)?;
        let side = p.position.min(length - p.position);
        let value = side / d;
        if value > report.c_length {
            report.c_length = value;
            report.length_at = Some(ConeWitness { point: p.point, position: p.position, side, value });
        }
        let side = pre[k].min(suf[k]);
        let value = side / d;
        if value > report.mu_diam {
            report.mu_diam = value;
            report.diam_at = Some(ConeWitness { point: p.point, position: p.position, side, value });
        }
    }
    Ok(report)
}

/// First vertex maximizing the boundary distance.
pub fn deepest_vertex(domain: &Domain, curve: &Polyline) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in curve.vertices().iter().enumerate() {
        let d = domain.clearance(v);
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rho1Report {
    /// `max |x - z| / d(z)` over `z` between an endpoint `x` and `z0`, both sides.
    pub rho1: f64,
    /// The same with every vertex of a side allowed as the start point.
    pub rho1_subarc: f64,
    pub z0_index: usize,
}

/// Empirical cone constant of the two halves of `curve` split at vertex `z0_index`.
pub fn rho1_check(domain: &Domain, curve: &Polyline, z0_index: usize) -> Result<Rho1Report> {
    let v = curve.vertices();
    let n = v.len();
    if z0_index >= n {
        return Err(Error::InvalidParameter(format!("z0 index {z0_index} beyond {n} vertices")));
    }
    let d: Vec<f64> = v.iter().map(|p| domain.boundary_distance(p)).collect::<Result<_>>()?;
    let ratio = |s: usize, z: usize| domain.dist(&v[s], &v[z]) / d[z];
    let mut rho1 = 0.0f64;
    let mut sub = 0.0f64;
    for s in 0..=z0_index {
        for z in s..=z0_index {
            let r = ratio(s, z);
            sub = sub.max(r);
            if s == 0 {
                rho1 = rho1.max(r);
            }
        }
    }
    for s in z0_index..n {
        for z in z0_index..=s {
            let r = ratio(s, z);
            sub = sub.max(r);
            if s == n - 1 {
                rho1 = rho1.max(r);
            }
        }
    }
    Ok(Rho1Report { rho1, rho1_subarc: sub, z0_index })
}
