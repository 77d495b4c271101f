//! Deterministic Whitney-style interior sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::domain::Domain;
use super::knn::KdIndex;
use super::norm::Point;
use crate::error::{Error, Result};

/// Cells may not exceed this fraction of their centre's clearance.
const WHITNEY_RATIO: f64 = 0.4;
const MAX_DEPTH: u32 = 48;

/// Seeded point cloud covering `{ z : d(z) >= min_clearance }` with dispersion
/// at most `resolution`. Cells refine towards the boundary so the cloud has a
/// layer at every dyadic clearance down to `min_clearance`.
pub fn sample_interior(domain: &Domain, resolution: f64, min_clearance: f64, seed: u64) -> Result<Vec<Point>> {
    if !(resolution > 0.0) || !(min_clearance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling needs resolution > 0 and clearance >= 0 (got {resolution}, {min_clearance})"
        )));
    }
    let (lo, hi) = domain.sampling_box()?;
    let dim = domain.dimension();
    let extent: Vec<f64> = (0..dim).map(|i| hi.coords()[i] - lo.coords()[i]).collect();
    if extent.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::EmptySample);
    }
    // A zero clearance floor would refine forever at the boundary.
    let floor = if min_clearance > 0.0 { min_clearance } else { resolution * 2f64.powi(-20) };
    let side = extent.iter().cloned().fold(f64::INFINITY, f64::min);
    let counts: Vec<usize> = extent.iter().map(|e| (e / side).ceil().max(1.0) as usize).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut center = lo;
        for (i, &count) in counts.iter().enumerate() {
            let k = rem % count;
            rem /= count;
            center.coords_mut()[i] = lo.coords()[i] + (k as f64 + 0.5) * side;
        }
        let cell = Cell { center, half: 0.5 * side, depth: 0 };
        Sampler { domain, lo, hi, resolution, floor }.visit(cell, &mut rng, &mut out);
    }
    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(out)
}

struct Cell {
    center: Point,
    half: f64,
    depth: u32,
}

struct Sampler<'a> {
    domain: &'a Domain,
    lo: Point,
    hi: Point,
    resolution: f64,
    floor: f64,
}

impl Sampler<'_> {
    fn in_box(&self, p: &Point) -> bool {
        (0..p.dim()).all(|i| p.coords()[i] >= self.lo.coords()[i] && p.coords()[i] <= self.hi.coords()[i])
    }

    fn visit(&self, cell: Cell, rng: &mut ChaCha8Rng, out: &mut Vec<Point>) {
        let domain = self.domain;
        let dim = domain.dimension();
        let mut corner = Point::zero(dim);
        corner.coords_mut().iter_mut().for_each(|c| *c = cell.half);
        let rho = domain.norm().norm(&corner);
        let sdf = domain.clearance(&cell.center);
        if -sdf >= rho || (sdf >= 0.0 && sdf + rho < self.floor) {
            return;
        }
        let leaf = 2.0 * rho <= self.resolution && rho <= WHITNEY_RATIO * sdf;
        if leaf || cell.depth >= MAX_DEPTH || rho < 0.25 * WHITNEY_RATIO * self.floor {
            let mut jitter = Point::zero(dim);
            for c in jitter.coords_mut() {
                *c = rng.gen_range(-0.25..0.25) * cell.half;
            }
            for p in [cell.center + jitter, cell.center] {
                if self.in_box(&p) && domain.clearance(&p) >= self.floor {
                    out.push(p);
                    break;
                }
            }
            return;
        }
        let q = 0.5 * cell.half;
        for mask in 0..(1usize << dim) {
            let mut c = cell.center;
            for i in 0..dim {
                c.coords_mut()[i] += if mask >> i & 1 == 1 { q } else { -q };
            }
            self.visit(Cell { center: c, half: q, depth: cell.depth + 1 }, rng, out);
        }
    }
}

/// Rejects domains whose coarse visibility graph falls apart.
pub(crate) fn connectivity_probe(domain: &Domain) -> Result<()> {
    let (lo, hi) = domain.sampling_box().map_err(|_| {
        Error::InvalidDomain("non-convex unbounded intersection needs a sampling window".into())
    })?;
    let extent = (0..domain.dimension())
        .map(|i| hi.coords()[i] - lo.coords()[i])
        .fold(0.0f64, f64::max);
    let res = extent / 40.0;
    let pts = sample_interior(domain, res, res / 8.0, 0).map_err(|e| match e {
        Error::EmptySample => Error::InvalidDomain("domain is empty".into()),
        e => e,
    })?;
    if pts.len() < 2 {
        return Ok(());
    }
    let index = KdIndex::new(&pts);
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, p) in pts.iter().enumerate() {
        for (j, _) in index.nearest(p, 12) {
            if j != i && domain.segment_in_domain(p, &pts[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let root = find(&mut parent, 0);
    if (1..pts.len()).any(|i| find(&mut parent, i) != root) {
        return Err(Error::InvalidDomain("connectivity probe found several components".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::domain::{DomainSpec, ShapeSpec};

    #[test]
    fn deterministic_per_seed() {
        let ball = Domain::unit_disk();
        let a = sample_interior(&ball, 0.1, 0.01, 7).unwrap();
        let b = sample_interior(&ball, 0.1, 0.01, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_interior(&ball, 0.1, 0.01, 8).unwrap());
    }

    #[test]
    fn errors() {
        let ball = Domain::unit_disk();
        assert!(matches!(sample_interior(&ball, 0.1, 2.0, 1), Err(Error::EmptySample)));
        let hp = Domain::upper_half_plane(None);
        assert!(matches!(sample_interior(&hp, 0.1, 0.01, 1), Err(Error::SamplingWindowRequired)));
    }

    #[test]
    fn respects_clearance_and_dispersion() {
        let slit = Domain::slit_disk();
        let (res, clear) = (0.1, 0.01);
        let pts = sample_interior(&slit, res, clear, 3).unwrap();
        assert!(pts.iter().all(|p| slit.clearance(p) >= clear));
        let index = KdIndex::new(&pts);
        // Probe a grid of admissible points; each must have a sample within `res`.
        for i in 0..60 {
            for j in 0..60 {
                let z = Point::xy(-1.0 + i as f64 / 30.0, -1.0 + j as f64 / 30.0);
                if slit.clearance(&z) >= clear {
                    assert!(index.nearest(&z, 1)[0].1 <= res, "{z:?}");
                }
            }
        }
    }

    #[test]
    fn refines_towards_the_boundary() {
        let ball = Domain::unit_disk();
        let pts = sample_interior(&ball, 0.2, 0.005, 1).unwrap();
        let near = pts.iter().filter(|p| ball.clearance(p) < 0.02).count();
        assert!(near > 50, "only {near} points near the boundary");
    }

    #[test]
    fn windowed_half_space() {
        let hp = DomainSpec::new(ShapeSpec::HalfSpace { normal: Point::xy(0.0, 1.0), offset: 0.0 })
            .with_window(Point::xy(-1.0, 0.0), Point::xy(1.0, 1.0))
            .build()
            .unwrap();
        let pts = sample_interior(&hp, 0.1, 0.01, 1).unwrap();
        assert!(pts.iter().all(|p| p.x().abs() <= 1.0 && p.y() >= 0.01 && p.y() <= 1.0));
    }
}
