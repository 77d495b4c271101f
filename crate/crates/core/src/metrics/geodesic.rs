use serde::{Deserialize, Serialize};

use super::graph::{GraphParams, QHGraph};
use super::lower::{j_metric, k_lower_bound};
use super::quadrature::segment_qh_gl5;
use crate::error::Result;
use crate::space::{Domain, Point, Polyline};

/// Local-descent settings for witness refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineParams {
    pub enabled: bool,
    /// Per-level bound on the qh length of a witness segment, coarse to fine.
    pub segment_targets: Vec<f64>,
    pub rel_improvement: f64,
    pub max_sweeps: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self { enabled: true, segment_targets: vec![0.5, 0.25, 0.1], rel_improvement: 1e-4, max_sweeps: 50 }
    }
}

impl RefineParams {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }
}

/// Two-sided estimate of `k_D(z1, z2)` with its witness curve.
#[derive(Clone, Debug, Serialize)]
pub struct PairEstimate {
    pub z1: Point,
    pub z2: Point,
    pub j_value: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    pub witness: Polyline,
    pub graph_params: GraphParams,
}

impl PairEstimate {
    pub fn ratio_upper(&self) -> f64 {
        if self.j_value > 0.0 {
            self.k_upper / self.j_value
        } else {
            1.0
        }
    }
}

const MAX_VERTICES: usize = 4000;
const SHORTCUT_WINDOW: usize = 16;

/// Estimates `k_D(z1, z2)` on `graph` with default refinement.
pub fn k_between(domain: &Domain, z1: &Point, z2: &Point, graph: &QHGraph) -> Result<PairEstimate> {
    k_between_with(domain, z1, z2, graph, &RefineParams::default())
}

pub fn k_between_with(
    domain: &Domain,
    z1: &Point,
    z2: &Point,
    graph: &QHGraph,
    refine: &RefineParams,
) -> Result<PairEstimate> {
    let j_value = j_metric(domain, z1, z2)?;
    let k_lower = k_lower_bound(domain, z1, z2)?;
    let tol = graph.params().quad_tol;
    let (chain, _) = graph.shortest_path(z1, z2)?;
    let mut best = Polyline::with_tol(domain, chain.clone(), tol)?;
    // A visible chord is still refined: it is rarely the geodesic.
    if refine.enabled {
        for cand in refine_levels(domain, chain, refine) {
            let line = Polyline::with_tol(domain, cand, tol)?;
            if line.qh_length() < best.qh_length() {
                best = line;
            }
        }
    }
    let mut k_upper = best.qh_length();
    // Quadrature slack only; real violations stay visible.
    if k_upper < k_lower && k_lower - k_upper <= 1e-6 * k_lower {
        k_upper = k_lower;
    }
    Ok(PairEstimate {
        z1: *z1,
        z2: *z2,
        j_value,
        k_lower,
        k_upper,
        witness: best,
        graph_params: graph.params().clone(),
    })
}

/// Refines an existing visible chain; returns the improved chain.
pub fn refine_chain(domain: &Domain, chain: Vec<Point>, refine: &RefineParams) -> Vec<Point> {
    let mut best_len = chain_gl5(domain, &chain);
    let mut best = chain.clone();
    for cand in refine_levels(domain, chain, refine) {
        let len = chain_gl5(domain, &cand);
        if len < best_len {
            best_len = len;
            best = cand;
        }
    }
    best
}

fn chain_gl5(domain: &Domain, chain: &[Point]) -> f64 {
    chain.windows(2).map(|w| segment_qh_gl5(domain, &w[0], &w[1])).sum()
}

/// One candidate chain per refinement level.
fn refine_levels(domain: &Domain, chain: Vec<Point>, refine: &RefineParams) -> Vec<Vec<Point>> {
    let mut cur = shortcut(domain, chain);
    let mut out = Vec::new();
    for &target in &refine.segment_targets {
        cur = subdivide(domain, &cur, target);
        descend(domain, &mut cur, refine);
        out.push(cur.clone());
    }
    out
}

/// Greedy string pulling: replace runs of vertices by a visible, shorter chord.
fn shortcut(domain: &Domain, chain: Vec<Point>) -> Vec<Point> {
    if chain.len() <= 2 {
        return chain;
    }
    let seg: Vec<f64> = chain.windows(2).map(|w| segment_qh_gl5(domain, &w[0], &w[1])).collect();
    let mut out = vec![chain[0]];
    let mut i = 0;
    while i < chain.len() - 1 {
        let mut next = i + 1;
        let top = (i + SHORTCUT_WINDOW).min(chain.len() - 1);
        for j in (i + 2..=top).rev() {
            let along: f64 = seg[i..j].iter().sum();
            if domain.segment_in_domain(&chain[i], &chain[j]) && segment_qh_gl5(domain, &chain[i], &chain[j]) < along {
                next = j;
                break;
            }
        }
        out.push(chain[next]);
        i = next;
    }
    out
}

fn subdivide(domain: &Domain, chain: &[Point], target: f64) -> Vec<Point> {
    let mut out = vec![chain[0]];
    for w in chain.windows(2) {
        let len = segment_qh_gl5(domain, &w[0], &w[1]);
        let pieces = ((len / target).ceil() as usize).clamp(1, 64);
        for k in 1..=pieces {
            out.push(w[0].lerp(&w[1], k as f64 / pieces as f64));
        }
        if out.len() > MAX_VERTICES {
            out.extend(chain[chain.len() - 1..].iter().copied());
            break;
        }
    }
    out.dedup();
    out
}

fn local_cost(domain: &Domain, a: &Point, v: &Point, b: &Point) -> f64 {
    segment_qh_gl5(domain, a, v) + segment_qh_gl5(domain, v, b)
}

/// Gauss-Seidel descent on interior vertices with numeric gradients and
/// visibility-checked backtracking.
fn descend(domain: &Domain, chain: &mut [Point], refine: &RefineParams) {
    let n = chain.len();
    if n < 3 {
        return;
    }
    let dim = domain.dimension();
    let mut total = chain_gl5(domain, chain);
    for _ in 0..refine.max_sweeps {
        for i in 1..n - 1 {
            let (a, v, b) = (chain[i - 1], chain[i], chain[i + 1]);
            let d = domain.clearance(&v);
            if !(d > 0.0) {
                continue;
            }
            let f0 = local_cost(domain, &a, &v, &b);
            let h = 1e-4 * d;
            let mut g = Point::zero(dim);
            for k in 0..dim {
                let e = Point::axis(dim, k) * h;
                let fp = local_cost(domain, &a, &(v + e), &b);
                let fm = local_cost(domain, &a, &(v - e), &b);
                g.coords_mut()[k] = (fp - fm) / (2.0 * h);
            }
            let gn = g.euclid();
            if !(gn > 0.0) || !gn.is_finite() {
                continue;
            }
            let dir = g * (-1.0 / gn);
            let scale = d.min(domain.dist(&a, &v).max(domain.dist(&v, &b)));
            let mut step = 0.5 * scale;
            for _ in 0..12 {
                let cand = v + dir * step;
                if domain.contains(&cand) {
                    let f1 = local_cost(domain, &a, &cand, &b);
                    if f1 < f0 && domain.segment_in_domain(&a, &cand) && domain.segment_in_domain(&cand, &b) {
                        chain[i] = cand;
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        let after = chain_gl5(domain, chain);
        let improved = (total - after) / total;
        total = after;
        if !(improved >= refine.rel_improvement) {
            break;
        }
    }
}

/// Estimates at successively halved resolutions, keeping the best witness so
/// far; the returned `k_upper` sequence is non-increasing.
pub fn refinement_study(
    domain: &Domain,
    z1: &Point,
    z2: &Point,
    base: &GraphParams,
    levels: usize,
    refine: &RefineParams,
) -> Result<Vec<PairEstimate>> {
    let mut out: Vec<PairEstimate> = Vec::with_capacity(levels);
    for l in 0..levels {
        let mut p = base.clone();
        p.resolution = base.resolution / 2f64.powi(l as i32);
        let graph = QHGraph::build(domain, &p)?;
        let mut est = k_between_with(domain, z1, z2, &graph, refine)?;
        if let Some(prev) = out.last() {
            if prev.k_upper < est.k_upper {
                est.k_upper = prev.k_upper;
                est.witness = prev.witness.clone();
            }
        }
        out.push(est);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::graph::build_qh_graph;
    use crate::space::{DomainSpec, ShapeSpec};

    fn half_plane() -> Domain {
        Domain::upper_half_plane(Some((Point::xy(-3.0, 0.0), Point::xy(3.0, 3.0))))
    }

    #[test]
    fn vertical_segment_is_geodesic() {
        let hp = half_plane();
        let g = build_qh_graph(&hp, 0.1, 8, 1).unwrap();
        let e = std::f64::consts::E;
        let est = k_between(&hp, &Point::xy(0.0, 1.0), &Point::xy(0.0, e), &g).unwrap();
        assert!((est.k_lower - 1.0).abs() < 1e-12);
        assert!(est.k_upper <= 1.0 + 1e-3, "{}", est.k_upper);
        assert!(est.k_lower <= est.k_upper);
    }

    #[test]
    fn horizontal_pair_matches_arccosh() {
        let hp = half_plane();
        let g = build_qh_graph(&hp, 0.05, 12, 1).unwrap();
        let est = k_between(&hp, &Point::xy(-1.0, 1.0), &Point::xy(1.0, 1.0), &g).unwrap();
        let exact = 3f64.acosh();
        assert!((est.k_upper - exact).abs() / exact < 0.01, "{} vs {exact}", est.k_upper);
    }

    #[test]
    fn punctured_plane_antipodes() {
        // Oracle: punctured-plane distance sqrt(theta^2 + log^2) = pi for (1,0), (-1,0).
        let pb = DomainSpec::new(ShapeSpec::PuncturedBall {
            center: Point::xy(0.0, 0.0),
            radius: 1000.0,
            puncture: Point::xy(0.0, 0.0),
        })
        .with_window(Point::xy(-3.0, -3.0), Point::xy(3.0, 3.0))
        .build()
        .unwrap();
        let g = QHGraph::build(&pb, &GraphParams::new(0.1, 12, 4).with_min_clearance(0.01)).unwrap();
        let est = k_between(&pb, &Point::xy(1.0, 0.0), &Point::xy(-1.0, 0.0), &g).unwrap();
        let pi = std::f64::consts::PI;
        assert!((est.k_upper - pi).abs() / pi < 0.02, "{}", est.k_upper);
        assert!(est.k_lower <= est.k_upper);
    }

    #[test]
    fn symmetric_on_same_graph() {
        let ball = Domain::unit_disk();
        let g = build_qh_graph(&ball, 0.1, 8, 5).unwrap();
        let (a, b) = (Point::xy(-0.4, 0.3), Point::xy(0.5, -0.1));
        let ab = k_between_with(&ball, &a, &b, &g, &RefineParams::disabled()).unwrap();
        let ba = k_between_with(&ball, &b, &a, &g, &RefineParams::disabled()).unwrap();
        assert!((ab.k_upper - ba.k_upper).abs() <= 1e-9);
    }

    #[test]
    fn refinement_study_is_monotone() {
        let slit = Domain::slit_disk();
        let (a, b) = (Point::xy(0.5, 0.1), Point::xy(0.5, -0.1));
        let study =
            refinement_study(&slit, &a, &b, &GraphParams::new(0.2, 8, 1), 3, &RefineParams::default()).unwrap();
        for w in study.windows(2) {
            assert!(w[1].k_upper <= w[0].k_upper);
        }
        assert!(study.iter().all(|e| e.k_lower <= e.k_upper));
    }
}
