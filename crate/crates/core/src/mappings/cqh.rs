use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::growth::GrowthFunction;
use super::{MapKind, Mapping};
use crate::error::{Error, Result};
use crate::metrics::{k_between, GraphParams, QHGraph};
use crate::space::{Domain, Point};

/// Grid step of both constants.
pub const GRID_STEP: f64 = 0.05;
/// Largest multiplicative constant tried before the additive cap is lifted.
pub const M_MAX: f64 = 20.0;
/// Additive constants above this push the fit to a larger multiplier.
pub const C_MAX: f64 = 5.0;

/// Both-direction distance intervals of one sampled pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CqhPair {
    pub z1: Point,
    pub z2: Point,
    pub k_src_lower: f64,
    pub k_src: f64,
    pub k_tgt_lower: f64,
    pub k_tgt: f64,
}

/// A grid fit with the pairs that force it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CqhFit {
    pub m: f64,
    pub c: f64,
    /// Pair index with the largest `k' - M k`.
    pub worst_forward: Option<usize>,
    /// Pair index with the largest `k - M k'`.
    pub worst_backward: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CQHEstimate {
    /// Fit on the graph witnesses of both sides.
    pub m_est: f64,
    pub c_est: f64,
    pub worst_forward: Option<usize>,
    pub worst_backward: Option<usize>,
    /// Fit with upper ends against certified lower ends, both directions.
    pub certified: CqhFit,
    pub pairs: Vec<CqhPair>,
    /// Pairs dropped because an image missed the sampled target domain.
    pub skipped: usize,
}

/// Smallest `(M, C)` on the grid, lexicographic in `M` with `C <= C_MAX`,
/// such that `fwd.1 <= M fwd.0 + C` and `bwd.1 <= M bwd.0 + C` for all pairs.
fn grid_fit(fwd: &[(f64, f64)], bwd: &[(f64, f64)]) -> CqhFit {
    let need = |m: f64| {
        let mut worst = (0.0f64, None, 0.0f64, None);
        for (k, &(x, y)) in fwd.iter().enumerate() {
            let gap = y - m * x;
            if worst.1.is_none() || gap > worst.0 {
                worst.0 = gap;
                worst.1 = Some(k);
            }
        }
        for (k, &(x, y)) in bwd.iter().enumerate() {
            let gap = y - m * x;
            if worst.3.is_none() || gap > worst.2 {
                worst.2 = gap;
                worst.3 = Some(k);
            }
        }
        worst
    };
    // Rounding slack so exact equality does not cost a grid step.
    let snap = |x: f64| (((x - 1e-9) / GRID_STEP).ceil().max(0.0)) * GRID_STEP;
    let steps = ((M_MAX - 1.0) / GRID_STEP).round() as usize;
    for s in 0..=steps {
        let m = 1.0 + s as f64 * GRID_STEP;
        let (gf, wf, gb, wb) = need(m);
        let c = snap(gf.max(gb));
        if c <= C_MAX + 1e-12 || s == steps {
            return CqhFit { m, c, worst_forward: wf, worst_backward: wb };
        }
    }
    unreachable!("the last grid step always returns")
}

/// Graph over the image of `map` matching `src`: the source graph itself
/// for the identity, mapped nodes for similarities, a fresh sample otherwise.
pub fn target_graph(map: &Mapping, src: &QHGraph) -> Result<QHGraph> {
    let p = src.params().clone();
    match map.kind() {
        MapKind::Identity => QHGraph::from_nodes(map.target(), src.nodes().to_vec(), &p),
        MapKind::Similarity { scale, .. } => {
            let nodes = src.nodes().iter().map(|z| map.apply(z)).collect::<Result<Vec<_>>>()?;
            let p = GraphParams { resolution: p.resolution * scale, min_clearance: p.min_clearance * scale, ..p };
            QHGraph::from_nodes(map.target(), nodes, &p)
        }
        _ => QHGraph::build(map.target(), &p),
    }
}

/// Random pairs of distinct graph nodes.
pub fn node_pairs(graph: &QHGraph, count: usize, seed: u64) -> Vec<(Point, Point)> {
    let nodes = graph.nodes();
    if nodes.len() < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let i = rng.gen_range(0..nodes.len());
            let mut j = rng.gen_range(0..nodes.len() - 1);
            if j >= i {
                j += 1;
            }
            (nodes[i], nodes[j])
        })
        .collect()
}

fn measure_pairs(map: &Mapping, src: &QHGraph, tgt: &QHGraph, pairs: &[(Point, Point)]) -> Result<(Vec<CqhPair>, usize)> {
    let rows: Vec<Option<CqhPair>> = pairs
        .par_iter()
        .map(|(z1, z2)| {
            let (w1, w2) = match (map.evaluate(z1), map.evaluate(z2)) {
                (Ok(a), Ok(b)) => (a, b),
                // Image outside a sampled target boundary.
                (Err(Error::PointNotInDomain(_)), _) | (_, Err(Error::PointNotInDomain(_)))
                    if map.source().contains(z1) && map.source().contains(z2) =>
                {
                    return Ok(None)
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let s = k_between(map.source(), z1, z2, src)?;
            let t = k_between(map.target(), &w1, &w2, tgt)?;
            Ok(Some(CqhPair {
                z1: *z1,
                z2: *z2,
                k_src_lower: s.k_lower,
                k_src: s.k_upper,
                k_tgt_lower: t.k_lower,
                k_tgt: t.k_upper,
            }))
        })
        .collect::<Result<_>>()?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    Ok((rows.into_iter().flatten().collect(), skipped))
}

/// Empirical coarse quasihyperbolic constants of `map` over sampled pairs.
pub fn estimate_cqh(map: &Mapping, graph_src: &QHGraph, graph_tgt: &QHGraph, pairs: &[(Point, Point)]) -> Result<CQHEstimate> {
    let (pairs, skipped) = measure_pairs(map, graph_src, graph_tgt, pairs)?;
    let fwd: Vec<(f64, f64)> = pairs.iter().map(|p| (p.k_src, p.k_tgt)).collect();
    let bwd: Vec<(f64, f64)> = pairs.iter().map(|p| (p.k_tgt, p.k_src)).collect();
    let witness = grid_fit(&fwd, &bwd);
    let fwd: Vec<(f64, f64)> = pairs.iter().map(|p| (p.k_src_lower, p.k_tgt)).collect();
    let bwd: Vec<(f64, f64)> = pairs.iter().map(|p| (p.k_tgt_lower, p.k_src)).collect();
    let certified = grid_fit(&fwd, &bwd);
    Ok(CQHEstimate {
        m_est: witness.m,
        c_est: witness.c,
        worst_forward: witness.worst_forward,
        worst_backward: witness.worst_backward,
        certified,
        pairs,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidityGrowthParams {
    pub graph: GraphParams,
    pub pairs_per_domain: usize,
}

/// One `(k_G, k_G')` observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthSample {
    pub subdomain: usize,
    pub k_src_lower: f64,
    pub k_src: f64,
    pub k_tgt_lower: f64,
    pub k_tgt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolidityGrowth {
    /// Envelope of `k_G'` against `k_G`.
    pub forward: GrowthFunction,
    /// Envelope of `k_G` against `k_G'`.
    pub backward: GrowthFunction,
    pub samples: Vec<GrowthSample>,
}

/// Distortion envelopes of `map` restricted to each subdomain of its source.
pub fn estimate_solidity_growth(map: &Mapping, subdomains: &[Domain], params: &SolidityGrowthParams) -> Result<SolidityGrowth> {
    let mut samples = Vec::new();
    for (idx, sub) in subdomains.iter().enumerate() {
        let restricted = map.restrict(sub)?;
        let p = GraphParams { seed: params.graph.seed.wrapping_add(idx as u64), ..params.graph.clone() };
        let src = QHGraph::build(sub, &p)?;
        let tgt = target_graph(&restricted, &src)?;
        let pairs = node_pairs(&src, params.pairs_per_domain, p.seed ^ 0x9e37_79b9);
        let (rows, _) = measure_pairs(&restricted, &src, &tgt, &pairs)?;
        samples.extend(rows.into_iter().map(|r| GrowthSample {
            subdomain: idx,
            k_src_lower: r.k_src_lower,
            k_src: r.k_src,
            k_tgt_lower: r.k_tgt_lower,
            k_tgt: r.k_tgt,
        }));
    }
    let fwd: Vec<(f64, f64)> = samples.iter().map(|s| (s.k_src, s.k_tgt)).collect();
    let bwd: Vec<(f64, f64)> = samples.iter().map(|s| (s.k_tgt, s.k_src)).collect();
    Ok(SolidityGrowth {
        forward: GrowthFunction::envelope(&fwd, true)?,
        backward: GrowthFunction::envelope(&bwd, true)?,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::build_qh_graph;
    use crate::space::{DomainSpec, ShapeSpec};

    #[test]
    fn grid_fit_is_lexicographic() {
        // k' = 2k on [1, 3]: M = 1 needs C = 3, within the cap, so M stays 1.
        let f = grid_fit(&[(1.0, 2.0), (3.0, 6.0)], &[(2.0, 1.0), (6.0, 3.0)]);
        assert_eq!((f.m, f.worst_forward), (1.0, Some(1)));
        assert!((f.c - 3.0).abs() < 1e-9, "{f:?}");
        // On [1, 6] M = 1 would need C = 6, so M grows until 6 - 6M <= 5.
        let f = grid_fit(&[(1.0, 2.0), (6.0, 12.0)], &[(2.0, 1.0), (12.0, 6.0)]);
        assert!((f.m - 1.2).abs() < 1e-9, "{f:?}");
        assert!(f.c <= C_MAX + 1e-9);
        // With an additive offset only, M stays 1.
        let f = grid_fit(&[(1.0, 1.3), (5.0, 5.3)], &[(1.3, 1.0), (5.3, 5.0)]);
        assert_eq!(f.m, 1.0);
        assert!((f.c - 0.3).abs() < 1e-9);
        assert_eq!(f.worst_forward, Some(0));
    }

    #[test]
    fn identity_and_similarity_fit_exactly() {
        let ball = Domain::unit_disk();
        let g = build_qh_graph(&ball, 0.1, 8, 3).unwrap();
        let pairs = node_pairs(&g, 24, 5);
        for kind in [
            MapKind::Identity,
            MapKind::Similarity { scale: 2.5, angle: Some(0.7), rotation: None, translation: Point::xy(1.0, -2.0) },
        ] {
            let map = Mapping::new(kind, &ball).unwrap();
            let tg = target_graph(&map, &g).unwrap();
            let est = estimate_cqh(&map, &g, &tg, &pairs).unwrap();
            assert_eq!(est.skipped, 0);
            assert_eq!(est.pairs.len(), 24);
            assert!(est.m_est <= 1.0 + GRID_STEP && est.c_est <= GRID_STEP, "{} {}", est.m_est, est.c_est);
            assert!(est.certified.m >= est.m_est);
        }
    }

    #[test]
    fn radial_square_is_finite() {
        let ball = Domain::unit_disk();
        let map = Mapping::new(MapKind::RadialPower { exponent: 2.0, center: None }, &ball).unwrap();
        let g = build_qh_graph(&ball, 0.1, 8, 3).unwrap();
        let tg = target_graph(&map, &g).unwrap();
        let est = estimate_cqh(&map, &g, &tg, &node_pairs(&g, 24, 6)).unwrap();
        assert!(est.m_est.is_finite() && est.c_est.is_finite());
        assert!(est.m_est < M_MAX);
        // Near the boundary the square is almost a similarity; near the
        // origin it contracts, so some additive room is needed.
        assert!(est.m_est > 1.0 || est.c_est > 0.0);
        for p in &est.pairs {
            assert!(p.k_tgt <= est.m_est * p.k_src + est.c_est + 1e-9);
            assert!(p.k_src <= est.m_est * p.k_tgt + est.c_est + 1e-9);
            assert!(p.k_tgt <= est.certified.m * p.k_src_lower + est.certified.c + 1e-9);
        }
    }

    #[test]
    fn solidity_growth_of_similarity_is_diagonal() {
        let ball = Domain::unit_disk();
        let half = DomainSpec::new(ShapeSpec::Intersection {
            parts: vec![
                ShapeSpec::Ball { center: Point::xy(0.0, 0.0), radius: 1.0 },
                ShapeSpec::HalfSpace { normal: Point::xy(0.0, 1.0), offset: 0.0 },
            ],
        })
        .build()
        .unwrap();
        let small = Domain::ball(Point::xy(0.2, 0.1), 0.3).unwrap();
        let map = Mapping::new(
            MapKind::Similarity { scale: 3.0, angle: None, rotation: None, translation: Point::xy(0.5, 0.0) },
            &ball,
        )
        .unwrap();
        let params = SolidityGrowthParams { graph: GraphParams::new(0.1, 8, 2), pairs_per_domain: 10 };
        let g = estimate_solidity_growth(&map, &[ball.clone(), half, small], &params).unwrap();
        assert_eq!(g.samples.len(), 30);
        for s in &g.samples {
            assert!((g.forward.eval(s.k_src) - s.k_src).abs() < 1e-6 * (1.0 + s.k_src));
        }
        assert!(g.forward.max_ratio() < 1.0 + 1e-6);
        assert!(g.backward.max_ratio() < 1.0 + 1e-6);
    }
}
