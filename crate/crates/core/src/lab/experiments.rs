use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{cell, Report, Table};
use crate::arcs::{cone_report, construct_neargeodesic_with, NeargeodesicOptions};
use crate::error::{Error, Result};
use crate::ledger::{compute_ledger, c_prime_bound, verify_chain, NamedTower, TowerValue, Verdict};
use crate::mappings::{
    estimate_cqh, estimate_solidity_growth, local_qs_test, node_pairs, target_graph, CQHEstimate, ImageRepr,
    LocalQsParams, LocalQsReport, MapKind, Mapping, SolidityGrowth, SolidityGrowthParams,
};
use crate::metrics::cache::{CachedWitness, GeodesicCache};
use crate::metrics::{k_between_with, k_lower_bound, k_upper_local, log_ratio, j_metric, GraphParams, QHGraph};
use crate::space::{sample_interior, Domain, DomainSpec, Point};
use crate::uniformity::{
    estimate_uniformity, estimate_uniformity_with_pairs, stratified_pairs, PairKind, UniformityEstimate,
    UniformityParams,
};

fn pt(p: &Point) -> String {
    p.coords().iter().map(|c| cell(*c)).collect::<Vec<_>>().join(" ")
}

fn plain_graph(cfg: &ExperimentConfig) -> GraphParams {
    GraphParams::new(cfg.sampling.resolution, cfg.sampling.neighbors, cfg.seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricRow {
    pub z1: Point,
    pub z2: Point,
    pub j: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    /// Segment bound when the pair sits inside a ball of the domain.
    pub local_bound: Option<f64>,
    pub log_ratio: f64,
    pub witness_vertices: usize,
}

/// `j`, both `k` bounds and the elementary bounds for each configured pair.
pub fn run_metric_table(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<Report> {
    let domain = cfg.domain()?;
    let params = plain_graph(cfg);
    let graph = QHGraph::build(&domain, &params)?;
    let cache_path = cache_dir.map(|d| GeodesicCache::path_in(d, &domain, &params));
    let mut cache = match &cache_path {
        Some(p) => Some(GeodesicCache::load_or_new(p, &domain, &params)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(cfg.metric_pairs.len());
    for p in &cfg.metric_pairs {
        let (z1, z2) = (p.z1, p.z2);
        let hit = cache.as_ref().and_then(|c| c.lookup(&domain, &z1, &z2));
        let (k_upper, witness_vertices) = match hit {
            Some((line, rec)) => (rec.k_upper, line.len()),
            None => {
                let est = k_between_with(&domain, &z1, &z2, &graph, &cfg.sampling.refine)?;
                if let Some(c) = cache.as_mut() {
                    c.insert(CachedWitness {
                        vertices: est.witness.vertices().to_vec(),
                        k_upper: est.k_upper,
                        k_lower: est.k_lower,
                    });
                }
                (est.k_upper, est.witness.len())
            }
        };
        let local = [k_upper_local(&domain, &z1, &z2)?, k_upper_local(&domain, &z2, &z1)?]
            .into_iter()
            .flatten()
            .reduce(f64::min);
        rows.push(MetricRow {
            z1,
            z2,
            j: j_metric(&domain, &z1, &z2)?,
            k_lower: k_lower_bound(&domain, &z1, &z2)?,
            k_upper,
            local_bound: local,
            log_ratio: log_ratio(&domain, &z1, &z2)?,
            witness_vertices,
        });
    }
    if let (Some(c), Some(p)) = (&cache, &cache_path) {
        c.save(p)?;
    }
    let mut t = Table::new(&["z1", "z2", "j", "k_lower", "k_upper", "local_bound", "log_ratio", "witness_vertices"]);
    for r in &rows {
        t.push(vec![
            pt(&r.z1),
            pt(&r.z2),
            cell(r.j),
            cell(r.k_lower),
            cell(r.k_upper),
            r.local_bound.map(cell).unwrap_or_default(),
            cell(r.log_ratio),
            r.witness_vertices.to_string(),
        ]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        graph: &'a GraphParams,
        nodes: usize,
        edges: usize,
        rows: Vec<MetricRow>,
    }
    let out = Out { graph: &params, nodes: graph.node_count(), edges: graph.edge_count(), rows };
    Report::new(ExperimentKind::MetricTable, cfg, out, t)
}

fn level_table(e: &UniformityEstimate) -> Table {
    let mut t = Table::new(&["clearance", "pairs", "c_prime_kj", "c_curve"]);
    for l in &e.levels {
        t.push(vec![cell(l.clearance), l.pairs.to_string(), cell(l.c_prime_kj), cell(l.c_curve)]);
    }
    t
}

pub fn run_uniformity(cfg: &ExperimentConfig) -> Result<Report> {
    let domain = cfg.domain()?;
    let est = estimate_uniformity(&domain, &cfg.uniformity_params(), cfg.sampling.estimator)?;
    let t = level_table(&est);
    Report::new(ExperimentKind::Uniformity, cfg, est, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct MapcheckResults {
    pub map: MapKind,
    pub image: ImageRepr,
    pub target: DomainSpec,
    /// Largest `|f^-1(f(z)) - z|` over graph nodes.
    pub inverse_max_error: f64,
    pub cqh: CQHEstimate,
    pub solidity: SolidityGrowth,
    pub local_qs: LocalQsReport,
}

fn inverse_error(map: &Mapping, nodes: &[Point]) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in nodes {
        let back = map.apply_inverse(&map.apply(z)?)?;
        worst = worst.max((back - *z).euclid());
    }
    Ok(worst)
}

fn cqh_of(cfg: &ExperimentConfig, map: &Mapping) -> Result<(CQHEstimate, QHGraph)> {
    let src = QHGraph::build(map.source(), &plain_graph(cfg))?;
    let tgt = target_graph(map, &src)?;
    let pairs = node_pairs(&src, cfg.sampling.pairs, cfg.seed);
    Ok((estimate_cqh(map, &src, &tgt, &pairs)?, src))
}

fn local_qs_of(cfg: &ExperimentConfig, map: &Mapping) -> Result<LocalQsReport> {
    let m = &cfg.mapcheck;
    local_qs_test(map, m.q, &LocalQsParams { balls: m.balls, triples_per_ball: m.triples_per_ball, seed: cfg.seed })
}

/// CQH constants, solidity envelopes and local quasisymmetry of a map.
pub fn run_mapcheck(cfg: &ExperimentConfig) -> Result<Report> {
    let domain = cfg.domain()?;
    let map = Mapping::new(cfg.map_kind()?.clone(), &domain)?;
    let (cqh, src) = cqh_of(cfg, &map)?;
    let subs = if cfg.mapcheck.subdomains.is_empty() {
        vec![domain.clone()]
    } else {
        cfg.mapcheck.subdomains.iter().map(|s| s.build()).collect::<Result<_>>()?
    };
    let solidity = estimate_solidity_growth(
        &map,
        &subs,
        &SolidityGrowthParams { graph: plain_graph(cfg), pairs_per_domain: cfg.sampling.pairs },
    )?;
    let out = MapcheckResults {
        map: map.kind().clone(),
        image: map.image_repr(),
        target: map.target().spec().clone(),
        inverse_max_error: inverse_error(&map, src.nodes())?,
        cqh,
        solidity,
        local_qs: local_qs_of(cfg, &map)?,
    };
    let mut t = Table::new(&["z1", "z2", "k_src_lower", "k_src", "k_tgt_lower", "k_tgt"]);
    for p in &out.cqh.pairs {
        t.push(vec![pt(&p.z1), pt(&p.z2), cell(p.k_src_lower), cell(p.k_src), cell(p.k_tgt_lower), cell(p.k_tgt)]);
    }
    Report::new(ExperimentKind::Mapcheck, cfg, out, t)
}

/// Uniformity of `f(D1)` on the pushed-forward graph and pair sample of `D1`.
pub struct ImageUniformity {
    pub map: Mapping,
    pub graph: QHGraph,
    pub estimate: UniformityEstimate,
    /// Sample pairs whose images missed the represented image domain.
    pub dropped_pairs: usize,
}

/// Graph over `f(D1)` with the mapped nodes of the `D1` graph; similarities
/// carry their scale into the graph parameters.
pub fn image_graph(map: &Mapping, d1_graph: &QHGraph) -> Result<QHGraph> {
    let nodes = d1_graph.nodes().iter().map(|z| map.apply(z)).collect::<Result<Vec<_>>>()?;
    let mut p = d1_graph.params().clone();
    if let MapKind::Similarity { scale, .. } = map.kind() {
        p.resolution *= scale;
        p.min_clearance *= scale;
    }
    QHGraph::from_nodes(map.target(), nodes, &p)
}

pub fn image_uniformity_on(
    map: &Mapping,
    d1_graph: &QHGraph,
    d1_pairs: &[(Point, Point, PairKind, usize)],
    params: &UniformityParams,
    estimator: crate::uniformity::Estimator,
) -> Result<ImageUniformity> {
    let graph = image_graph(map, d1_graph)?;
    let image = map.target();
    let mut pairs = Vec::with_capacity(d1_pairs.len());
    for &(a, b, kind, level) in d1_pairs {
        let (fa, fb) = (map.apply(&a)?, map.apply(&b)?);
        if image.contains(&fa) && image.contains(&fb) {
            pairs.push((fa, fb, kind, level));
        }
    }
    let dropped_pairs = d1_pairs.len() - pairs.len();
    let estimate = estimate_uniformity_with_pairs(image, &graph, params, estimator, &pairs)?;
    Ok(ImageUniformity { map: map.clone(), graph, estimate, dropped_pairs })
}

/// Standalone image estimate: restricts `map` to `d1` and samples `d1` afresh.
pub fn image_uniformity(
    map: &Mapping,
    d1: &Domain,
    params: &UniformityParams,
    estimator: crate::uniformity::Estimator,
) -> Result<ImageUniformity> {
    let restricted = map.restrict(d1)?;
    let g1 = QHGraph::build(d1, &params.graph_params())?;
    let pairs = stratified_pairs(d1, params)?;
    image_uniformity_on(&restricted, &g1, &pairs, params, estimator)
}

#[derive(Clone, Debug, Serialize)]
pub struct ArcRecord {
    pub z1: Point,
    pub z2: Point,
    /// Cone constant of the neargeodesic, compared with `2 b3^2`.
    pub c_length: f64,
    /// Length over chord, compared with `b4`.
    pub c_turning: f64,
    pub mu_diam: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerEcho {
    pub members: Vec<NamedTower>,
    pub verdicts: Vec<Verdict>,
    pub bound: NamedTower,
    pub absorbed: bool,
}

fn ledger_echo(input: &crate::ledger::LedgerInput) -> Result<(LedgerEcho, TowerValue, TowerValue, TowerValue)> {
    let l = compute_ledger(input)?;
    let verdicts = verify_chain(&l, input)?.to_vec();
    let bound = c_prime_bound(input)?;
    let cone = l.b3.powf(2.0)?.mul_f64(2.0)?;
    let echo = LedgerEcho { members: l.members(), verdicts, bound: NamedTower::new("c_prime_bound", &bound), absorbed: l.absorbed };
    Ok((echo, bound, cone, l.b4))
}

#[derive(Clone, Debug, Serialize)]
pub struct SubinvarianceVerdicts {
    /// The image estimate does not diverge over the clearance schedule.
    pub image_bounded: bool,
    pub empirical_le_bound: Option<bool>,
    pub cone_within_bound: Option<bool>,
    pub turning_within_bound: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubinvarianceResults {
    pub c_d1: UniformityEstimate,
    pub a_dprime: UniformityEstimate,
    pub cqh: CQHEstimate,
    pub image: ImageRepr,
    pub image_spec: DomainSpec,
    pub c_image: UniformityEstimate,
    pub dropped_pairs: usize,
    pub arcs: Vec<ArcRecord>,
    pub arc_failures: usize,
    pub max_cone: f64,
    pub max_turning: f64,
    pub ledger: Option<LedgerEcho>,
    pub verdicts: SubinvarianceVerdicts,
}

fn image_arcs(cfg: &ExperimentConfig, image: &Domain, graph: &QHGraph) -> Result<(Vec<ArcRecord>, usize)> {
    let pairs = node_pairs(graph, cfg.sampling.pairs, cfg.seed ^ 0xa5c5);
    let opts = NeargeodesicOptions { retries: cfg.sampling.retries, refine: cfg.sampling.refine.clone() };
    let rows: Vec<Option<ArcRecord>> = pairs
        .par_iter()
        .map(|(a, b)| match construct_neargeodesic_with(image, a, b, 2.0, graph, &opts) {
            Ok(line) => {
                let c = cone_report(image, &line)?;
                Ok(Some(ArcRecord { z1: *a, z2: *b, c_length: c.c_length, c_turning: c.c_turning, mu_diam: c.mu_diam }))
            }
            Err(Error::VerificationFailed { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let failures = rows.iter().filter(|r| r.is_none()).count();
    Ok((rows.into_iter().flatten().collect(), failures))
}

/// Uniformity of a subdomain before and after the map, with arc witnesses
/// in the image and the ledger bound when inputs are given.
pub fn run_subinvariance(cfg: &ExperimentConfig) -> Result<Report> {
    let d = cfg.domain()?;
    let d1 = cfg.subdomain()?;
    let map = Mapping::new(cfg.map_kind()?.clone(), &d)?;
    let up = cfg.uniformity_params();
    let estimator = cfg.sampling.estimator;

    let g1 = QHGraph::build(&d1, &up.graph_params())?;
    let pairs1 = stratified_pairs(&d1, &up)?;
    let c_d1 = estimate_uniformity_with_pairs(&d1, &g1, &up, estimator, &pairs1)?;
    let a_dprime = estimate_uniformity(map.target(), &up, estimator)?;
    let (cqh, _) = cqh_of(cfg, &map)?;

    let restricted = map.restrict(&d1)?;
    let img = image_uniformity_on(&restricted, &g1, &pairs1, &up, estimator)?;
    let image = restricted.target();
    let (arcs, arc_failures) = image_arcs(cfg, image, &img.graph)?;
    let max_cone = arcs.iter().map(|a| a.c_length).fold(0.0, f64::max);
    let max_turning = arcs.iter().map(|a| a.c_turning).fold(0.0, f64::max);

    let mut verdicts = SubinvarianceVerdicts {
        image_bounded: !img.estimate.diverging,
        empirical_le_bound: None,
        cone_within_bound: None,
        turning_within_bound: None,
    };
    let ledger = match &cfg.ledger {
        Some(input) => {
            let (echo, bound, cone, b4) = ledger_echo(input)?;
            let empirical = img.estimate.c_curve.max(max_cone).max(max_turning);
            verdicts.empirical_le_bound = Some(TowerValue::from_f64(empirical)? <= bound);
            verdicts.cone_within_bound = Some(TowerValue::from_f64(max_cone)? <= cone);
            verdicts.turning_within_bound = Some(TowerValue::from_f64(max_turning)? <= b4);
            Some(echo)
        }
        None => None,
    };
    let mut t = Table::new(&["stage", "clearance", "pairs", "c_prime_kj", "c_curve"]);
    for (stage, e) in [("d1", &c_d1), ("target", &a_dprime), ("image", &img.estimate)] {
        for l in &e.levels {
            t.push(vec![stage.into(), cell(l.clearance), l.pairs.to_string(), cell(l.c_prime_kj), cell(l.c_curve)]);
        }
    }
    let out = SubinvarianceResults {
        c_d1,
        a_dprime,
        cqh,
        image: restricted.image_repr(),
        image_spec: image.spec().clone(),
        c_image: img.estimate,
        dropped_pairs: img.dropped_pairs,
        arcs,
        arc_failures,
        max_cone,
        max_turning,
        ledger,
        verdicts,
    };
    Report::new(ExperimentKind::Subinvariance, cfg, out, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleResults {
    pub map: MapKind,
    pub image: ImageRepr,
    pub image_spec: DomainSpec,
    pub source: UniformityEstimate,
    pub target: UniformityEstimate,
    pub cqh: CQHEstimate,
    pub local_qs: LocalQsReport,
    /// Largest `k_upper / j` at the smallest clearance of the image.
    pub target_kj_at_smallest: f64,
    pub source_diverging: bool,
    pub target_diverging: bool,
    /// Uniform source, non-uniform image.
    pub reproduced: bool,
}

/// Uniform disk onto a non-uniform image: the source estimate stays bounded
/// while the image estimate diverges. With an identity map it is a control.
pub fn run_counterexample(cfg: &ExperimentConfig) -> Result<Report> {
    let d = match &cfg.domain {
        Some(s) => s.build()?,
        None => Domain::unit_disk(),
    };
    let kind = cfg.map.clone().unwrap_or(MapKind::SlitRiemann2D);
    let map = Mapping::new(kind, &d)?;
    let up = cfg.uniformity_params();
    let source = estimate_uniformity(&d, &up, cfg.sampling.estimator)?;
    let target = estimate_uniformity(map.target(), &up, cfg.sampling.estimator)?;
    let (cqh, _) = cqh_of(cfg, &map)?;
    let local_qs = local_qs_of(cfg, &map)?;
    let mut t = Table::new(&["domain", "clearance", "pairs", "c_prime_kj", "c_curve"]);
    for (name, e) in [("source", &source), ("target", &target)] {
        for l in &e.levels {
            t.push(vec![name.into(), cell(l.clearance), l.pairs.to_string(), cell(l.c_prime_kj), cell(l.c_curve)]);
        }
    }
    let out = CounterexampleResults {
        map: map.kind().clone(),
        image: map.image_repr(),
        image_spec: map.target().spec().clone(),
        target_kj_at_smallest: target.levels.last().map_or(0.0, |l| l.c_prime_kj),
        source_diverging: source.diverging,
        target_diverging: target.diverging,
        reproduced: !source.diverging && target.diverging,
        source,
        target,
        cqh,
        local_qs,
    };
    Report::new(ExperimentKind::Counterexample, cfg, out, t)
}

pub fn run_ledger(cfg: &ExperimentConfig) -> Result<Report> {
    let input = cfg.ledger.as_ref().ok_or_else(|| Error::ConfigInvalid("missing section `ledger`".into()))?;
    let (echo, _, _, _) = ledger_echo(input)?;
    let mut t = Table::new(&["name", "level", "mantissa", "decimal"]);
    for m in &echo.members {
        t.push(vec![m.name.clone(), m.level.to_string(), cell(m.mantissa), m.decimal.clone().unwrap_or_default()]);
    }
    for v in &echo.verdicts {
        t.push(vec![format!("{}_holds", v.name), String::new(), String::new(), v.holds.to_string()]);
    }
    Report::new(ExperimentKind::Ledger, cfg, echo, t)
}

/// Dispatches on the configured experiment.
pub fn run(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<Report> {
    cfg.validate()?;
    match cfg.kind()? {
        ExperimentKind::MetricTable => run_metric_table(cfg, cache_dir),
        ExperimentKind::Uniformity => run_uniformity(cfg),
        ExperimentKind::Mapcheck => run_mapcheck(cfg),
        ExperimentKind::Subinvariance => run_subinvariance(cfg),
        ExperimentKind::Counterexample => run_counterexample(cfg),
        ExperimentKind::Ledger => run_ledger(cfg),
    }
}

/// Interior points of `domain` for quick checks.
pub fn sample_points(domain: &Domain, resolution: f64, seed: u64) -> Result<Vec<Point>> {
    sample_interior(domain, resolution, 0.25 * resolution, seed)
}
