//! Empirical uniformity constants: the double-cone curve condition and the
//! `k / j` ratio condition, over stratified pair samples.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcs::cone::cone_report;
use crate::arcs::neargeodesic::neargeodesic_worst;
use crate::error::{Error, Result};
use crate::metrics::{k_between_with, GraphParams, QHGraph, RefineParams};
use crate::space::{Domain, Point};

/// `7 a^3`, the admissible `k / j` constant of an `a`-uniform domain.
pub fn uniform_to_kj_constant(a: f64) -> Result<f64> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(Error::InvalidConstant(format!("uniformity constant must be >= 1, got {a}")));
    }
    Ok(7.0 * a * a * a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformityParams {
    pub resolution: f64,
    pub neighbors: usize,
    /// Pair clearances, strictly decreasing.
    pub schedule: Vec<f64>,
    pub random_pairs: usize,
    /// Base points per level for pairs running parallel to the boundary.
    pub tangential_bases: usize,
    pub seed: u64,
    pub nu: f64,
    pub retries: usize,
    pub refine: RefineParams,
    /// Multiplier for the additive-gap report `max(k_upper - c1 * j)`.
    pub c1_prime: Option<f64>,
}

impl Default for UniformityParams {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            neighbors: 12,
            schedule: vec![0.1, 0.05, 0.025, 0.0125],
            random_pairs: 24,
            tangential_bases: 3,
            seed: 0,
            nu: 2.0,
            retries: 1,
            refine: RefineParams::default(),
            c1_prime: None,
        }
    }
}

impl UniformityParams {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() || self.schedule.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter("clearance schedule needs positive entries".into()));
        }
        if self.schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter("clearance schedule must be strictly decreasing".into()));
        }
        if !(self.nu > 1.0) {
            return Err(Error::InvalidParameter(format!("nu must exceed 1, got {}", self.nu)));
        }
        self.graph_params().validate()
    }

    /// One graph resolves every level: nodes reach half the smallest clearance.
    pub fn graph_params(&self) -> GraphParams {
        let smallest = self.schedule.iter().copied().fold(f64::INFINITY, f64::min);
        GraphParams::new(self.resolution, self.neighbors, self.seed).with_min_clearance(0.5 * smallest)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Feature,
    Tangential,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRecord {
    pub c_length: f64,
    pub c_turning: f64,
    pub mu_diam: f64,
    pub nu_verified: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRecord {
    pub z1: Point,
    pub z2: Point,
    pub kind: PairKind,
    /// First schedule level the pair belongs to.
    pub level: usize,
    pub j: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    /// `None` when the curve estimator was not run for the pair.
    pub curve: Option<CurveRecord>,
    pub verification_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelValue {
    pub clearance: f64,
    pub pairs: usize,
    pub c_prime_kj: f64,
    pub c_curve: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorstPair {
    pub z1: Point,
    pub z2: Point,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Divergence {
    pub diverging: bool,
    /// Per schedule step: ratio of successive level values (curve) or their
    /// difference (k / j).
    pub steps: Vec<f64>,
    pub threshold: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Kj,
    Curve,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityEstimate {
    pub estimator: Estimator,
    pub c_curve: f64,
    pub c_prime_kj: f64,
    /// Largest `k_lower / j`: a certified lower bound for the `k / j` constant.
    pub c_prime_kj_lower: f64,
    pub worst_curve: Option<WorstPair>,
    pub worst_kj: Option<WorstPair>,
    pub graph: GraphParams,
    pub schedule: Vec<f64>,
    pub levels: Vec<LevelValue>,
    pub kj_divergence: Divergence,
    pub curve_divergence: Option<Divergence>,
    /// Verdict of the requested estimator (either one for `Both`).
    pub diverging: bool,
    pub verification_failures: usize,
    pub additive_gap: Option<f64>,
    pub pairs: Vec<PairRecord>,
}

pub fn estimate_uniformity_kj(domain: &Domain, params: &UniformityParams) -> Result<UniformityEstimate> {
    estimate_uniformity(domain, params, Estimator::Kj)
}

pub fn estimate_uniformity_curve(domain: &Domain, params: &UniformityParams) -> Result<UniformityEstimate> {
    estimate_uniformity(domain, params, Estimator::Curve)
}

/// Samples stratified pairs over a fresh graph of `domain` and estimates both constants.
pub fn estimate_uniformity(domain: &Domain, params: &UniformityParams, estimator: Estimator) -> Result<UniformityEstimate> {
    params.validate()?;
    let graph = QHGraph::build(domain, &params.graph_params())?;
    estimate_uniformity_on(domain, &graph, params, estimator)
}

/// Same as [`estimate_uniformity`] on a prebuilt graph.
pub fn estimate_uniformity_on(
    domain: &Domain,
    graph: &QHGraph,
    params: &UniformityParams,
    estimator: Estimator,
) -> Result<UniformityEstimate> {
    params.validate()?;
    let pairs = stratified_pairs(domain, params)?;
    estimate_uniformity_with_pairs(domain, graph, params, estimator, &pairs)
}

/// Estimates over caller-supplied `(z1, z2, kind, level)` pairs, for example
/// the image of another domain's stratified sample.
pub fn estimate_uniformity_with_pairs(
    domain: &Domain,
    graph: &QHGraph,
    params: &UniformityParams,
    estimator: Estimator,
    pairs: &[(Point, Point, PairKind, usize)],
) -> Result<UniformityEstimate> {
    params.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(p) = pairs.iter().find(|p| p.3 >= params.schedule.len()) {
        return Err(Error::InvalidParameter(format!("pair level {} beyond the schedule", p.3)));
    }
    let fine: OnceLock<Option<QHGraph>> = OnceLock::new();
    let records: Vec<PairRecord> = pairs
        .par_iter()
        .map(|&(z1, z2, kind, level)| evaluate_pair(domain, graph, &fine, params, estimator, z1, z2, kind, level))
        .collect::<Result<_>>()?;
    Ok(summarize(params, graph.params().clone(), estimator, records))
}

#[allow(clippy::too_many_arguments)]
fn evaluate_pair(
    domain: &Domain,
    graph: &QHGraph,
    fine: &OnceLock<Option<QHGraph>>,
    params: &UniformityParams,
    estimator: Estimator,
    z1: Point,
    z2: Point,
    kind: PairKind,
    level: usize,
) -> Result<PairRecord> {
    let mut est = k_between_with(domain, &z1, &z2, graph, &params.refine)?;
    let mut record = PairRecord {
        z1,
        z2,
        kind,
        level,
        j: est.j_value,
        k_lower: est.k_lower,
        k_upper: est.k_upper,
        ratio_lower: est.k_lower / est.j_value,
        ratio_upper: est.k_upper / est.j_value,
        curve: None,
        verification_failed: false,
    };
    if estimator == Estimator::Kj {
        return Ok(record);
    }
    let mut worst = neargeodesic_worst(domain, &est.witness)?.2;
    let mut attempt = 0;
    while worst > params.nu && attempt < params.retries {
        attempt += 1;
        let g = if attempt == 1 {
            fine.get_or_init(|| {
                let mut p = graph.params().clone();
                p.resolution *= 0.5;
                p.min_clearance *= 0.5;
                QHGraph::build(domain, &p).ok()
            })
            .as_ref()
        } else {
            None
        };
        let Some(g) = g else { break };
        let retry = k_between_with(domain, &z1, &z2, g, &params.refine)?;
        let w = neargeodesic_worst(domain, &retry.witness)?.2;
        if w < worst {
            worst = w;
            if retry.k_upper < est.k_upper {
                record.k_upper = retry.k_upper;
                record.ratio_upper = retry.k_upper / retry.j_value;
            }
            est = retry;
        }
    }
    if worst > params.nu {
        record.verification_failed = true;
        return Ok(record);
    }
    let cone = cone_report(domain, &est.witness)?;
    record.curve = Some(CurveRecord {
        c_length: cone.c_length,
        c_turning: cone.c_turning,
        mu_diam: cone.mu_diam,
        nu_verified: worst,
    });
    Ok(record)
}

fn summarize(params: &UniformityParams, graph: GraphParams, estimator: Estimator, pairs: Vec<PairRecord>) -> UniformityEstimate {
    let schedule = params.schedule.clone();
    let mut levels = Vec::with_capacity(schedule.len());
    let (mut kj, mut curve, mut count) = (0.0f64, 1.0f64, 0usize);
    for (l, &clearance) in schedule.iter().enumerate() {
        for p in pairs.iter().filter(|p| p.level == l) {
            count += 1;
            kj = kj.max(p.ratio_upper);
            if let Some(c) = p.curve {
                curve = curve.max(c.c_length.max(c.c_turning));
            }
        }
        levels.push(LevelValue { clearance, pairs: count, c_prime_kj: kj, c_curve: curve });
    }
    let worst = |value: &dyn Fn(&PairRecord) -> Option<f64>| {
        pairs.iter().fold(None::<WorstPair>, |w, p| match value(p) {
            Some(v) if w.is_none_or(|w| v > w.value) => Some(WorstPair { z1: p.z1, z2: p.z2, value: v }),
            _ => w,
        })
    };
    let worst_kj = worst(&|p| Some(p.ratio_upper));
    let worst_curve = worst(&|p| p.curve.map(|c| c.c_length.max(c.c_turning)));
    let c_prime_kj_lower = pairs.iter().map(|p| p.ratio_lower).fold(0.0, f64::max);
    let kj_values: Vec<f64> = levels.iter().map(|l| l.c_prime_kj).collect();
    let kj_divergence = additive_divergence(&schedule, &kj_values);
    let curve_divergence = (estimator != Estimator::Kj).then(|| {
        let values: Vec<f64> = levels.iter().map(|l| l.c_curve).collect();
        factor_divergence(&schedule, &values)
    });
    let diverging = match estimator {
        Estimator::Kj => kj_divergence.diverging,
        Estimator::Curve => curve_divergence.as_ref().is_some_and(|d| d.diverging),
        Estimator::Both => kj_divergence.diverging || curve_divergence.as_ref().is_some_and(|d| d.diverging),
    };
    let additive_gap = params.c1_prime.map(|c1| pairs.iter().map(|p| p.k_upper - c1 * p.j).fold(f64::NEG_INFINITY, f64::max));
    UniformityEstimate {
        estimator,
        c_curve: levels.last().map_or(1.0, |l| l.c_curve),
        c_prime_kj: levels.last().map_or(0.0, |l| l.c_prime_kj),
        c_prime_kj_lower,
        worst_curve: if estimator == Estimator::Kj { None } else { worst_curve },
        worst_kj,
        graph,
        schedule,
        levels,
        kj_divergence,
        curve_divergence,
        diverging,
        verification_failures: pairs.iter().filter(|p| p.verification_failed).count(),
        additive_gap,
        pairs,
    }
}

/// Steps between successive levels, measured in halvings of the clearance.
fn halvings(schedule: &[f64]) -> Vec<f64> {
    schedule.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Growth by a factor of at least `2^halvings` at every step, over at least three steps.
pub fn factor_divergence(schedule: &[f64], values: &[f64]) -> Divergence {
    let threshold: Vec<f64> = halvings(schedule).iter().map(|h| h.exp2()).collect();
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let diverging = steps.len() >= 3 && steps.iter().zip(&threshold).all(|(s, t)| s >= t);
    Divergence { diverging, steps, threshold }
}

/// Growth by at least `0.5` per halving at every step, over at least three steps.
pub fn additive_divergence(schedule: &[f64], values: &[f64]) -> Divergence {
    let threshold: Vec<f64> = halvings(schedule).iter().map(|h| 0.5 * h).collect();
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let diverging = steps.len() >= 3 && steps.iter().zip(&threshold).all(|(s, t)| s >= t);
    Divergence { diverging, steps, threshold }
}

/// Any unit vector orthogonal to `g`.
fn tangent(g: &Point) -> Point {
    if g.dim() == 2 {
        return Point::xy(-g.y(), g.x());
    }
    let c = g.coords();
    let t = if c[0].abs() < 0.9 { Point::xyz(0.0, -c[2], c[1]) } else { Point::xyz(-c[1], c[0], 0.0) };
    t * (1.0 / t.euclid())
}

fn random_point(domain: &Domain, lo: &Point, hi: &Point, rng: &mut ChaCha8Rng, min_clear: f64) -> Option<Point> {
    for _ in 0..2000 {
        let mut p = *lo;
        for (k, c) in p.coords_mut().iter_mut().enumerate() {
            *c = rng.gen_range(lo.coords()[k]..hi.coords()[k]);
        }
        if domain.clearance(&p) >= min_clear {
            return Some(p);
        }
    }
    None
}

/// Feature, tangential and random pairs, each tagged with its schedule level.
pub fn stratified_pairs(domain: &Domain, params: &UniformityParams) -> Result<Vec<(Point, Point, PairKind, usize)>> {
    let (lo, hi) = domain.sampling_box()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x005e_ed0f_0a1f);
    let mut out = Vec::new();
    let in_window = |p: &Point| p.coords().iter().zip(lo.coords().iter().zip(hi.coords())).all(|(c, (a, b))| a <= c && c <= b);
    let smallest = *params.schedule.last().expect("validated");
    for (level, &eps) in params.schedule.iter().enumerate() {
        for (a, b) in domain.feature_pairs(eps) {
            if in_window(&a) && in_window(&b) {
                out.push((a, b, PairKind::Feature, level));
            }
        }
        for _ in 0..params.tangential_bases {
            let Some(seed) = random_point(domain, &lo, &hi, &mut rng, eps) else { continue };
            let Some(base) = domain.push_to_clearance(&seed, eps) else { continue };
            let t = tangent(&domain.clearance_gradient(&base));
            for mult in [1.0, 4.0, 16.0, 64.0] {
                let Some(other) = domain.push_to_clearance(&(base + t * (mult * eps)), eps) else { continue };
                let ok = other != base && in_window(&base) && in_window(&other) && domain.clearance(&other) >= 0.5 * eps;
                if ok {
                    out.push((base, other, PairKind::Tangential, level));
                }
            }
        }
    }
    for _ in 0..params.random_pairs {
        let (Some(a), Some(b)) = (
            random_point(domain, &lo, &hi, &mut rng, smallest),
            random_point(domain, &lo, &hi, &mut rng, smallest),
        ) else {
            continue;
        };
        let clear = domain.clearance(&a).min(domain.clearance(&b));
        let level = params.schedule.iter().position(|&e| e <= clear).unwrap_or(params.schedule.len() - 1);
        out.push((a, b, PairKind::Random, level));
    }
    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(out)
}
