use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{segment_qh, DEFAULT_QUAD_TOL};
use crate::error::{Error, Result};
use crate::space::knn::KdIndex;
use crate::space::{sample_interior, Domain, Point};

/// Discretization parameters of a quasihyperbolic graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphParams {
    pub resolution: f64,
    pub neighbors: usize,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    /// Smallest node clearance; query points closer to the boundary still attach.
    pub min_clearance: f64,
    pub seed: u64,
}

fn default_quad_tol() -> f64 {
    DEFAULT_QUAD_TOL
}

impl GraphParams {
    pub fn new(resolution: f64, neighbors: usize, seed: u64) -> Self {
        Self { resolution, neighbors, quad_tol: DEFAULT_QUAD_TOL, min_clearance: resolution / 16.0, seed }
    }

    pub fn with_min_clearance(mut self, c: f64) -> Self {
        self.min_clearance = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) || self.neighbors < 4 || !(self.quad_tol > 0.0) || !(self.min_clearance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "graph needs resolution > 0, neighbors >= 4, quad_tol > 0, min_clearance >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Visibility graph over interior nodes, edges weighted by segment qh length.
#[derive(Debug)]
pub struct QHGraph {
    domain: Domain,
    nodes: Vec<Point>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    index: KdIndex,
    params: GraphParams,
}

/// Builds a graph from a seeded sample of the domain.
pub fn build_qh_graph(domain: &Domain, resolution: f64, neighbors: usize, seed: u64) -> Result<QHGraph> {
    QHGraph::build(domain, &GraphParams::new(resolution, neighbors, seed))
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by index for determinism.
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl QHGraph {
    pub fn build(domain: &Domain, params: &GraphParams) -> Result<Self> {
        params.validate()?;
        let nodes = sample_interior(domain, params.resolution, params.min_clearance, params.seed)?;
        Self::from_nodes(domain, nodes, params)
    }

    /// Graph over the given nodes; nodes outside the domain are dropped.
    pub fn from_nodes(domain: &Domain, nodes: Vec<Point>, params: &GraphParams) -> Result<Self> {
        params.validate()?;
        let nodes: Vec<Point> = nodes.into_iter().filter(|p| domain.contains(p)).collect();
        if nodes.is_empty() {
            return Err(Error::EmptySample);
        }
        let index = KdIndex::new(&nodes);
        let k = params.neighbors;
        let mut cand: Vec<(u32, u32)> = nodes
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, p)| {
                index
                    .nearest(p, k + 1)
                    .into_iter()
                    .filter(move |&(j, _)| j != i)
                    .map(move |(j, _)| (i.min(j) as u32, i.max(j) as u32))
            })
            .collect();
        cand.par_sort_unstable();
        cand.dedup();
        let clear: Vec<f64> = nodes.par_iter().map(|p| domain.clearance(p)).collect();
        let edges: Vec<(u32, u32, f64)> = cand
            .par_iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (&nodes[i as usize], &nodes[j as usize]);
                if !domain.segment_in_domain(a, b) {
                    return None;
                }
                let w = segment_qh(domain, a, b, params.quad_tol);
                let floor = (clear[i as usize] / clear[j as usize]).ln().abs();
                w.is_finite().then_some((i, j, w.max(floor)))
            })
            .collect();
        let n = nodes.len();
        let mut degree = vec![0usize; n + 1];
        for &(i, j, _) in &edges {
            degree[i as usize + 1] += 1;
            degree[j as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; 2 * edges.len()];
        let mut weights = vec![0.0f64; 2 * edges.len()];
        for &(i, j, w) in &edges {
            for (a, b) in [(i, j), (j, i)] {
                let slot = fill[a as usize];
                targets[slot] = b;
                weights[slot] = w;
                fill[a as usize] += 1;
            }
        }
        Ok(Self { domain: domain.clone(), nodes, offsets, targets, weights, index, params: params.clone() })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Undirected edges `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nodes.len()).flat_map(move |i| {
            (self.offsets[i]..self.offsets[i + 1])
                .map(move |s| (i, self.targets[s] as usize, self.weights[s]))
                .filter(|(i, j, _)| i < j)
        })
    }

    /// Visible nearby nodes of `z` with segment weights.
    fn attach(&self, z: &Point) -> Vec<(usize, f64)> {
        let want = 2 * self.params.neighbors;
        for k in [want, 4 * want] {
            let near = self.index.nearest(z, k.min(self.nodes.len()));
            let found: Vec<(usize, f64)> = near
                .into_iter()
                .filter(|(j, _)| self.domain.segment_in_domain(z, &self.nodes[*j]))
                .map(|(j, _)| (j, segment_qh(&self.domain, z, &self.nodes[j], self.params.quad_tol)))
                .filter(|(_, w)| w.is_finite())
                .collect();
            if !found.is_empty() {
                return found;
            }
        }
        Vec::new()
    }

    /// Shortest graph path from `z1` to `z2` (endpoints attached by visibility
    /// edges). Returns the vertex chain and its qh length.
    pub fn shortest_path(&self, z1: &Point, z2: &Point) -> Result<(Vec<Point>, f64)> {
        self.domain.boundary_distance(z1)?;
        self.domain.boundary_distance(z2)?;
        if z1 == z2 {
            return Ok((vec![*z1], 0.0));
        }
        let n = self.nodes.len();
        let (src, dst) = (n, n + 1);
        let from = self.attach(z1);
        let to: HashMap<usize, f64> = self.attach(z2).into_iter().collect();
        let direct = self
            .domain
            .segment_in_domain(z1, z2)
            .then(|| segment_qh(&self.domain, z1, z2, self.params.quad_tol))
            .filter(|w| w.is_finite());
        if (from.is_empty() || to.is_empty()) && direct.is_none() {
            return Err(Error::GraphDisconnected);
        }
        let mut dist = vec![f64::INFINITY; n + 2];
        let mut prev = vec![usize::MAX; n + 2];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Entry(0.0, src));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == dst {
                break;
            }
            let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Entry>| {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Entry(nd, v));
                }
            };
            if u == src {
                for &(v, w) in &from {
                    relax(v, w, &mut heap);
                }
                if let Some(w) = direct {
                    relax(dst, w, &mut heap);
                }
                continue;
            }
            for s in self.offsets[u]..self.offsets[u + 1] {
                relax(self.targets[s] as usize, self.weights[s], &mut heap);
            }
            if let Some(&w) = to.get(&u) {
                relax(dst, w, &mut heap);
            }
        }
        if !dist[dst].is_finite() {
            return Err(Error::GraphDisconnected);
        }
        let mut chain = vec![*z2];
        let mut cur = prev[dst];
        while cur != src {
            chain.push(self.nodes[cur]);
            cur = prev[cur];
        }
        chain.push(*z1);
        chain.reverse();
        Ok((chain, dist[dst]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{DomainSpec, ShapeSpec};

    #[test]
    fn deterministic_and_weights_respect_log_ratio() {
        let ball = Domain::unit_disk();
        let g1 = build_qh_graph(&ball, 0.2, 8, 1).unwrap();
        let g2 = build_qh_graph(&ball, 0.2, 8, 1).unwrap();
        assert_eq!(g1.nodes(), g2.nodes());
        let e1: Vec<_> = g1.edges().collect();
        assert_eq!(e1, g2.edges().collect::<Vec<_>>());
        for (i, j, w) in e1 {
            let (a, b) = (g1.nodes()[i], g1.nodes()[j]);
            let lr = (ball.clearance(&a) / ball.clearance(&b)).ln().abs();
            assert!(w >= lr);
        }
    }

    #[test]
    fn no_edge_crosses_the_slit() {
        let slit = Domain::slit_disk();
        let g = build_qh_graph(&slit, 0.1, 8, 2).unwrap();
        for (i, j, _) in g.edges() {
            assert!(slit.segment_in_domain(&g.nodes()[i], &g.nodes()[j]));
        }
    }

    #[test]
    fn disconnected_shells_flagged() {
        // Nodes only in two thin shells around the puncture and near the rim,
        // with no visible links between them at this spacing.
        let pb = DomainSpec::new(ShapeSpec::PuncturedBall {
            center: Point::xy(0.0, 0.0),
            radius: 1.0,
            puncture: Point::xy(0.0, 0.0),
        })
        .build()
        .unwrap();
        let mut nodes = Vec::new();
        for k in 0..48 {
            let t = k as f64 * std::f64::consts::TAU / 48.0;
            if k % 2 == 0 {
                nodes.push(Point::xy(0.05 * t.cos(), 0.05 * t.sin()));
            }
            nodes.push(Point::xy(0.95 * t.cos(), 0.95 * t.sin()));
        }
        let g = QHGraph::from_nodes(&pb, nodes, &GraphParams::new(0.5, 4, 0)).unwrap();
        // Oracle: union-find over the edge list.
        let mut comp: Vec<usize> = (0..g.node_count()).collect();
        fn find(c: &mut [usize], mut i: usize) -> usize {
            while c[i] != i {
                i = c[i];
            }
            i
        }
        for (i, j, _) in g.edges() {
            let (a, b) = (find(&mut comp, i), find(&mut comp, j));
            comp[a] = b;
        }
        let inner = find(&mut comp, 0);
        let outer = find(&mut comp, 1);
        assert_ne!(inner, outer);
        let err = g.shortest_path(&Point::xy(0.04, 0.0), &Point::xy(-0.96, 0.0)).unwrap_err();
        assert!(matches!(err, Error::GraphDisconnected));
    }

    #[test]
    fn path_length_matches_chain() {
        let ball = Domain::unit_disk();
        let g = build_qh_graph(&ball, 0.1, 8, 3).unwrap();
        let (chain, len) = g.shortest_path(&Point::xy(-0.5, 0.1), &Point::xy(0.6, -0.2)).unwrap();
        let sum: f64 = chain.windows(2).map(|w| segment_qh(&ball, &w[0], &w[1], 1e-6)).sum();
        assert!((sum - len).abs() < 1e-3 * len);
        assert!(len >= crate::metrics::lower::k_lower_bound(&ball, &chain[0], chain.last().unwrap()).unwrap());
    }
}
