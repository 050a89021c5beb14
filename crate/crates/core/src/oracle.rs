//! Brute-force ground truth: plain Dijkstra searches on the original road
//! network, plus verification reports that compare an index or a BN-Graph
//! against them. Nothing here uses the BN-Graph or the index builders.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bn_graph::BnGraph;
use crate::error::{Error, Result};
use crate::graph::{Distance, RoadNetwork, VertexId, INFINITY};
use crate::knn::{KnnEntry, KnnIndex};
use crate::objects::ObjectSet;
use crate::par::{self, Execution};

/// How many violations a report keeps in full.
pub const REPORTED_VIOLATIONS: usize = 10;

fn sssp_with<F, I>(n: usize, source: VertexId, mut neighbors: F) -> Vec<Distance>
where
    F: FnMut(VertexId) -> I,
    I: Iterator<Item = (VertexId, Distance)>,
{
    let mut dist = vec![INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (t, w) in neighbors(v) {
            let nd = d + w;
            if nd < dist[t as usize] {
                dist[t as usize] = nd;
                heap.push(Reverse((nd, t)));
            }
        }
    }
    dist
}

/// Single-source shortest distances on G.
pub fn dijkstra_sssp(graph: &RoadNetwork, source: VertexId) -> Result<Vec<Distance>> {
    if !graph.contains(source) {
        return Err(Error::UnknownVertex(source));
    }
    Ok(sssp_with(graph.num_vertices(), source, |v| {
        graph.neighbors(v).map(|(t, w)| (t, w as Distance))
    }))
}

/// Single-source shortest distances on the BN-Graph.
pub fn bn_graph_sssp(bn: &BnGraph, source: VertexId) -> Vec<Distance> {
    sssp_with(bn.num_vertices(), source, |v| bn.bns(v))
}

/// All-pairs distances by Floyd-Warshall; an independent second oracle for
/// small graphs.
pub fn floyd_warshall(graph: &RoadNetwork) -> Vec<Vec<Distance>> {
    let n = graph.num_vertices();
    let mut d = vec![vec![INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v, w) in graph.edges() {
        let (u, v) = (u as usize, v as usize);
        d[u][v] = d[u][v].min(w as Distance);
        d[v][u] = d[u][v];
    }
    for m in 0..n {
        let row_m = d[m].clone();
        for row in d.iter_mut() {
            let dim = row[m];
            if dim == INFINITY {
                continue;
            }
            for (dij, &dmj) in row.iter_mut().zip(&row_m) {
                *dij = (*dij).min(dim.saturating_add(dmj));
            }
        }
    }
    d
}

/// Every object within the k-th nearest object's distance from `u`, sorted
/// by (distance, id). The first min(k, |M|) entries are the kNN answer.
fn knn_ball(graph: &RoadNetwork, objects: &ObjectSet, k: usize, u: VertexId) -> Vec<KnnEntry> {
    let mut dist: HashMap<VertexId, Distance> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut found = Vec::new();
    let mut radius = INFINITY;
    dist.insert(u, 0);
    heap.push(Reverse((0, u)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > radius {
            break;
        }
        if d > dist[&v] {
            continue;
        }
        if objects.contains(v) {
            found.push(KnnEntry::new(v, d));
            if found.len() == k {
                radius = d;
            }
        }
        for (t, w) in graph.neighbors(v) {
            let nd = d + w as Distance;
            if dist.get(&t).is_none_or(|&cur| nd < cur) {
                dist.insert(t, nd);
                heap.push(Reverse((nd, t)));
            }
        }
    }
    found
}

/// The k nearest objects of `u` by label-setting search on G, stopping once
/// the k-th object is settled. Ties break by object id.
pub fn dijkstra_knn(graph: &RoadNetwork, objects: &ObjectSet, k: usize, u: VertexId) -> Result<Vec<KnnEntry>> {
    if !graph.contains(u) {
        return Err(Error::UnknownVertex(u));
    }
    let mut ball = knn_ball(graph, objects, k, u);
    ball.truncate(k);
    Ok(ball)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Wrong k or wrong list length.
    Shape,
    /// Distance multiset differs from the oracle's.
    Distances,
    /// A stored object is not an object, has a wrong distance, or is farther
    /// than some object left out.
    Membership,
    /// BN-Graph vertex set differs from the road network's.
    VertexSet,
    /// A the BN-Graph edge weight differs from the true distance.
    EdgeWeight,
    /// A pair distance in the BN-Graph differs from G.
    PairDistance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub vertex: Option<VertexId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vertex {
            Some(v) => write!(f, "{:?} at vertex {}: {}", self.kind, v + 1, self.detail),
            None => write!(f, "{:?}: {}", self.kind, self.detail),
        }
    }
}

/// Outcome of a verification pass. Keeps the first few violations verbatim.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    /// Items checked (vertices, edges or pairs depending on the check).
    pub checked: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violation_count == 0
    }

    fn add(&mut self, v: Violation) {
        self.violation_count += 1;
        if self.violations.len() < REPORTED_VIOLATIONS {
            self.violations.push(v);
        }
    }

    fn absorb(&mut self, checked: u64, found: Vec<Violation>) {
        self.checked += checked;
        for v in found {
            self.add(v);
        }
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checked += other.checked;
        self.violation_count += other.violation_count;
        let room = REPORTED_VIOLATIONS.saturating_sub(self.violations.len());
        self.violations.extend(other.violations.into_iter().take(room));
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "checked {}, violations {}", self.checked, self.violation_count)?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Checks one vertex's list against the oracle.
fn check_list(graph: &RoadNetwork, objects: &ObjectSet, k: usize, v: VertexId, list: &[KnnEntry]) -> Vec<Violation> {
    let mut out = Vec::new();
    let expect_len = k.min(objects.len());
    if list.len() != expect_len {
        out.push(Violation {
            kind: ViolationKind::Shape,
            vertex: Some(v),
            detail: format!("list holds {} entries, expected {expect_len}", list.len()),
        });
    }
    let ball = knn_ball(graph, objects, k, v);
    let truth: Vec<Distance> = ball.iter().take(k).map(|e| e.distance).collect();
    let mut got: Vec<Distance> = list.iter().map(|e| e.distance).collect();
    got.sort_unstable();
    if got != truth {
        out.push(Violation {
            kind: ViolationKind::Distances,
            vertex: Some(v),
            detail: format!("distances {got:?}, oracle {truth:?}"),
        });
    }
    let within: HashMap<VertexId, Distance> = ball.iter().map(|e| (e.object, e.distance)).collect();
    for e in list {
        let problem = if !objects.contains(e.object) {
            Some("is not a candidate object".to_string())
        } else {
            match within.get(&e.object) {
                Some(&d) if d == e.distance => None,
                Some(&d) => Some(format!("stored distance {}, true distance {d}", { e.distance })),
                None => Some("is farther than an omitted object".to_string()),
            }
        };
        if let Some(p) = problem {
            out.push(Violation {
                kind: ViolationKind::Membership,
                vertex: Some(v),
                detail: format!("object {} {p}", e.object + 1),
            });
        }
    }
    out
}

/// Compares every list of `index` with the Dijkstra oracle: list length,
/// distance multiset, and that members are real objects at their true
/// distance no farther than any omitted object.
pub fn verify_index(
    graph: &RoadNetwork,
    objects: &ObjectSet,
    k: usize,
    index: &KnnIndex,
    exec: Execution,
) -> VerificationReport {
    let mut report = VerificationReport::default();
    let n = graph.num_vertices();
    if index.k() != k || index.num_vertices() != n || objects.universe() != n {
        report.add(Violation {
            kind: ViolationKind::Shape,
            vertex: None,
            detail: format!(
                "index has k = {} over {} vertices, expected k = {k} over {n}",
                index.k(),
                index.num_vertices()
            ),
        });
        return report;
    }
    let found = par::map_range(n as u32, exec, |v| check_list(graph, objects, k, v, index.list(v)));
    report.absorb(n as u64, found.into_iter().flatten().collect());
    report
}

/// Checks the three BN-Graph conditions: same vertex set; every edge weight
/// equals the true distance (all edges); pair distances preserved. Pair
/// distances are compared on full rows from every vertex when n <= 200,
/// otherwise from `sample_sources` seeded random sources.
pub fn verify_bn_graph(
    graph: &RoadNetwork,
    bn: &BnGraph,
    sample_sources: usize,
    seed: u64,
    exec: Execution,
) -> VerificationReport {
    let mut report = VerificationReport::default();
    let n = graph.num_vertices();
    if bn.num_vertices() != n {
        report.add(Violation {
            kind: ViolationKind::VertexSet,
            vertex: None,
            detail: format!("the BN-Graph has {} vertices, G has {n}", bn.num_vertices()),
        });
        return report;
    }

    let edge_checks = par::map_range(n as u32, exec, |a| {
        let targets: Vec<(VertexId, Distance)> = bn.bns_higher(a).collect();
        let mut bad = Vec::new();
        if targets.is_empty() {
            return (0u64, bad);
        }
        let truth = bounded_distances(graph, a, &targets);
        for (&(b, d), t) in targets.iter().zip(truth) {
            if d != t {
                bad.push(Violation {
                    kind: ViolationKind::EdgeWeight,
                    vertex: Some(a),
                    detail: format!("edge to {} has weight {d}, true distance {t}", b + 1),
                });
            }
        }
        (targets.len() as u64, bad)
    });
    for (checked, bad) in edge_checks {
        report.absorb(checked, bad);
    }

    let sources: Vec<VertexId> = if n <= 200 {
        (0..n as VertexId).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = sample_sources.clamp(1, n);
        let mut s: Vec<VertexId> = sample(&mut rng, n, count).into_iter().map(|i| i as VertexId).collect();
        s.sort_unstable();
        s
    };
    let pair_checks = par::map_slice(&sources, exec, |&s| {
        let in_g = dijkstra_sssp(graph, s).expect("source is in range");
        let in_bn = bn_graph_sssp(bn, s);
        let bad: Vec<Violation> = in_g
            .iter()
            .zip(&in_bn)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(t, (a, b))| Violation {
                kind: ViolationKind::PairDistance,
                vertex: Some(s),
                detail: format!("distance to {} is {b} in the BN-Graph, {a} in G", t + 1),
            })
            .collect();
        (n as u64, bad)
    });
    for (checked, bad) in pair_checks {
        report.absorb(checked, bad);
    }
    report
}

/// True distances from `source` to each target, stopping once all are settled.
fn bounded_distances(graph: &RoadNetwork, source: VertexId, targets: &[(VertexId, Distance)]) -> Vec<Distance> {
    let mut want: HashMap<VertexId, Distance> = targets.iter().map(|&(t, _)| (t, INFINITY)).collect();
    let mut left = want.len();
    let mut dist: HashMap<VertexId, Distance> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0);
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[&v] {
            continue;
        }
        if let Some(slot) = want.get_mut(&v) {
            if *slot == INFINITY {
                *slot = d;
                left -= 1;
                if left == 0 {
                    break;
                }
            }
        }
        for (t, w) in graph.neighbors(v) {
            let nd = d + w as Distance;
            if dist.get(&t).is_none_or(|&cur| nd < cur) {
                dist.insert(t, nd);
                heap.push(Reverse((nd, t)));
            }
        }
    }
    targets.iter().map(|(t, _)| want[t]).collect()
}
