//! Vertex elimination order and the bridge-neighbour-preserved graph (BN-Graph).
//!
//! The BN-Graph keeps the vertex set of G, every edge weight equals the true shortest
//! distance between its endpoints, and all pairwise distances are preserved.
//! It is built in two phases over a total order of the vertices:
//!
//! 1. insertion: vertices are eliminated in increasing rank; the higher-rank
//!    neighbours of each eliminated vertex are made pairwise adjacent with
//!    the weight of the two-hop path through it (or relaxed to it);
//! 2. pruning: in decreasing rank, an edge `(w, u)` to a higher neighbour is
//!    dropped when some other higher neighbour `v` gives a strictly shorter
//!    route `w -> v -> u`.
//!
//! The surviving neighbours of `v` are its bridge neighbours, split by rank
//! into lower and higher ones.
//!
//! The order itself is a greedy minimum-degree rule evaluated on the evolving
//! graph of phase 1, so the two are computed together.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Distance, RoadNetwork, VertexId};

/// Bijective rank assignment over the vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexOrder {
    rank: Vec<u32>,
    by_rank: Vec<VertexId>,
}

impl VertexOrder {
    /// Builds an order from the vertex list in increasing rank.
    pub fn from_by_rank(by_rank: Vec<VertexId>) -> Result<Self> {
        let n = by_rank.len();
        let mut rank = vec![u32::MAX; n];
        for (r, &v) in by_rank.iter().enumerate() {
            if v as usize >= n || rank[v as usize] != u32::MAX {
                return Err(Error::Format(format!("order is not a permutation (vertex {v})")));
            }
            rank[v as usize] = r as u32;
        }
        Ok(VertexOrder { rank, by_rank })
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    #[inline]
    pub fn rank(&self, v: VertexId) -> u32 {
        self.rank[v as usize]
    }

    #[inline]
    pub fn vertex_at(&self, rank: u32) -> VertexId {
        self.by_rank[rank as usize]
    }

    /// Vertices in increasing rank.
    pub fn by_rank(&self) -> &[VertexId] {
        &self.by_rank
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }
}

/// Size parameters and counters collected while building the BN-Graph and the index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Maximum degree in the augmented graph when insertion finishes.
    pub rho: u64,
    /// max number of higher bridge neighbours of any vertex
    pub tau: u64,
    /// max number of bridge neighbours of any vertex
    pub tau_prime: u64,
    /// max upward subgraph size; only known after a bottom-up build or an explicit scan.
    pub eta: Option<u64>,
    pub edges_inserted: u64,
    pub edges_removed: u64,
    pub sssp_invocations: u64,
    /// Largest candidate set S seen by the last index builder.
    pub max_candidate_set: u64,
}

/// G after the insertion phase. Every edge is stored once, at its
/// lower-ranked endpoint, sorted by neighbour id.
#[derive(Debug, Clone)]
pub struct AugmentedGraph {
    up: Vec<Vec<(VertexId, Distance)>>,
    rho: u64,
    edges_inserted: u64,
}

impl AugmentedGraph {
    /// Higher-ranked neighbours of `v` with their (possibly non-final) weights.
    pub fn higher(&self, v: VertexId) -> &[(VertexId, Distance)] {
        &self.up[v as usize]
    }

    pub fn num_edges(&self) -> usize {
        self.up.iter().map(Vec::len).sum()
    }

    pub fn rho(&self) -> u64 {
        self.rho
    }
}

/// The bridge-neighbour-preserved graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnGraph {
    lower: Adjacency<Distance>,
    higher: Adjacency<Distance>,
    base_fingerprint: u64,
    stats: BuildStats,
}

impl BnGraph {
    /// Assembles the BN-Graph from per-vertex higher-neighbour lists (sorted by id). Used by the
    /// bundle loader and by tests that need hand-made graphs.
    pub fn from_higher_lists(
        higher: Vec<Vec<(VertexId, Distance)>>,
        base_fingerprint: u64,
        stats: BuildStats,
    ) -> Self {
        let n = higher.len();
        let mut lower: Vec<Vec<(VertexId, Distance)>> = vec![Vec::new(); n];
        for (w, list) in higher.iter().enumerate() {
            for &(u, d) in list {
                lower[u as usize].push((w as VertexId, d));
            }
        }
        BnGraph {
            lower: Adjacency::from_lists(lower),
            higher: Adjacency::from_lists(higher),
            base_fingerprint,
            stats,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.higher.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.higher.num_entries()
    }

    /// Fingerprint of the road network this graph was derived from.
    pub fn base_fingerprint(&self) -> u64 {
        self.base_fingerprint
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    #[inline]
    pub fn bns_lower(&self, v: VertexId) -> impl ExactSizeIterator<Item = (VertexId, Distance)> + '_ {
        self.lower.neighbors(v)
    }

    #[inline]
    pub fn bns_higher(&self, v: VertexId) -> impl ExactSizeIterator<Item = (VertexId, Distance)> + '_ {
        self.higher.neighbors(v)
    }

    /// Bridge neighbours of v: lower-ranked neighbours first, then higher-ranked ones.
    #[inline]
    pub fn bns(&self, v: VertexId) -> impl Iterator<Item = (VertexId, Distance)> + '_ {
        self.lower.neighbors(v).chain(self.higher.neighbors(v))
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.lower.degree(v) + self.higher.degree(v)
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<Distance> {
        self.higher.weight(u, v).or_else(|| self.lower.weight(u, v))
    }

    /// Edges `(lower-ranked endpoint, higher-ranked endpoint, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, Distance)> + '_ {
        (0..self.num_vertices() as VertexId)
            .flat_map(move |w| self.higher.neighbors(w).map(move |(u, d)| (w, u, d)))
    }

    /// Replaces the recorded build statistics (the builders add their own
    /// counters to the ones gathered here).
    pub fn with_stats(mut self, stats: BuildStats) -> Self {
        self.stats = stats;
        self
    }

    pub(crate) fn higher_adjacency(&self) -> &Adjacency<Distance> {
        &self.higher
    }
}

/// Computes the order with the minimum-degree rule. Runs the insertion phase and
/// discards the augmented graph.
pub fn compute_order(graph: &RoadNetwork) -> VertexOrder {
    eliminate_and_augment(graph).0
}

/// Insertion phase with the order chosen greedily: next is the unprocessed
/// vertex with the fewest unprocessed neighbours in the evolving graph,
/// smallest id first on ties.
pub fn eliminate_and_augment(graph: &RoadNetwork) -> (VertexOrder, AugmentedGraph) {
    eliminate(graph, None)
}

/// Insertion phase under a caller-supplied order.
pub fn eliminate_with_order(graph: &RoadNetwork, order: &VertexOrder) -> AugmentedGraph {
    eliminate(graph, Some(order)).1
}

fn eliminate(graph: &RoadNetwork, fixed: Option<&VertexOrder>) -> (VertexOrder, AugmentedGraph) {
    let n = graph.num_vertices();
    // live adjacency among not-yet-eliminated vertices, sorted by id
    let mut adj: Vec<Vec<(VertexId, Distance)>> = (0..n as VertexId)
        .map(|v| graph.neighbors(v).map(|(t, w)| (t, w as Distance)).collect())
        .collect();
    let mut done = vec![false; n];
    let mut by_rank = Vec::with_capacity(n);
    let mut up = vec![Vec::new(); n];
    let mut edges_inserted = 0u64;
    let mut scratch = Vec::new();

    let mut heap: BinaryHeap<Reverse<(usize, VertexId)>> = match fixed {
        Some(_) => BinaryHeap::new(),
        None => (0..n as VertexId).map(|v| Reverse((adj[v as usize].len(), v))).collect(),
    };

    for step in 0..n {
        let w = match fixed {
            Some(order) => order.vertex_at(step as u32),
            None => loop {
                let Reverse((deg, v)) = heap.pop().expect("heap holds every live vertex");
                if !done[v as usize] && adj[v as usize].len() == deg {
                    break v;
                }
            },
        };
        done[w as usize] = true;
        by_rank.push(w);

        let nbrs = std::mem::take(&mut adj[w as usize]);
        for (i, &(u, wu)) in nbrs.iter().enumerate() {
            let added = merge_fill(&mut adj[u as usize], &mut scratch, w, &nbrs, i, wu);
            // each new pair is created from both ends; count it once
            edges_inserted += nbrs[i + 1..]
                .iter()
                .filter(|&&(v, _)| added.binary_search(&v).is_ok())
                .count() as u64;
        }
        if fixed.is_none() {
            for &(x, _) in &nbrs {
                heap.push(Reverse((adj[x as usize].len(), x)));
            }
        }
        up[w as usize] = nbrs;
    }

    let mut degree: Vec<u64> = up.iter().map(|l| l.len() as u64).collect();
    for list in &up {
        for &(u, _) in list {
            degree[u as usize] += 1;
        }
    }
    let rho = degree.into_iter().max().unwrap_or(0);
    let order = match fixed {
        Some(o) => o.clone(),
        None => VertexOrder::from_by_rank(by_rank).expect("elimination visits every vertex once"),
    };
    (order, AugmentedGraph { up, rho, edges_inserted })
}

/// Rewrites the live list of `nbrs[me]` after eliminating `w`: drops `w`
/// and merges in every other neighbour of `w` at `via + weight(w, v)`, keeping
/// the smaller weight for pairs already adjacent. Returns the vertices that
/// were not adjacent before.
fn merge_fill(
    list: &mut Vec<(VertexId, Distance)>,
    scratch: &mut Vec<(VertexId, Distance)>,
    w: VertexId,
    nbrs: &[(VertexId, Distance)],
    me: usize,
    via: Distance,
) -> Vec<VertexId> {
    scratch.clear();
    let mut added = Vec::new();
    let mut others = nbrs.iter().enumerate().filter(|&(i, _)| i != me).map(|(_, &e)| e).peekable();
    let mut old = list.iter().copied().filter(|&(t, _)| t != w).peekable();
    loop {
        match (old.peek().copied(), others.peek().copied()) {
            (Some(a), Some(b)) if a.0 == b.0 => {
                scratch.push((a.0, a.1.min(via + b.1)));
                old.next();
                others.next();
            }
            (Some(a), Some(b)) if a.0 < b.0 => {
                scratch.push(a);
                old.next();
            }
            (_, Some(b)) => {
                scratch.push((b.0, via + b.1));
                added.push(b.0);
                others.next();
            }
            (Some(a), None) => {
                scratch.push(a);
                old.next();
            }
            (None, None) => break,
        }
    }
    std::mem::swap(list, scratch);
    added
}

/// Pruning phase: turns the augmented graph into the BN-Graph.
pub fn prune_to_bn_graph(aug: AugmentedGraph, order: &VertexOrder, base_fingerprint: u64) -> BnGraph {
    let AugmentedGraph { mut up, rho, edges_inserted } = aug;
    let n = up.len();
    let mut marked: Vec<Vec<bool>> = up.iter().map(|l| vec![false; l.len()]).collect();
    let mut edges_removed = 0u64;
    // position of each vertex in the neighbour list being processed
    let mut pos = vec![u32::MAX; n];
    // clique weights among those neighbours, row-major
    let mut clique: Vec<Distance> = Vec::new();

    for r in (0..n as u32).rev() {
        let w = order.vertex_at(r) as usize;
        let mut nbrs = std::mem::take(&mut up[w]);
        let d = nbrs.len();
        if d < 2 {
            up[w] = nbrs;
            continue;
        }
        for (i, &(v, _)) in nbrs.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        clique.clear();
        clique.resize(d * d, Distance::MAX);
        for (i, &(v, _)) in nbrs.iter().enumerate() {
            for &(x, dx) in &up[v as usize] {
                let j = pos[x as usize];
                if j != u32::MAX {
                    clique[i * d + j as usize] = dx;
                    clique[j as usize * d + i] = dx;
                }
            }
        }
        for j in 0..d {
            let row = &clique[j * d..(j + 1) * d];
            for i in 0..d {
                if i == j {
                    continue;
                }
                let via = nbrs[i].1.saturating_add(row[i]);
                if via < nbrs[j].1 {
                    nbrs[j].1 = via;
                    if !marked[w][j] {
                        marked[w][j] = true;
                        edges_removed += 1;
                    }
                }
            }
        }
        for &(v, _) in &nbrs {
            pos[v as usize] = u32::MAX;
        }
        up[w] = nbrs;
    }

    let higher: Vec<Vec<(VertexId, Distance)>> = up
        .into_iter()
        .zip(marked)
        .map(|(list, m)| {
            list.into_iter()
                .zip(m)
                .filter_map(|(e, gone)| (!gone).then_some(e))
                .collect()
        })
        .collect();

    let tau = higher.iter().map(|l| l.len() as u64).max().unwrap_or(0);
    let mut bn = BnGraph::from_higher_lists(higher, base_fingerprint, BuildStats::default());
    let tau_prime = (0..n as VertexId).map(|v| bn.degree(v) as u64).max().unwrap_or(0);
    bn.stats = BuildStats {
        rho,
        tau,
        tau_prime,
        edges_inserted,
        edges_removed,
        ..BuildStats::default()
    };
    bn
}

/// Computes the order and the BN-Graph for a road network.
pub fn build_bn_graph(graph: &RoadNetwork) -> (VertexOrder, BnGraph) {
    let (order, aug) = eliminate_and_augment(graph);
    let bn = prune_to_bn_graph(aug, &order, graph.fingerprint());
    (order, bn)
}

/// Builds the BN-Graph under a caller-supplied order.
pub fn build_bn_graph_with_order(graph: &RoadNetwork, order: &VertexOrder) -> BnGraph {
    let aug = eliminate_with_order(graph, order);
    prune_to_bn_graph(aug, order, graph.fingerprint())
}

/// Vertex set of the upward subgraph of u: everything reachable from `u` along edges of
/// strictly increasing rank, `u` first.
pub fn build_increasing_subgraph(bn: &BnGraph, u: VertexId) -> IncreasingSubgraph {
    let mut seen = vec![false; bn.num_vertices()];
    let mut vertices = Vec::new();
    collect_increasing(bn, u, &mut seen, &mut vertices);
    IncreasingSubgraph { root: u, vertices }
}

pub(crate) fn collect_increasing(bn: &BnGraph, u: VertexId, seen: &mut [bool], out: &mut Vec<VertexId>) {
    let start = out.len();
    seen[u as usize] = true;
    out.push(u);
    let mut head = start;
    while head < out.len() {
        let v = out[head];
        head += 1;
        for &t in bn.higher_adjacency().targets(v) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                out.push(t);
            }
        }
    }
}

/// The upward subgraph of u as a vertex list; its edges are all BN-Graph edges among those vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncreasingSubgraph {
    pub root: VertexId,
    pub vertices: Vec<VertexId>,
}

impl IncreasingSubgraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges of the subgraph as `(lower, higher, weight)`, sorted.
    pub fn edges(&self, bn: &BnGraph) -> Vec<(VertexId, VertexId, Distance)> {
        let mut inside = vec![false; bn.num_vertices()];
        for &v in &self.vertices {
            inside[v as usize] = true;
        }
        let mut edges: Vec<_> = self
            .vertices
            .iter()
            .flat_map(|&v| bn.bns_higher(v).map(move |(t, d)| (v, t, d)))
            .filter(|&(_, t, _)| inside[t as usize])
            .collect();
        edges.sort_unstable();
        edges
    }
}

/// Max upward subgraph size over all vertices. One upward BFS per vertex.
pub fn compute_eta(bn: &BnGraph) -> u64 {
    let n = bn.num_vertices();
    let mut seen = vec![false; n];
    let mut buf = Vec::new();
    let mut eta = 0;
    for u in 0..n as VertexId {
        buf.clear();
        collect_increasing(bn, u, &mut seen, &mut buf);
        eta = eta.max(buf.len() as u64);
        for &v in &buf {
            seen[v as usize] = false;
        }
    }
    eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, WeightRange};

    fn path3() -> RoadNetwork {
        RoadNetwork::from_edges(3, [(0, 1, 1), (1, 2, 1)]).unwrap()
    }

    fn triangle() -> RoadNetwork {
        RoadNetwork::from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)]).unwrap()
    }

    fn edge_list(bn: &BnGraph) -> Vec<(VertexId, VertexId, Distance)> {
        let mut e: Vec<_> = bn.edges().map(|(a, b, d)| (a.min(b), a.max(b), d)).collect();
        e.sort_unstable();
        e
    }

    #[test]
    fn order_on_small_graphs() {
        assert_eq!(compute_order(&path3()).by_rank(), &[0, 1, 2]);
        assert_eq!(compute_order(&triangle()).by_rank(), &[0, 1, 2]);
        let single = RoadNetwork::from_edges(1, []).unwrap();
        assert_eq!(compute_order(&single).rank(0), 0);
    }

    #[test]
    fn order_prefers_low_degree() {
        // star: centre 0 with leaves 1..=3; leaves go first
        let star = RoadNetwork::from_edges(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1)]).unwrap();
        let order = compute_order(&star);
        assert_eq!(order.vertex_at(0), 1);
        for v in 0..4 {
            assert_eq!(order.vertex_at(order.rank(v)), v);
        }
    }

    #[test]
    fn insertion_on_path_adds_nothing() {
        let (_, aug) = eliminate_and_augment(&path3());
        assert_eq!(aug.num_edges(), 2);
        assert_eq!(aug.edges_inserted, 0);
    }

    #[test]
    fn insertion_connects_star_leaves() {
        // centre 2 ranked lowest, leaves 0 and 1 with weights 1 and 2
        let g = RoadNetwork::from_edges(3, [(2, 0, 1), (2, 1, 2)]).unwrap();
        let order = VertexOrder::from_by_rank(vec![2, 0, 1]).unwrap();
        let aug = eliminate_with_order(&g, &order);
        assert_eq!(aug.higher(0), &[(1, 3)]);
        assert_eq!(aug.edges_inserted, 1);
    }

    #[test]
    fn triangle_prunes_long_edge() {
        let g = triangle();
        let (order, aug) = eliminate_and_augment(&g);
        assert_eq!(aug.num_edges(), 3);
        assert_eq!(aug.higher(0), &[(1, 1), (2, 5)]);
        let bn = prune_to_bn_graph(aug, &order, g.fingerprint());
        assert_eq!(edge_list(&bn), vec![(0, 1, 1), (1, 2, 1)]);
        assert_eq!(bn.bns(0).collect::<Vec<_>>(), vec![(1, 1)]);
        assert_eq!(bn.stats().edges_removed, 1);
    }

    #[test]
    fn path_is_unchanged() {
        let (_, bn) = build_bn_graph(&path3());
        assert_eq!(edge_list(&bn), vec![(0, 1, 1), (1, 2, 1)]);
        assert_eq!(bn.bns(1).map(|e| e.0).collect::<Vec<_>>(), vec![0, 2]);
        let single = RoadNetwork::from_edges(2, [(0, 1, 4)]).unwrap();
        assert_eq!(edge_list(&build_bn_graph(&single).1), vec![(0, 1, 4)]);
    }

    #[test]
    fn bns_halves_split_by_rank() {
        let g = generate_grid(6, 7, WeightRange::new(1, 20).unwrap(), 5).unwrap();
        let (order, bn) = build_bn_graph(&g);
        for v in 0..g.num_vertices() as VertexId {
            assert!(bn.bns_lower(v).all(|(t, _)| order.rank(t) < order.rank(v)));
            assert!(bn.bns_higher(v).all(|(t, _)| order.rank(t) > order.rank(v)));
        }
        let s = bn.stats();
        assert!(s.tau <= s.tau_prime && s.tau_prime <= s.rho);
    }

    #[test]
    fn increasing_subgraphs() {
        let (order, bn) = build_bn_graph(&path3());
        let top = order.vertex_at(2);
        assert_eq!(build_increasing_subgraph(&bn, top).vertices, vec![top]);
        let sub = build_increasing_subgraph(&bn, 0);
        assert_eq!(sub.vertices, vec![0, 1, 2]);
        assert_eq!(sub.edges(&bn), vec![(0, 1, 1), (1, 2, 1)]);

        let (_, tri) = build_bn_graph(&triangle());
        let mut from1 = build_increasing_subgraph(&tri, 1).vertices;
        from1.sort_unstable();
        assert_eq!(from1, vec![1, 2]);
        assert_eq!(compute_eta(&bn), 3);
    }

    #[test]
    fn deterministic() {
        let g = generate_grid(8, 8, WeightRange::new(1, 9).unwrap(), 11).unwrap();
        assert_eq!(build_bn_graph(&g), build_bn_graph(&g));
    }
}
