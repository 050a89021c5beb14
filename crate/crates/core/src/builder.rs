//! Index construction over the BN-Graph.
//!
//! Both builders start from the partial lists, computed in increasing rank
//! from the lower-ranked bridge neighbours. They differ in how the full lists are
//! completed:
//!
//! - [`build_index_bottom_up`] explores the upward subgraph of every u with a
//!   Dijkstra search, then combines the partial lists found there;
//! - [`build_index_bidirectional`] walks the ranks downward and combines
//!   the partial list of u with the finished lists of the higher-ranked bridge neighbours,
//!   with no shortest-path searches at all.
//!
//! Ties are broken by object id everywhere, so both produce identical lists.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::bn_graph::{collect_increasing, BnGraph, BuildStats, IncreasingSubgraph, VertexOrder};
use crate::error::{Error, Result};
use crate::graph::{Distance, VertexId, INFINITY};
use crate::knn::{check_k, KnnEntry, KnnIndex, KnnTable, PartialKnn};
use crate::objects::ObjectSet;

/// Which construction algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    BottomUp,
    Bidirectional,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bottomup" | "bottom-up" => Ok(Algorithm::BottomUp),
            "bidirectional" => Ok(Algorithm::Bidirectional),
            other => Err(format!("unknown algorithm `{other}` (expected bottomup|bidirectional)")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::BottomUp => "bottomup",
            Algorithm::Bidirectional => "bidirectional",
        })
    }
}

/// Candidate set S: best known distance per object, cleared in O(1) between
/// vertices by bumping an epoch.
pub(crate) struct Candidates {
    best: Vec<Distance>,
    stamp: Vec<u32>,
    epoch: u32,
    touched: Vec<VertexId>,
    scratch: Vec<KnnEntry>,
}

impl Candidates {
    pub(crate) fn new(n: usize) -> Self {
        Candidates {
            best: vec![INFINITY; n],
            stamp: vec![0; n],
            epoch: 0,
            touched: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub(crate) fn clear(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.touched.clear();
    }

    #[inline]
    pub(crate) fn offer(&mut self, object: VertexId, d: Distance) {
        let o = object as usize;
        if self.stamp[o] != self.epoch {
            self.stamp[o] = self.epoch;
            self.best[o] = d;
            self.touched.push(object);
        } else if d < self.best[o] {
            self.best[o] = d;
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.touched.len()
    }

    /// The k smallest candidates under (distance, id), sorted.
    pub(crate) fn top_k(&mut self, k: usize) -> &[KnnEntry] {
        self.scratch.clear();
        self.scratch
            .extend(self.touched.iter().map(|&o| KnnEntry::new(o, self.best[o as usize])));
        if self.scratch.len() > k {
            self.scratch.select_nth_unstable(k - 1);
            self.scratch.truncate(k);
        }
        self.scratch.sort_unstable();
        &self.scratch
    }
}

fn validate(bn: &BnGraph, order: &VertexOrder, objects: &ObjectSet, k: usize) -> Result<()> {
    check_k(k)?;
    let n = bn.num_vertices();
    if order.len() != n || objects.universe() != n {
        return Err(Error::Format(format!(
            "inconsistent sizes: graph {n}, order {}, objects {}",
            order.len(),
            objects.universe()
        )));
    }
    if objects.is_empty() {
        return Err(Error::EmptyObjectSet);
    }
    Ok(())
}

/// Partial lists for every vertex, in increasing rank. Candidates for u are u
/// itself if it is an object plus the partial lists of its lower bridge
/// neighbours w, with
/// dist_down(u, v) = min over w of weight(u, w) + dist_down(w, v).
pub fn compute_partial_knn(bn: &BnGraph, order: &VertexOrder, objects: &ObjectSet, k: usize) -> Result<PartialKnn> {
    validate(bn, order, objects, k)?;
    let n = bn.num_vertices();
    let mut table = KnnTable::new(n, k)?;
    let mut cand = Candidates::new(n);
    for &u in order.by_rank() {
        cand.clear();
        if objects.contains(u) {
            cand.offer(u, 0);
        }
        for (w, phi) in bn.bns_lower(u) {
            for e in table.get(w) {
                cand.offer(e.object, phi + e.distance);
            }
        }
        let top = cand.top_k(k);
        table.set(u, top);
    }
    Ok(PartialKnn { table })
}

/// Exact distances from `sub.root` to every vertex of the subgraph, using
/// only BN-Graph edges with both endpoints inside it. Output follows
/// `sub.vertices` order.
pub fn sssp_on_subgraph(bn: &BnGraph, sub: &IncreasingSubgraph, stats: &mut BuildStats) -> Vec<(VertexId, Distance)> {
    let mut search = SubgraphSearch::new(bn.num_vertices());
    search.run(bn, &sub.vertices);
    stats.sssp_invocations += 1;
    sub.vertices.iter().map(|&v| (v, search.dist[v as usize])).collect()
}

/// Reusable Dijkstra state restricted to a vertex subset.
struct SubgraphSearch {
    dist: Vec<Distance>,
    inside: Vec<bool>,
    heap: BinaryHeap<Reverse<(Distance, VertexId)>>,
}

impl SubgraphSearch {
    fn new(n: usize) -> Self {
        SubgraphSearch { dist: vec![INFINITY; n], inside: vec![false; n], heap: BinaryHeap::new() }
    }

    /// `vertices[0]` is the source.
    fn run(&mut self, bn: &BnGraph, vertices: &[VertexId]) {
        for &v in vertices {
            self.inside[v as usize] = true;
            self.dist[v as usize] = INFINITY;
        }
        let src = vertices[0];
        self.dist[src as usize] = 0;
        self.heap.push(Reverse((0, src)));
        while let Some(Reverse((d, v))) = self.heap.pop() {
            if d > self.dist[v as usize] {
                continue;
            }
            for (t, w) in bn.bns(v) {
                if !self.inside[t as usize] {
                    continue;
                }
                let nd = d + w;
                if nd < self.dist[t as usize] {
                    self.dist[t as usize] = nd;
                    self.heap.push(Reverse((nd, t)));
                }
            }
        }
        for &v in vertices {
            self.inside[v as usize] = false;
        }
    }
}

/// Bottom-up construction: for every u, a Dijkstra search over its upward
/// subgraph gives dist(u, w), and the candidates are the partial lists of
/// every w found there, with
/// dist(u, v) = min over w of dist(u, w) + dist_down(w, v).
///
/// Performs exactly one subgraph search per vertex and records eta.
pub fn build_index_bottom_up(
    bn: &BnGraph,
    order: &VertexOrder,
    partial: &PartialKnn,
    objects: &ObjectSet,
    k: usize,
    stats: &mut BuildStats,
) -> Result<KnnIndex> {
    validate(bn, order, objects, k)?;
    check_partial(partial, bn, k)?;
    let n = bn.num_vertices();
    let mut table = KnnTable::new(n, k)?;
    let mut cand = Candidates::new(n);
    let mut search = SubgraphSearch::new(n);
    let mut seen = vec![false; n];
    let mut sub = Vec::new();
    let mut eta = 0u64;
    let mut max_cand = 0u64;

    for &u in order.by_rank() {
        sub.clear();
        collect_increasing(bn, u, &mut seen, &mut sub);
        for &v in &sub {
            seen[v as usize] = false;
        }
        eta = eta.max(sub.len() as u64);
        search.run(bn, &sub);
        stats.sssp_invocations += 1;

        cand.clear();
        for &w in &sub {
            let dw = search.dist[w as usize];
            for e in partial.get(w) {
                cand.offer(e.object, dw + e.distance);
            }
        }
        max_cand = max_cand.max(cand.len() as u64);
        let top = cand.top_k(k);
        table.set(u, top);
    }
    stats.eta = Some(eta);
    stats.max_candidate_set = max_cand;
    Ok(KnnIndex { table, object_fingerprint: objects.fingerprint() })
}

/// Bidirectional construction, in decreasing rank:
/// Candidates for u are its partial list plus the full lists of its higher
/// bridge neighbours w, with
/// dist(u, v) = min(min over w of weight(u, w) + dist(w, v), dist_down(u, v)).
pub fn build_index_bidirectional(
    bn: &BnGraph,
    order: &VertexOrder,
    partial: &PartialKnn,
    objects: &ObjectSet,
    k: usize,
    stats: &mut BuildStats,
) -> Result<KnnIndex> {
    validate(bn, order, objects, k)?;
    check_partial(partial, bn, k)?;
    let n = bn.num_vertices();
    let mut table = KnnTable::new(n, k)?;
    let mut cand = Candidates::new(n);
    let mut max_cand = 0u64;

    for &u in order.by_rank().iter().rev() {
        cand.clear();
        for e in partial.get(u) {
            cand.offer(e.object, e.distance);
        }
        for (w, phi) in bn.bns_higher(u) {
            for e in table.get(w) {
                cand.offer(e.object, phi + e.distance);
            }
        }
        max_cand = max_cand.max(cand.len() as u64);
        let top = cand.top_k(k);
        table.set(u, top);
    }
    stats.max_candidate_set = max_cand;
    Ok(KnnIndex { table, object_fingerprint: objects.fingerprint() })
}

fn check_partial(partial: &PartialKnn, bn: &BnGraph, k: usize) -> Result<()> {
    if partial.k() != k || partial.table().num_vertices() != bn.num_vertices() {
        return Err(Error::Format("partial lists were computed for a different graph or k".into()));
    }
    Ok(())
}

/// Runs the chosen builder end to end on an existing BN-Graph.
pub fn build_index(
    bn: &BnGraph,
    order: &VertexOrder,
    objects: &ObjectSet,
    k: usize,
    algorithm: Algorithm,
    stats: &mut BuildStats,
) -> Result<(PartialKnn, KnnIndex)> {
    let partial = compute_partial_knn(bn, order, objects, k)?;
    let index = match algorithm {
        Algorithm::BottomUp => build_index_bottom_up(bn, order, &partial, objects, k, stats)?,
        Algorithm::Bidirectional => build_index_bidirectional(bn, order, &partial, objects, k, stats)?,
    };
    Ok((partial, index))
}
