//! Road-network data model: an undirected, connected graph with positive
//! integer edge weights, stored as a compressed adjacency array.
//!
//! Vertex ids are 0-based and dense. External formats (DIMACS `.gr`, object
//! lists, CLI arguments) are 1-based and converted at the boundary.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hash::Fnv64;

pub type VertexId = u32;
/// Input edge length.
pub type Weight = u32;
/// Accumulated path length. Sums of at most `n` 32-bit weights never overflow.
pub type Distance = u64;

/// Sentinel for "unreachable".
pub const INFINITY: Distance = Distance::MAX;

/// Compressed adjacency array: the neighbours of `v` are
/// `targets[offsets[v]..offsets[v + 1]]`, sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency<W> {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    weights: Vec<W>,
}

impl<W: Copy> Adjacency<W> {
    /// Builds from per-vertex lists. Each list must already be sorted by target.
    pub fn from_lists(lists: Vec<Vec<(VertexId, W)>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let total = lists.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        offsets.push(0);
        for list in lists {
            for (t, w) in list {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Adjacency { offsets, targets, weights }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_entries(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn targets(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = (VertexId, W)> + '_ {
        let v = v as usize;
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Weight of the entry `v -> t`, by binary search.
    pub fn weight(&self, v: VertexId, t: VertexId) -> Option<W> {
        let v = v as usize;
        let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
        self.targets[lo..hi]
            .binary_search(&t)
            .ok()
            .map(|i| self.weights[lo + i])
    }
}

/// Undirected, connected, positively weighted road network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoadNetwork {
    adj: Adjacency<Weight>,
    num_edges: usize,
}

impl RoadNetwork {
    /// Builds a network from undirected edges.
    ///
    /// Self-loops are dropped, parallel edges collapse to their minimum weight,
    /// and the result must be connected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId, Weight)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut lists: Vec<Vec<(VertexId, Weight)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                let id = u.max(v) as u64 + 1;
                return Err(Error::VertexOutOfRange { line: 0, id, n });
            }
            if w == 0 {
                return Err(Error::InvalidWeight { line: 0, weight: "0".into() });
            }
            if u == v {
                continue;
            }
            lists[u as usize].push((v, w));
            lists[v as usize].push((u, w));
        }
        let mut num_entries = 0;
        for list in &mut lists {
            list.sort_unstable();
            // sorted by (target, weight): the first entry of each run is the minimum
            list.dedup_by_key(|e| e.0);
            num_entries += list.len();
        }
        let net = RoadNetwork {
            adj: Adjacency::from_lists(lists),
            num_edges: num_entries / 2,
        };
        net.check_connected()?;
        Ok(net)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0u32]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &t in self.adj.targets(v) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(b) => Err(Error::Disconnected { a: 0, b: b as u32 }),
            None => Ok(()),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn adjacency(&self) -> &Adjacency<Weight> {
        &self.adj
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = (VertexId, Weight)> + '_ {
        self.adj.neighbors(v)
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.degree(v)
    }

    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> Option<Weight> {
        self.adj.weight(u, v)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.num_vertices()
    }

    /// Undirected edges `(u, v, w)` with `u < v`, in ascending `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, Weight)> + '_ {
        (0..self.num_vertices() as VertexId).flat_map(move |u| {
            self.adj
                .neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Content hash over `n` and the canonical edge list.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.num_vertices() as u64);
        h.write_u64(self.num_edges as u64);
        for (u, v, w) in self.edges() {
            h.write_u32(u);
            h.write_u32(v);
            h.write_u32(w);
        }
        h.finish()
    }

    /// Subgraph induced by `vertices`, relabelled densely in the given order.
    /// Fails if the induced subgraph is disconnected.
    pub fn induced_subgraph(&self, vertices: &[VertexId]) -> Result<RoadNetwork> {
        let mut new_id = vec![u32::MAX; self.num_vertices()];
        for (i, &v) in vertices.iter().enumerate() {
            if !self.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
            new_id[v as usize] = i as u32;
        }
        let edges = self
            .edges()
            .filter(|&(u, v, _)| new_id[u as usize] != u32::MAX && new_id[v as usize] != u32::MAX)
            .map(|(u, v, w)| (new_id[u as usize], new_id[v as usize], w))
            .collect::<Vec<_>>();
        RoadNetwork::from_edges(vertices.len(), edges)
    }

    /// DIMACS `.gr` text with both arc directions per edge.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::with_capacity(self.num_edges * 24 + 32);
        let _ = writeln!(out, "p sp {} {}", self.num_vertices(), 2 * self.num_edges);
        for (u, v, w) in self.edges() {
            let _ = writeln!(out, "a {} {} {}", u + 1, v + 1, w);
            let _ = writeln!(out, "a {} {} {}", v + 1, u + 1, w);
        }
        out
    }
}

/// Parses a DIMACS shortest-path `.gr` file.
///
/// Arcs are read as undirected edges: reciprocal arcs merge and duplicates
/// keep the minimum weight.
pub fn parse_dimacs_gr(text: &[u8]) -> Result<RoadNetwork> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("input is not valid UTF-8: {e}"),
    })?;
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut fields = raw.split_whitespace();
        let Some(kind) = fields.next() else { continue };
        match kind {
            "c" => {}
            "p" => {
                if n.is_some() {
                    return Err(parse_err(line, "duplicate problem line"));
                }
                if fields.next() != Some("sp") {
                    return Err(parse_err(line, "expected `p sp <n> <m>`"));
                }
                let nv: usize = parse_field(fields.next(), line, "vertex count")?;
                let _m: usize = parse_field(fields.next(), line, "arc count")?;
                if fields.next().is_some() {
                    return Err(parse_err(line, "trailing fields on problem line"));
                }
                if nv == 0 {
                    return Err(Error::EmptyGraph);
                }
                edges.reserve(_m / 2);
                n = Some(nv);
            }
            "a" => {
                let nv = n.ok_or_else(|| parse_err(line, "arc before problem line"))?;
                let u: u64 = parse_field(fields.next(), line, "arc tail")?;
                let v: u64 = parse_field(fields.next(), line, "arc head")?;
                let w_str = fields
                    .next()
                    .ok_or_else(|| parse_err(line, "missing arc weight"))?;
                if fields.next().is_some() {
                    return Err(parse_err(line, "trailing fields on arc line"));
                }
                for id in [u, v] {
                    if id == 0 || id > nv as u64 {
                        return Err(Error::VertexOutOfRange { line, id, n: nv });
                    }
                }
                let w = match w_str.parse::<i64>() {
                    Ok(w) if w >= 1 && w <= Weight::MAX as i64 => w as Weight,
                    Ok(_) => {
                        return Err(Error::InvalidWeight { line, weight: w_str.to_string() })
                    }
                    Err(_) => return Err(parse_err(line, "arc weight is not an integer")),
                };
                edges.push(((u - 1) as VertexId, (v - 1) as VertexId, w));
            }
            other => return Err(parse_err(line, &format!("unknown line type `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing problem line"))?;
    RoadNetwork::from_edges(n, edges)
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse { line, msg: msg.to_string() }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    field
        .ok_or_else(|| parse_err(line, &format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, &format!("invalid {what}")))
}

/// Inclusive range edge weights are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightRange {
    pub min: Weight,
    pub max: Weight,
}

impl WeightRange {
    pub fn new(min: Weight, max: Weight) -> Result<Self> {
        if min == 0 || min > max {
            return Err(Error::InvalidWeightRange { min, max });
        }
        Ok(WeightRange { min, max })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Weight {
        rng.gen_range(self.min..=self.max)
    }
}

/// `rows x cols` lattice with 4-neighbourhood edges. Vertex `(r, c)` has id
/// `r * cols + c`; weights are drawn per edge in id order (right, then down).
pub fn generate_grid(rows: usize, cols: usize, weights: WeightRange, seed: u64) -> Result<RoadNetwork> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyGrid);
    }
    WeightRange::new(weights.min, weights.max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = (r * cols + c) as VertexId;
            if c + 1 < cols {
                edges.push((v, v + 1, weights.sample(&mut rng)));
            }
            if r + 1 < rows {
                edges.push((v, v + cols as VertexId, weights.sample(&mut rng)));
            }
        }
    }
    RoadNetwork::from_edges(rows * cols, edges)
}

/// Random spanning tree over a shuffled vertex order plus `extra_edges`
/// distinct non-tree edges.
pub fn generate_random_connected(
    n: usize,
    extra_edges: usize,
    weights: WeightRange,
    seed: u64,
) -> Result<RoadNetwork> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    WeightRange::new(weights.min, weights.max)?;
    let all_pairs = n * (n - 1) / 2;
    let available = all_pairs - (n - 1);
    if extra_edges > available {
        return Err(Error::TooManyEdges { requested: extra_edges, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<VertexId> = (0..n as VertexId).collect();
    perm.shuffle(&mut rng);

    let key = |a: VertexId, b: VertexId| (a.min(b), a.max(b));
    let mut present = HashSet::with_capacity(n + extra_edges);
    let mut edges = Vec::with_capacity(n - 1 + extra_edges);
    for i in 1..n {
        let parent = perm[rng.gen_range(0..i)];
        let child = perm[i];
        present.insert(key(parent, child));
        edges.push((parent, child, weights.sample(&mut rng)));
    }

    if extra_edges * 2 <= available {
        while edges.len() < n - 1 + extra_edges {
            let a = rng.gen_range(0..n as VertexId);
            let b = rng.gen_range(0..n as VertexId);
            if a != b && present.insert(key(a, b)) {
                edges.push((a.min(b), a.max(b), weights.sample(&mut rng)));
            }
        }
    } else {
        // dense request: enumerate the complement and pick a random subset
        let mut missing = Vec::with_capacity(available);
        for a in 0..n as VertexId {
            for b in a + 1..n as VertexId {
                if !present.contains(&(a, b)) {
                    missing.push((a, b));
                }
            }
        }
        missing.shuffle(&mut rng);
        for &(a, b) in &missing[..extra_edges] {
            edges.push((a, b, weights.sample(&mut rng)));
        }
    }
    RoadNetwork::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> WeightRange {
        WeightRange::new(1, 1).unwrap()
    }

    #[test]
    fn parses_two_vertex_graph() {
        let g = parse_dimacs_gr(b"p sp 2 2\na 1 2 7\na 2 1 7").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 7)]);
    }

    #[test]
    fn parses_path_with_comments() {
        let g = parse_dimacs_gr(b"c a path\np sp 3 4\na 1 2 1\na 2 1 1\n\na 2 3 1\na 3 2 1\n").unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1), (1, 2, 1)]);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn rejects_disconnected() {
        let err = parse_dimacs_gr(b"p sp 3 2\na 1 2 1\na 2 1 1").unwrap_err();
        assert!(matches!(err, Error::Disconnected { a: 0, b: 2 }));
        assert!(err.to_string().contains("vertex 3"));
    }

    #[test]
    fn asymmetric_and_duplicate_arcs_keep_minimum() {
        let g = parse_dimacs_gr(b"p sp 2 3\na 1 2 9\na 2 1 4\na 1 2 6").unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 4)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases: [(&[u8], usize); 6] = [
            (b"a 1 2 3\np sp 2 1", 1),
            (b"p sp 2 1\na 1 3 1", 2),
            (b"p sp 2 1\nc\na 1 2 0", 3),
            (b"p sp 2 1\na 1 2 -4", 2),
            (b"p sp 2 1\na 1 x 1", 2),
            (b"p sp 2 1\np sp 2 1", 2),
        ];
        for (text, expect) in cases {
            let line = match parse_dimacs_gr(text).unwrap_err() {
                Error::Parse { line, .. }
                | Error::VertexOutOfRange { line, .. }
                | Error::InvalidWeight { line, .. } => line,
                other => panic!("unexpected error {other:?}"),
            };
            assert_eq!(line, expect, "{}", String::from_utf8_lossy(text));
        }
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = parse_dimacs_gr(b"p sp 2 3\na 1 1 5\na 1 2 1\na 2 1 1").unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn grid_shapes() {
        let path = generate_grid(1, 3, unit(), 0).unwrap();
        assert_eq!(path.edges().collect::<Vec<_>>(), vec![(0, 1, 1), (1, 2, 1)]);
        let square = generate_grid(2, 2, unit(), 0).unwrap();
        assert_eq!(square.num_edges(), 4);
        assert!((0..4).all(|v| square.degree(v) == 2));
        let g = generate_grid(3, 3, WeightRange::new(1, 100).unwrap(), 42).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (9, 12));
        let again = generate_grid(3, 3, WeightRange::new(1, 100).unwrap(), 42).unwrap();
        assert_eq!(g.to_dimacs().as_bytes(), again.to_dimacs().as_bytes());
        assert!(g.edges().all(|(_, _, w)| (1..=100).contains(&w)));
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(matches!(generate_grid(0, 3, unit(), 0), Err(Error::EmptyGrid)));
        let inverted = WeightRange { min: 5, max: 2 };
        assert!(matches!(
            generate_grid(2, 2, inverted, 0),
            Err(Error::InvalidWeightRange { .. })
        ));
    }

    #[test]
    fn random_connected_shapes() {
        let single = generate_random_connected(1, 0, unit(), 0).unwrap();
        assert_eq!((single.num_vertices(), single.num_edges()), (1, 0));
        let tree = generate_random_connected(5, 0, WeightRange::new(1, 9).unwrap(), 7).unwrap();
        assert_eq!(tree.num_edges(), 4);
        assert!(matches!(
            generate_random_connected(5, 20, unit(), 0),
            Err(Error::TooManyEdges { requested: 20, available: 6 })
        ));
        let complete = generate_random_connected(6, 10, unit(), 3).unwrap();
        assert_eq!(complete.num_edges(), 15);
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = generate_grid(3, 3, unit(), 0).unwrap();
        let sub = g.induced_subgraph(&[4, 5, 7, 8]).unwrap();
        assert_eq!(sub.num_edges(), 4);
        assert!(g.induced_subgraph(&[0, 8]).is_err());
    }
}
