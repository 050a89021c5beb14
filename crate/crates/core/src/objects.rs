//! Candidate object sets: a subset of vertices with O(1) membership.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{RoadNetwork, VertexId};
use crate::hash::Fnv64;

const ABSENT: u32 = u32::MAX;

/// Candidate objects M, a non-empty subset of the vertices.
///
/// Membership and removal are O(1); `iter` order is unspecified, `sorted`
/// gives ascending ids.
#[derive(Debug, Clone)]
pub struct ObjectSet {
    members: Vec<VertexId>,
    // position of each vertex in `members`, or ABSENT
    slot: Vec<u32>,
    // xor of per-member hashes, so the fingerprint updates in O(1)
    digest: u64,
}

impl ObjectSet {
    pub fn from_vertices<I>(n: usize, vertices: I) -> Result<Self>
    where
        I: IntoIterator<Item = VertexId>,
    {
        let mut set = ObjectSet { members: Vec::new(), slot: vec![ABSENT; n], digest: 0 };
        for v in vertices {
            if v as usize >= n {
                return Err(Error::UnknownVertex(v));
            }
            set.insert(v);
        }
        if set.members.is_empty() {
            return Err(Error::EmptyObjectSet);
        }
        Ok(set)
    }

    /// Every vertex of a graph with `n` vertices.
    pub fn all(n: usize) -> Self {
        let digest = (0..n as VertexId).fold(0, |acc, v| acc ^ member_hash(v));
        ObjectSet { members: (0..n as VertexId).collect(), slot: (0..n as u32).collect(), digest }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.slot.len()
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.slot.get(v as usize).is_some_and(|&s| s != ABSENT)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.members.iter().copied()
    }

    pub fn sorted(&self) -> Vec<VertexId> {
        let mut v = self.members.clone();
        v.sort_unstable();
        v
    }

    /// |M| / |V|.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.universe() as f64
    }

    /// Returns `false` if `v` was already present.
    pub(crate) fn insert(&mut self, v: VertexId) -> bool {
        if self.contains(v) {
            return false;
        }
        self.slot[v as usize] = self.members.len() as u32;
        self.members.push(v);
        self.digest ^= member_hash(v);
        true
    }

    /// Returns `false` if `v` was absent.
    pub(crate) fn remove(&mut self, v: VertexId) -> bool {
        if !self.contains(v) {
            return false;
        }
        let at = self.slot[v as usize] as usize;
        self.members.swap_remove(at);
        if let Some(&moved) = self.members.get(at) {
            self.slot[moved as usize] = at as u32;
        }
        self.slot[v as usize] = ABSENT;
        self.digest ^= member_hash(v);
        true
    }

    /// Order-independent hash of the universe size and the members.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.universe() as u64);
        h.write_u64(self.len() as u64);
        h.write_u64(self.digest);
        h.finish()
    }

    /// One 1-based id per line.
    pub fn to_text(&self) -> String {
        self.sorted().iter().map(|v| format!("{}\n", v + 1)).collect()
    }
}

fn member_hash(v: VertexId) -> u64 {
    // splitmix64 finaliser
    let mut z = (v as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl PartialEq for ObjectSet {
    fn eq(&self, other: &Self) -> bool {
        self.universe() == other.universe() && self.sorted() == other.sorted()
    }
}

impl Eq for ObjectSet {}

/// Uniformly samples `max(1, round(density * n))` distinct vertices.
pub fn sample_objects(graph: &RoadNetwork, density: f64, seed: u64) -> Result<ObjectSet> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidDensity(density));
    }
    let n = graph.num_vertices();
    let count = ((density * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, n, count);
    let mut ids: Vec<VertexId> = picked.into_iter().map(|i| i as VertexId).collect();
    ids.sort_unstable();
    ObjectSet::from_vertices(n, ids)
}

/// Parses an object list: one 1-based vertex id per line, blank lines and
/// `#` comments ignored, duplicates collapsed.
pub fn load_objects(text: &str, n: usize) -> Result<ObjectSet> {
    let mut ids = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let id: u64 = body.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected a vertex id, got `{body}`"),
        })?;
        if id == 0 || id > n as u64 {
            return Err(Error::VertexOutOfRange { line, id, n });
        }
        ids.push((id - 1) as VertexId);
    }
    ObjectSet::from_vertices(n, ids)
}
