//! Incremental index maintenance under object insertion and deletion.
//!
//! Both operations search outward from the updated vertex over bridge
//! neighbour edges and only continue through vertices whose list actually
//! changes: a list can only change if some bridge neighbour's list changed.
//! The frontier is a binary heap keyed by distance from the updated object,
//! so a vertex is expanded once, with its exact distance.
//!
//! Lists stay equal to the (distance, object id) top-k at all times, so a
//! maintained index is identical to one rebuilt from scratch.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::bn_graph::BnGraph;
use crate::error::{Error, Result};
use crate::graph::{Distance, VertexId, INFINITY};
use crate::knn::{KnnEntry, KnnIndex};
use crate::objects::ObjectSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    Insert,
    Delete,
}

/// What an update did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateReport {
    pub operation: UpdateKind,
    pub object: VertexId,
    /// Vertices whose lists changed, in the order they were admitted.
    pub changed: Vec<VertexId>,
    /// Bridge-neighbour edges scanned by the frontier search.
    pub frontier_visits: u64,
    /// List entries examined while choosing replacements (deletion only).
    pub replacement_scans: u64,
}

impl UpdateReport {
    /// The number of vertices whose lists changed.
    pub fn affected_count(&self) -> usize {
        self.changed.len()
    }
}

fn check_shapes(bn: &BnGraph, index: &KnnIndex, objects: &ObjectSet, u: VertexId) -> Result<()> {
    let n = bn.num_vertices();
    if index.num_vertices() != n || objects.universe() != n {
        return Err(Error::Format("graph, index and object set disagree on vertex count".into()));
    }
    if u as usize >= n {
        return Err(Error::UnknownVertex(u));
    }
    Ok(())
}

/// Frontier search from `source` over bridge edges. A vertex is admitted the
/// first time `admit(v, d)` holds for a tentative distance `d`; only admitted
/// vertices are expanded. Returns admitted vertices in admission order with
/// their final distances.
fn frontier<F>(bn: &BnGraph, source: VertexId, mut admit: F) -> (Vec<VertexId>, HashMap<VertexId, Distance>, u64)
where
    F: FnMut(VertexId, Distance) -> bool,
{
    let mut dist: HashMap<VertexId, Distance> = HashMap::new();
    let mut admitted: HashSet<VertexId> = HashSet::new();
    let mut order = vec![source];
    let mut heap = BinaryHeap::new();
    let mut visits = 0u64;

    dist.insert(source, 0);
    admitted.insert(source);
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, w))) = heap.pop() {
        if d > dist[&w] {
            continue;
        }
        for (v, phi) in bn.bns(w) {
            visits += 1;
            let nd = d + phi;
            let cur = dist.get(&v).copied().unwrap_or(INFINITY);
            if nd >= cur {
                continue;
            }
            dist.insert(v, nd);
            if admitted.contains(&v) {
                heap.push(Reverse((nd, v)));
            } else if admit(v, nd) {
                admitted.insert(v);
                order.push(v);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    (order, dist, visits)
}

/// Adds `u` to M and updates every list that now includes it.
///
/// A vertex v is admitted when (d, u) sorts before its current k-th entry,
/// or its list is not yet full.
pub fn insert_object(bn: &BnGraph, index: &mut KnnIndex, objects: &mut ObjectSet, u: VertexId) -> Result<UpdateReport> {
    check_shapes(bn, index, objects, u)?;
    if objects.contains(u) {
        return Err(Error::AlreadyObject(u));
    }
    let k = index.k();
    let (changed, dist, visits) = {
        let idx = &*index;
        frontier(bn, u, |v, d| {
            let list = idx.list(v);
            list.len() < k || KnnEntry::new(u, d) < list[list.len() - 1]
        })
    };
    for &v in &changed {
        index.table.insert(v, KnnEntry::new(u, dist[&v]));
    }
    objects.insert(u);
    index.object_fingerprint = objects.fingerprint();
    Ok(UpdateReport {
        operation: UpdateKind::Insert,
        object: u,
        changed,
        frontier_visits: visits,
        replacement_scans: 0,
    })
}

/// Removes `u` from M and repairs every list that contained it.
///
/// Affected vertices are gathered like in [`insert_object`], admitting v
/// unless its k-th distance is below the tentative distance or u is not in
/// its list. Each affected v then needs a replacement: the nearest object in
/// the lists of its bridge neighbours that v does not already hold. An
/// affected neighbour w contributes its own replacement r(w) at distance
/// weight(v, w) + dist(w, r(w)), so replacements are settled in increasing
/// (distance, id) order, like a shortest-path search over the affected set.
pub fn delete_object(bn: &BnGraph, index: &mut KnnIndex, objects: &mut ObjectSet, u: VertexId) -> Result<UpdateReport> {
    check_shapes(bn, index, objects, u)?;
    if !objects.contains(u) {
        return Err(Error::NotObject(u));
    }
    if objects.len() < 2 {
        return Err(Error::LastObject);
    }
    let k = index.k();
    let (changed, _, visits) = {
        let idx = &*index;
        frontier(bn, u, |v, d| {
            let list = idx.list(v);
            match list.last() {
                Some(last) if last.distance < d => false,
                _ => list.iter().any(|e| e.object == u),
            }
        })
    };

    objects.remove(u);
    let slot: HashMap<VertexId, usize> = changed.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut needs = Vec::with_capacity(changed.len());
    for &v in &changed {
        needs.push(index.list(v).len() == k);
        let removed = index.table.remove_object(v, u);
        debug_assert!(removed);
    }

    let holds = |list: &[KnnEntry], o: VertexId| list.iter().any(|e| e.object == o);
    let mut best: Vec<Option<KnnEntry>> = vec![None; changed.len()];
    let mut settled = vec![false; changed.len()];
    let mut heap = BinaryHeap::new();
    let mut scans = 0u64;

    for (i, &v) in changed.iter().enumerate() {
        if !needs[i] {
            continue;
        }
        let own = index.list(v);
        for (w, phi) in bn.bns(v) {
            for e in index.list(w) {
                scans += 1;
                if holds(own, e.object) {
                    continue;
                }
                let cand = KnnEntry::new(e.object, phi + e.distance);
                if best[i].is_none_or(|b| cand < b) {
                    best[i] = Some(cand);
                }
            }
        }
        if let Some(b) = best[i] {
            heap.push(Reverse((b, i)));
        }
    }

    while let Some(Reverse((entry, i))) = heap.pop() {
        if settled[i] || best[i] != Some(entry) {
            continue;
        }
        settled[i] = true;
        for (x, phi) in bn.bns(changed[i]) {
            let Some(&j) = slot.get(&x) else { continue };
            if settled[j] || !needs[j] {
                continue;
            }
            scans += 1;
            let cand = KnnEntry::new(entry.object, phi + entry.distance);
            if best[j].is_none_or(|b| cand < b) && !holds(index.list(x), entry.object) {
                best[j] = Some(cand);
                heap.push(Reverse((cand, j)));
            }
        }
    }

    for (i, &v) in changed.iter().enumerate() {
        if let Some(r) = best[i] {
            index.table.push(v, r);
        }
    }
    index.object_fingerprint = objects.fingerprint();
    Ok(UpdateReport {
        operation: UpdateKind::Delete,
        object: u,
        changed,
        frontier_visits: visits,
        replacement_scans: scans,
    })
}
