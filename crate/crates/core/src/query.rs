//! Query answering by direct retrieval from the index.
//!
//! A query touches exactly the entries it returns; [`QueryEngine`] counts
//! those touches so the O(k) bound can be checked rather than assumed.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::knn::{KnnEntry, KnnIndex};
use crate::par::{self, Execution};

/// Read-only query front end over an index. `Sync`, so one engine can serve
/// many threads; the touch counter is shared.
#[derive(Debug)]
pub struct QueryEngine<'a> {
    index: &'a KnnIndex,
    touches: AtomicU64,
}

impl<'a> QueryEngine<'a> {
    pub fn new(index: &'a KnnIndex) -> Self {
        QueryEngine { index, touches: AtomicU64::new(0) }
    }

    pub fn index(&self) -> &'a KnnIndex {
        self.index
    }

    /// Entries touched since construction or the last [`reset_touches`](Self::reset_touches).
    pub fn touches(&self) -> u64 {
        self.touches.load(Ordering::Relaxed)
    }

    pub fn reset_touches(&self) {
        self.touches.store(0, Ordering::Relaxed);
    }

    fn check_vertex(&self, u: VertexId) -> Result<()> {
        if (u as usize) < self.index.num_vertices() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(u))
        }
    }

    /// The `k` nearest objects of `u`, for `1 <= k <= index.k()`.
    pub fn knn(&self, u: VertexId, k: usize) -> Result<Vec<KnnEntry>> {
        let mut out = Vec::with_capacity(k);
        self.knn_into(u, k, &mut out)?;
        Ok(out)
    }

    /// As [`knn`](Self::knn), writing into a caller-owned buffer.
    pub fn knn_into(&self, u: VertexId, k: usize, out: &mut Vec<KnnEntry>) -> Result<()> {
        self.check_vertex(u)?;
        if k == 0 {
            return Err(Error::InvalidK { k, max: self.index.k() });
        }
        if k > self.index.k() {
            return Err(Error::KTooLarge { requested: k, built: self.index.k() });
        }
        let list = self.index.list(u);
        let take = k.min(list.len());
        out.clear();
        out.extend_from_slice(&list[..take]);
        self.touches.fetch_add(take as u64, Ordering::Relaxed);
        Ok(())
    }

    /// Yields the neighbours of `u` one at a time in nondecreasing distance.
    pub fn progressive(&self, u: VertexId) -> Result<Progressive<'_>> {
        self.check_vertex(u)?;
        Ok(Progressive { entries: self.index.list(u), pos: 0, touches: &self.touches })
    }

    /// Answers a batch of queries; results follow input order.
    pub fn batch(&self, queries: &[VertexId], k: usize, exec: Execution) -> Result<Vec<Vec<KnnEntry>>> {
        par::map_slice(queries, exec, |&u| self.knn(u, k)).into_iter().collect()
    }
}

/// Progressive result stream; each `next` reads one entry.
#[derive(Debug)]
pub struct Progressive<'a> {
    entries: &'a [KnnEntry],
    pos: usize,
    touches: &'a AtomicU64,
}

impl Iterator for Progressive<'_> {
    type Item = KnnEntry;

    fn next(&mut self) -> Option<KnnEntry> {
        let e = *self.entries.get(self.pos)?;
        self.pos += 1;
        self.touches.fetch_add(1, Ordering::Relaxed);
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.entries.len() - self.pos;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Progressive<'_> {}

/// Convenience wrapper: `k` nearest objects of `u`.
pub fn knn_query(index: &KnnIndex, u: VertexId, k: usize) -> Result<Vec<KnnEntry>> {
    QueryEngine::new(index).knn(u, k)
}
