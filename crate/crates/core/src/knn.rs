//! Per-vertex nearest-object lists.

use crate::error::{Error, Result};
use crate::graph::{Distance, VertexId};

/// Largest supported k (list lengths are stored as 16-bit counts on disk).
pub const MAX_K: usize = u16::MAX as usize;

/// One `(object, distance)` pair. Orders by distance, then object id.
///
/// Packed to 12 bytes: lists are read straight out of one large table and
/// the padding of an aligned layout would cost a quarter of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(C, packed(4))]
pub struct KnnEntry {
    pub distance: Distance,
    pub object: VertexId,
}

impl KnnEntry {
    pub fn new(object: VertexId, distance: Distance) -> Self {
        KnnEntry { distance, object }
    }
}

/// Fixed-capacity lists, one per vertex, laid out back to back with stride k
/// so that a lookup is one length read plus one contiguous slice.
#[derive(Debug, Clone)]
pub struct KnnTable {
    k: usize,
    lens: Vec<u16>,
    slots: Vec<KnnEntry>,
}

impl KnnTable {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(KnnTable {
            k,
            lens: vec![0; n],
            slots: vec![KnnEntry::new(0, 0); n * k],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_vertices(&self) -> usize {
        self.lens.len()
    }

    #[inline]
    pub fn get(&self, v: VertexId) -> &[KnnEntry] {
        let base = v as usize * self.k;
        &self.slots[base..base + self.lens[v as usize] as usize]
    }

    /// Replaces the list of `v`. `entries` must be sorted and at most k long.
    pub fn set(&mut self, v: VertexId, entries: &[KnnEntry]) {
        assert!(entries.len() <= self.k, "list longer than k");
        debug_assert!(entries.windows(2).all(|p| p[0] < p[1]));
        let base = v as usize * self.k;
        self.slots[base..base + entries.len()].copy_from_slice(entries);
        self.lens[v as usize] = entries.len() as u16;
    }

    /// Sum of list lengths.
    pub fn total_entries(&self) -> usize {
        self.lens.iter().map(|&l| l as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &[KnnEntry])> {
        (0..self.lens.len() as VertexId).map(move |v| (v, self.get(v)))
    }

    /// Inserts at the sorted position, evicting the last entry when full.
    pub(crate) fn insert(&mut self, v: VertexId, entry: KnnEntry) {
        let k = self.k;
        let base = v as usize * k;
        let len = self.lens[v as usize] as usize;
        let list = &mut self.slots[base..base + k];
        let pos = list[..len].partition_point(|e| *e < entry);
        if pos == k {
            return;
        }
        let keep = len.min(k - 1);
        list.copy_within(pos..keep, pos + 1);
        list[pos] = entry;
        self.lens[v as usize] = (keep + 1) as u16;
    }

    /// Removes `object` from the list of `v`; returns whether it was present.
    pub(crate) fn remove_object(&mut self, v: VertexId, object: VertexId) -> bool {
        let base = v as usize * self.k;
        let len = self.lens[v as usize] as usize;
        let list = &mut self.slots[base..base + len];
        match list.iter().position(|e| e.object == object) {
            Some(i) => {
                list.copy_within(i + 1.., i);
                self.lens[v as usize] -= 1;
                true
            }
            None => false,
        }
    }

    /// Appends after the current last entry (caller guarantees order).
    pub(crate) fn push(&mut self, v: VertexId, entry: KnnEntry) {
        let len = self.lens[v as usize] as usize;
        assert!(len < self.k);
        debug_assert!(len == 0 || self.get(v)[len - 1] < entry);
        self.slots[v as usize * self.k + len] = entry;
        self.lens[v as usize] += 1;
    }
}

// slots past a list's length hold stale entries and do not take part
impl PartialEq for KnnTable {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.lens == other.lens && self.iter().zip(other.iter()).all(|(a, b)| a.1 == b.1)
    }
}

impl Eq for KnnTable {}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidK { k, max: MAX_K });
    }
    Ok(())
}

/// Partial lists: for every vertex, its k nearest objects reachable through
/// strictly lower-ranked vertices only, under that restricted distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialKnn {
    pub(crate) table: KnnTable,
}

impl PartialKnn {
    pub fn from_table(table: KnnTable) -> Self {
        PartialKnn { table }
    }

    pub fn k(&self) -> usize {
        self.table.k()
    }

    pub fn get(&self, v: VertexId) -> &[KnnEntry] {
        self.table.get(v)
    }

    pub fn table(&self) -> &KnnTable {
        &self.table
    }
}

/// The kNN index: for every vertex, its min(k, |M|) nearest objects sorted by
/// (distance, object id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnIndex {
    pub(crate) table: KnnTable,
    pub(crate) object_fingerprint: u64,
}

impl KnnIndex {
    pub fn from_table(table: KnnTable, object_fingerprint: u64) -> Self {
        KnnIndex { table, object_fingerprint }
    }

    pub fn k(&self) -> usize {
        self.table.k()
    }

    pub fn num_vertices(&self) -> usize {
        self.table.num_vertices()
    }

    /// Full stored list of `v`.
    #[inline]
    pub fn list(&self, v: VertexId) -> &[KnnEntry] {
        self.table.get(v)
    }

    pub fn table(&self) -> &KnnTable {
        &self.table
    }

    /// Fingerprint of the object set the lists currently reflect.
    pub fn object_fingerprint(&self) -> u64 {
        self.object_fingerprint
    }

    pub fn total_entries(&self) -> usize {
        self.table.total_entries()
    }

    /// Mutable access for fault-injection in verification tests.
    #[doc(hidden)]
    pub fn set_list_unchecked(&mut self, v: VertexId, entries: &[KnnEntry]) {
        self.table.set(v, entries);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(o: VertexId, d: Distance) -> KnnEntry {
        KnnEntry::new(o, d)
    }

    #[test]
    fn entries_are_packed() {
        assert_eq!(std::mem::size_of::<KnnEntry>(), 12);
    }

    #[test]
    fn entries_order_by_distance_then_id() {
        assert!(e(9, 1) < e(0, 2));
        assert!(e(0, 1) < e(2, 1));
    }

    #[test]
    fn table_insert_and_remove() {
        let mut t = KnnTable::new(2, 3).unwrap();
        t.insert(1, e(5, 4));
        t.insert(1, e(2, 1));
        t.insert(1, e(7, 4));
        assert_eq!(t.get(1), &[e(2, 1), e(5, 4), e(7, 4)]);
        t.insert(1, e(3, 4));
        assert_eq!(t.get(1), &[e(2, 1), e(3, 4), e(5, 4)]);
        // larger than everything while full: ignored
        t.insert(1, e(1, 9));
        assert_eq!(t.get(1).len(), 3);
        assert!(t.remove_object(1, 3));
        assert!(!t.remove_object(1, 3));
        t.push(1, e(8, 6));
        assert_eq!(t.get(1), &[e(2, 1), e(5, 4), e(8, 6)]);
        assert!(t.get(0).is_empty());
        assert_eq!(t.total_entries(), 3);

        let mut u = KnnTable::new(2, 3).unwrap();
        u.set(1, &[e(2, 1), e(5, 4), e(8, 6)]);
        assert_eq!(t, u);
    }

    #[test]
    fn k_bounds() {
        assert!(KnnTable::new(1, 0).is_err());
        assert!(KnnTable::new(1, MAX_K + 1).is_err());
    }
}
