//! Bundles: everything needed to query and maintain an index, in one
//! little-endian binary file.
//!
//! Layout:
//!
//! ```text
//! header   magic "KNNIDX1\0" | version u32 | n u32 | m u64 | k u32 | |M| u32
//!          | flags u32 | graph fingerprint u64 | header checksum u64
//! section  tag [u8; 4] | payload length u64 | payload | checksum u64
//! ```
//!
//! Sections appear in a fixed order:
//!
//! | tag    | payload                                                   |
//! |--------|-----------------------------------------------------------|
//! | `ORDR` | vertex ids by rank, u32 × n                               |
//! | `BNGR` | per vertex: count u32, then (neighbour u32, weight u64)   |
//! | `OBJS` | object ids ascending, u32 × \|M\|                         |
//! | `STAT` | eight u64 build counters (eta = u64::MAX when unknown)     |
//! | `PKNN` | per vertex: count u16, then (object u32, distance u64)    |
//! | `KNNI` | same layout as `PKNN`                                     |
//!
//! `BNGR` lists only the higher-ranked neighbours of each vertex. Checksums
//! are FNV-1a 64 over the bytes they cover.

use std::fs;
use std::path::Path;

use crate::bn_graph::{build_bn_graph, BnGraph, BuildStats, VertexOrder};
use crate::builder::{build_index, compute_partial_knn, Algorithm};
use crate::error::{Error, Result};
use crate::graph::{Distance, RoadNetwork, VertexId};
use crate::hash::fnv1a;
use crate::knn::{check_k, KnnEntry, KnnIndex, KnnTable, PartialKnn};
use crate::maintenance::{delete_object, insert_object, UpdateReport};
use crate::objects::ObjectSet;

pub const MAGIC: [u8; 8] = *b"KNNIDX1\0";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_BYTES: u64 = 52;
const SECTION_OVERHEAD: u64 = 4 + 8 + 8;
const ENTRY_BYTES: u64 = 4 + 8;
const STAT_FIELDS: usize = 8;

const FLAG_PARTIAL_STALE: u32 = 1;
const FLAG_BOTTOM_UP: u32 = 2;

const SECTIONS: [&[u8; 4]; 6] = [b"ORDR", b"BNGR", b"OBJS", b"STAT", b"PKNN", b"KNNI"];

/// A built index together with the structures maintenance needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub graph_fingerprint: u64,
    /// Edge count of the road network.
    pub num_edges: u64,
    pub algorithm: Algorithm,
    pub order: VertexOrder,
    pub bn: BnGraph,
    pub partial: PartialKnn,
    pub index: KnnIndex,
    pub objects: ObjectSet,
    pub stats: BuildStats,
    /// Set once an update has run: partial lists are not maintained incrementally.
    pub partial_stale: bool,
}

impl Bundle {
    /// Builds the BN-Graph, the partial lists and the index from scratch.
    pub fn build(graph: &RoadNetwork, objects: ObjectSet, k: usize, algorithm: Algorithm) -> Result<Self> {
        let (order, bn) = build_bn_graph(graph);
        let mut stats = *bn.stats();
        let (partial, index) = build_index(&bn, &order, &objects, k, algorithm, &mut stats)?;
        Ok(Bundle {
            graph_fingerprint: graph.fingerprint(),
            num_edges: graph.num_edges() as u64,
            algorithm,
            order,
            bn: bn.with_stats(stats),
            partial,
            index,
            objects,
            stats,
            partial_stale: false,
        })
    }

    pub fn k(&self) -> usize {
        self.index.k()
    }

    pub fn num_vertices(&self) -> usize {
        self.order.len()
    }

    pub fn insert(&mut self, u: VertexId) -> Result<UpdateReport> {
        let report = insert_object(&self.bn, &mut self.index, &mut self.objects, u)?;
        self.partial_stale = true;
        Ok(report)
    }

    pub fn delete(&mut self, u: VertexId) -> Result<UpdateReport> {
        let report = delete_object(&self.bn, &mut self.index, &mut self.objects, u)?;
        self.partial_stale = true;
        Ok(report)
    }

    /// Recomputes the partial lists for the current object set and clears the stale flag.
    pub fn refresh_partial(&mut self) -> Result<()> {
        self.partial = compute_partial_knn(&self.bn, &self.order, &self.objects, self.k())?;
        self.partial_stale = false;
        Ok(())
    }

    /// Fails unless this bundle was built from `graph`.
    pub fn check_graph(&self, graph: &RoadNetwork) -> Result<()> {
        let found = graph.fingerprint();
        if found != self.graph_fingerprint {
            return Err(Error::FingerprintMismatch { expected: self.graph_fingerprint, found });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.num_vertices();
        let mut out = Vec::with_capacity(predicted_bundle_size(self) as usize);
        out.extend_from_slice(&MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u32(&mut out, n as u32);
        put_u64(&mut out, self.num_edges);
        put_u32(&mut out, self.k() as u32);
        put_u32(&mut out, self.objects.len() as u32);
        let mut flags = 0;
        if self.partial_stale {
            flags |= FLAG_PARTIAL_STALE;
        }
        if self.algorithm == Algorithm::BottomUp {
            flags |= FLAG_BOTTOM_UP;
        }
        put_u32(&mut out, flags);
        put_u64(&mut out, self.graph_fingerprint);
        let sum = fnv1a(&out);
        put_u64(&mut out, sum);

        let mut p = Vec::new();
        for &v in self.order.by_rank() {
            put_u32(&mut p, v);
        }
        put_section(&mut out, SECTIONS[0], &mut p);

        for v in 0..n as VertexId {
            put_u32(&mut p, self.bn.bns_higher(v).len() as u32);
            for (u, d) in self.bn.bns_higher(v) {
                put_u32(&mut p, u);
                put_u64(&mut p, d);
            }
        }
        put_section(&mut out, SECTIONS[1], &mut p);

        for v in self.objects.sorted() {
            put_u32(&mut p, v);
        }
        put_section(&mut out, SECTIONS[2], &mut p);

        for x in stat_fields(&self.stats) {
            put_u64(&mut p, x);
        }
        put_section(&mut out, SECTIONS[3], &mut p);

        put_table(&mut p, self.partial.table());
        put_section(&mut out, SECTIONS[4], &mut p);
        put_table(&mut p, self.index.table());
        put_section(&mut out, SECTIONS[5], &mut p);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
        }
        let n = r.u32()? as usize;
        let num_edges = r.u64()?;
        let k = r.u32()? as usize;
        let num_objects = r.u32()? as usize;
        let flags = r.u32()?;
        let graph_fingerprint = r.u64()?;
        let covered = fnv1a(&bytes[..r.pos]);
        if r.u64()? != covered {
            return Err(Error::Checksum { section: "header".into() });
        }
        if flags & !(FLAG_PARTIAL_STALE | FLAG_BOTTOM_UP) != 0 {
            return Err(Error::Format(format!("unknown flags {flags:#x}")));
        }
        check_k(k)?;

        let mut s = r.section(SECTIONS[0])?;
        let by_rank = (0..n).map(|_| s.u32()).collect::<Result<Vec<_>>>()?;
        s.finish()?;
        let order = VertexOrder::from_by_rank(by_rank)?;

        let mut s = r.section(SECTIONS[1])?;
        let mut higher = Vec::with_capacity(n);
        for v in 0..n {
            let count = s.u32()? as usize;
            let mut list: Vec<(VertexId, Distance)> = Vec::with_capacity(count.min(n));
            for _ in 0..count {
                let u = s.vertex(n)?;
                let d = s.u64()?;
                if order.rank(u) <= order.rank(v as VertexId) || list.last().is_some_and(|&(p, _)| p >= u) {
                    return Err(Error::Format(format!("bad bridge-neighbour list at vertex {}", v + 1)));
                }
                list.push((u, d));
            }
            higher.push(list);
        }
        s.finish()?;

        let mut s = r.section(SECTIONS[2])?;
        let mut ids = Vec::with_capacity(num_objects);
        for _ in 0..num_objects {
            let v = s.vertex(n)?;
            if ids.last().is_some_and(|&p| p >= v) {
                return Err(Error::Format("object ids not strictly ascending".into()));
            }
            ids.push(v);
        }
        s.finish()?;
        let objects = ObjectSet::from_vertices(n, ids)?;

        let mut s = r.section(SECTIONS[3])?;
        let mut f = [0u64; STAT_FIELDS];
        for x in &mut f {
            *x = s.u64()?;
        }
        s.finish()?;
        let stats = BuildStats {
            rho: f[0],
            tau: f[1],
            tau_prime: f[2],
            eta: (f[3] != u64::MAX).then_some(f[3]),
            edges_inserted: f[4],
            edges_removed: f[5],
            sssp_invocations: f[6],
            max_candidate_set: f[7],
        };

        let mut s = r.section(SECTIONS[4])?;
        let partial = PartialKnn::from_table(s.table(n, k)?);
        s.finish()?;
        let mut s = r.section(SECTIONS[5])?;
        let index = KnnIndex::from_table(s.table(n, k)?, objects.fingerprint());
        s.finish()?;
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after last section".into()));
        }

        Ok(Bundle {
            graph_fingerprint,
            num_edges,
            algorithm: if flags & FLAG_BOTTOM_UP != 0 { Algorithm::BottomUp } else { Algorithm::Bidirectional },
            order,
            bn: BnGraph::from_higher_lists(higher, graph_fingerprint, stats),
            partial,
            index,
            objects,
            stats,
            partial_stale: flags & FLAG_PARTIAL_STALE != 0,
        })
    }
}

fn stat_fields(s: &BuildStats) -> [u64; STAT_FIELDS] {
    [
        s.rho,
        s.tau,
        s.tau_prime,
        s.eta.unwrap_or(u64::MAX),
        s.edges_inserted,
        s.edges_removed,
        s.sssp_invocations,
        s.max_candidate_set,
    ]
}

fn put_u16(out: &mut Vec<u8>, x: u16) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_table(out: &mut Vec<u8>, table: &KnnTable) {
    for (_, list) in table.iter() {
        put_u16(out, list.len() as u16);
        for e in list {
            put_u32(out, e.object);
            put_u64(out, e.distance);
        }
    }
}

/// Appends a section and clears `payload` for reuse.
fn put_section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &mut Vec<u8>) {
    let start = out.len();
    out.extend_from_slice(tag);
    put_u64(out, payload.len() as u64);
    out.extend_from_slice(payload);
    let sum = fnv1a(&out[start..]);
    put_u64(out, sum);
    payload.clear();
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or(Error::Truncated)?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn vertex(&mut self, n: usize) -> Result<VertexId> {
        let v = self.u32()?;
        if v as usize >= n {
            return Err(Error::Format(format!("vertex id {v} out of range")));
        }
        Ok(v)
    }

    /// Reads one section, verifies its tag and checksum, and returns a reader
    /// over its payload.
    fn section(&mut self, tag: &[u8; 4]) -> Result<Reader<'a>> {
        let start = self.pos;
        let found = self.take(4)?;
        let len = self.u64()?;
        let len = usize::try_from(len).map_err(|_| Error::Truncated)?;
        let payload = self.take(len)?;
        let covered = fnv1a(&self.bytes[start..self.pos]);
        let sum = self.u64()?;
        let name = String::from_utf8_lossy(tag).into_owned();
        if found != tag {
            return Err(Error::Format(format!(
                "expected section {name}, found {}",
                String::from_utf8_lossy(found)
            )));
        }
        if sum != covered {
            return Err(Error::Checksum { section: name });
        }
        Ok(Reader { bytes: payload, pos: 0 })
    }

    fn table(&mut self, n: usize, k: usize) -> Result<KnnTable> {
        let mut table = KnnTable::new(n, k)?;
        let mut list = Vec::with_capacity(k);
        for v in 0..n as VertexId {
            let count = self.u16()? as usize;
            if count > k {
                return Err(Error::Format(format!("list of vertex {} longer than k", v + 1)));
            }
            list.clear();
            for _ in 0..count {
                let object = self.vertex(n)?;
                let e = KnnEntry::new(object, self.u64()?);
                if list.last().is_some_and(|p| *p >= e) {
                    return Err(Error::Format(format!("list of vertex {} is not sorted", v + 1)));
                }
                list.push(e);
            }
            table.set(v, &list);
        }
        Ok(table)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format("section payload has trailing bytes".into()));
        }
        Ok(())
    }
}

pub fn save_bundle(path: &Path, bundle: &Bundle) -> Result<()> {
    fs::write(path, bundle.to_bytes())?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<Bundle> {
    Bundle::from_bytes(&fs::read(path)?)
}

/// Loads a bundle and checks that it was built from `graph`.
pub fn load_bundle_for(path: &Path, graph: &RoadNetwork) -> Result<Bundle> {
    let bundle = load_bundle(path)?;
    bundle.check_graph(graph)?;
    Ok(bundle)
}

/// Bytes of the `KNNI` payload: 2 per vertex plus 12 per stored entry.
pub fn index_bytes(index: &KnnIndex) -> u64 {
    2 * index.num_vertices() as u64 + ENTRY_BYTES * index.total_entries() as u64
}

/// Exact file size of `bundle` once saved, from its counts alone.
pub fn predicted_bundle_size(bundle: &Bundle) -> u64 {
    let n = bundle.num_vertices() as u64;
    let tables = |entries: usize| 2 * n + ENTRY_BYTES * entries as u64;
    HEADER_BYTES
        + SECTIONS.len() as u64 * SECTION_OVERHEAD
        + 4 * n
        + 4 * n + ENTRY_BYTES * bundle.bn.num_edges() as u64
        + 4 * bundle.objects.len() as u64
        + 8 * STAT_FIELDS as u64
        + tables(bundle.partial.table().total_entries())
        + tables(bundle.index.total_entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, WeightRange};

    fn path_bundle() -> Bundle {
        let g = RoadNetwork::from_edges(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
        let m = ObjectSet::from_vertices(3, [0, 2]).unwrap();
        Bundle::build(&g, m, 2, Algorithm::Bidirectional).unwrap()
    }

    #[test]
    fn round_trip_path_bundle() {
        let b = path_bundle();
        let bytes = b.to_bytes();
        assert_eq!(bytes.len() as u64, predicted_bundle_size(&b));
        let back = Bundle::from_bytes(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn round_trip_keeps_flags_and_unknown_eta() {
        let g = generate_grid(4, 5, WeightRange::new(1, 9).unwrap(), 2).unwrap();
        let m = ObjectSet::from_vertices(20, [3, 7, 11]).unwrap();
        let mut b = Bundle::build(&g, m.clone(), 2, Algorithm::BottomUp).unwrap();
        assert!(b.stats.eta.is_some());
        b.insert(0).unwrap();
        let back = Bundle::from_bytes(&b.to_bytes()).unwrap();
        assert!(back.partial_stale);
        assert_eq!(back.algorithm, Algorithm::BottomUp);
        assert_eq!(back, b);

        let c = Bundle::build(&g, m, 2, Algorithm::Bidirectional).unwrap();
        assert_eq!(c.stats.eta, None);
        assert_eq!(Bundle::from_bytes(&c.to_bytes()).unwrap(), c);
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let bytes = path_bundle().to_bytes();
        for at in [20, HEADER_BYTES as usize + 14, bytes.len() - 20] {
            let mut bad = bytes.clone();
            bad[at] ^= 0x40;
            assert!(matches!(Bundle::from_bytes(&bad), Err(Error::Checksum { .. })), "byte {at}");
        }
    }

    #[test]
    fn truncation_magic_and_version() {
        let bytes = path_bundle().to_bytes();
        for len in [0, 7, 30, bytes.len() - 1] {
            let err = Bundle::from_bytes(&bytes[..len]).unwrap_err();
            assert!(matches!(err, Error::Truncated | Error::BadMagic), "{len}: {err}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Bundle::from_bytes(&bad), Err(Error::BadMagic)));
        let mut bad = bytes;
        bad[8] = 2;
        assert!(matches!(Bundle::from_bytes(&bad), Err(Error::VersionMismatch { found: 2, expected: 1 })));
    }

    #[test]
    fn fingerprint_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.knn");
        save_bundle(&path, &path_bundle()).unwrap();
        let a = RoadNetwork::from_edges(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
        let b = RoadNetwork::from_edges(3, [(0, 1, 1), (1, 2, 2)]).unwrap();
        assert!(load_bundle_for(&path, &a).is_ok());
        assert!(matches!(load_bundle_for(&path, &b), Err(Error::FingerprintMismatch { .. })));
    }

    #[test]
    fn index_bytes_counts_payload() {
        let b = path_bundle();
        assert_eq!(index_bytes(&b.index), 2 * 3 + 12 * 6);
    }
}
