#![allow(dead_code)]

use knn_index::{generate_random_connected, sample_objects, ObjectSet, RoadNetwork, WeightRange};
use proptest::prelude::*;

pub struct Case {
    pub graph: RoadNetwork,
    pub objects: ObjectSet,
    pub k: usize,
}

impl std::fmt::Debug for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}k={} M={:?}", self.graph.to_dimacs(), self.k, self.objects.sorted())
    }
}

/// Small random connected graph: up to `max_n` vertices, a few extra edges,
/// weights from a narrow range so that distance ties are common.
pub fn graph(max_n: usize) -> impl Strategy<Value = RoadNetwork> {
    (1..=max_n, any::<u64>(), 1u32..=20, prop::bool::ANY).prop_map(|(n, seed, max_w, narrow)| {
        let available = n * (n - 1) / 2 - (n - 1);
        let extra = (seed as usize % (2 * n + 1)).min(available);
        let hi = if narrow { 3 } else { max_w };
        generate_random_connected(n, extra, WeightRange::new(1, hi).unwrap(), seed).unwrap()
    })
}

pub fn case(max_n: usize) -> impl Strategy<Value = Case> {
    (graph(max_n), 1usize..=6, 0.01f64..=1.0, any::<u64>()).prop_map(|(graph, k, density, seed)| {
        let objects = sample_objects(&graph, density, seed).unwrap();
        Case { graph, objects, k }
    })
}
