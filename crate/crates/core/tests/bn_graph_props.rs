mod common;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use knn_index::bn_graph::{build_bn_graph, build_bn_graph_with_order, BnGraph, VertexOrder};
use knn_index::builder::compute_partial_knn;
use knn_index::oracle::{dijkstra_knn, floyd_warshall, verify_bn_graph};
use knn_index::{Distance, Execution, KnnEntry, RoadNetwork, VertexId, INFINITY};
use proptest::prelude::*;

fn check_laws(g: &RoadNetwork, bn: &BnGraph) -> Result<(), TestCaseError> {
    let n = g.num_vertices();
    prop_assert_eq!(bn.num_vertices(), n);
    let d = floyd_warshall(g);
    for (a, b, w) in bn.edges() {
        prop_assert_eq!(w, d[a as usize][b as usize], "edge {}-{}", a, b);
    }
    for s in 0..n as VertexId {
        let via_bn = knn_index::oracle::bn_graph_sssp(bn, s);
        prop_assert_eq!(&via_bn, &d[s as usize]);
    }
    prop_assert!(verify_bn_graph(g, bn, 16, 0, Execution::Sequential).is_ok());
    Ok(())
}

/// Static-degree order: fewest original neighbours first, ties by id.
fn degree_order(g: &RoadNetwork) -> VertexOrder {
    let mut v: Vec<VertexId> = (0..g.num_vertices() as VertexId).collect();
    v.sort_by_key(|&x| (g.degree(x), x));
    VertexOrder::from_by_rank(v).unwrap()
}

fn id_order(g: &RoadNetwork) -> VertexOrder {
    VertexOrder::from_by_rank((0..g.num_vertices() as VertexId).collect()).unwrap()
}

/// Shortest distances from `u` over paths whose ranks strictly decrease.
fn decreasing_rank_distances(bn: &BnGraph, order: &VertexOrder, u: VertexId) -> Vec<Distance> {
    let mut dist = vec![INFINITY; bn.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[u as usize] = 0;
    heap.push(Reverse((0, u)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (t, w) in bn.bns(v) {
            if order.rank(t) < order.rank(v) && d + w < dist[t as usize] {
                dist[t as usize] = d + w;
                heap.push(Reverse((d + w, t)));
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bn_graph_preserves_distances(g in common::graph(40)) {
        let (order, bn) = build_bn_graph(&g);
        check_laws(&g, &bn)?;
        let (order2, bn2) = build_bn_graph(&g);
        prop_assert_eq!(order, order2);
        prop_assert_eq!(bn, bn2);
    }

    #[test]
    fn other_orders_also_give_bn_graphs(g in common::graph(30)) {
        for order in [degree_order(&g), id_order(&g)] {
            let bn = build_bn_graph_with_order(&g, &order);
            check_laws(&g, &bn)?;
            for (a, b, _) in bn.edges() {
                prop_assert!(order.rank(a) < order.rank(b));
            }
        }
    }

    #[test]
    fn knn_sets_pass_through_bridge_neighbours(c in common::case(40)) {
        let (_, bn) = build_bn_graph(&c.graph);
        let d = floyd_warshall(&c.graph);
        let n = c.graph.num_vertices() as VertexId;
        let lists: Vec<Vec<KnnEntry>> = (0..n).map(|u| dijkstra_knn(&c.graph, &c.objects, c.k, u).unwrap()).collect();
        for u in 0..n {
            for e in &lists[u as usize] {
                if e.object == u {
                    continue;
                }
                let reached = bn.bns(u).any(|(w, _)| lists[w as usize].iter().any(|x| x.object == e.object));
                prop_assert!(reached, "object {} of {} not held by any bridge neighbour", e.object, u);
                let best = bn
                    .bns(u)
                    .map(|(w, _)| d[u as usize][w as usize] + d[w as usize][e.object as usize])
                    .min()
                    .unwrap();
                prop_assert_eq!(best, d[u as usize][e.object as usize]);
            }
        }
    }

    #[test]
    fn partial_lists_match_decreasing_rank_search(c in common::case(40)) {
        let (order, bn) = build_bn_graph(&c.graph);
        let partial = compute_partial_knn(&bn, &order, &c.objects, c.k).unwrap();
        for u in 0..c.graph.num_vertices() as VertexId {
            let dist = decreasing_rank_distances(&bn, &order, u);
            let mut want: Vec<KnnEntry> = c
                .objects
                .iter()
                .filter(|&o| dist[o as usize] != INFINITY)
                .map(|o| KnnEntry::new(o, dist[o as usize]))
                .collect();
            want.sort();
            want.truncate(c.k);
            prop_assert_eq!(partial.get(u), &want[..]);

            // every entry comes from u itself or a lower-ranked bridge neighbour
            for e in partial.get(u) {
                let from_lower = bn.bns_lower(u).any(|(w, _)| partial.get(w).iter().any(|x| x.object == e.object));
                prop_assert!(e.object == u || from_lower);
            }
        }
    }
}

#[test]
fn complete_graph_keeps_all_direct_shortest_edges() {
    let g = RoadNetwork::from_edges(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap();
    let (_, bn) = build_bn_graph(&g);
    assert_eq!(bn.num_edges(), 6);
}
