use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use knn_index::bn_graph::{build_bn_graph, BuildStats};
use knn_index::builder::{build_index_bidirectional, build_index_bottom_up, compute_partial_knn};
use knn_index::oracle::verify_index;
use knn_index::{generate_grid, sample_objects, Algorithm, Bundle, Execution, QueryEngine, VertexId, WeightRange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(side: usize) -> knn_index::RoadNetwork {
    generate_grid(side, side, WeightRange::new(1, 1000).unwrap(), 1).unwrap()
}

fn builders(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    group.sample_size(10);
    for side in [30, 60] {
        let g = grid(side);
        let m = sample_objects(&g, 0.005, 1).unwrap();
        let (order, bn) = build_bn_graph(&g);
        let partial = compute_partial_knn(&bn, &order, &m, 20).unwrap();
        let n = side * side;
        group.bench_with_input(BenchmarkId::new("bn_graph", n), &g, |b, g| b.iter(|| build_bn_graph(g)));
        group.bench_with_input(BenchmarkId::new("bidirectional", n), &n, |b, _| {
            b.iter(|| build_index_bidirectional(&bn, &order, &partial, &m, 20, &mut BuildStats::default()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bottomup", n), &n, |b, _| {
            b.iter(|| build_index_bottom_up(&bn, &order, &partial, &m, 20, &mut BuildStats::default()).unwrap())
        });
    }
    group.finish();
}

fn queries(c: &mut Criterion) {
    let g = grid(100);
    let bundle = Bundle::build(&g, sample_objects(&g, 0.005, 2).unwrap(), 20, Algorithm::Bidirectional).unwrap();
    let engine = QueryEngine::new(&bundle.index);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let qs: Vec<VertexId> = (0..4096).map(|_| rng.gen_range(0..g.num_vertices() as VertexId)).collect();

    let mut group = c.benchmark_group("query");
    for k in [1, 5, 20] {
        group.bench_with_input(BenchmarkId::new("knn", k), &k, |b, &k| {
            let mut i = 0;
            let mut out = Vec::with_capacity(k);
            b.iter(|| {
                i = (i + 1) % qs.len();
                engine.knn_into(qs[i], k, &mut out).unwrap();
                black_box(&out);
            })
        });
    }
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::new("batch", format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| black_box(engine.batch(&qs, 20, exec).unwrap()))
        });
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let g = grid(40);
    let m = sample_objects(&g, 0.05, 4).unwrap();
    let bundle = Bundle::build(&g, m.clone(), 5, Algorithm::Bidirectional).unwrap();
    let mut group = c.benchmark_group("verify_index");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| assert!(verify_index(&g, &m, 5, &bundle.index, exec).is_ok()))
        });
    }
    group.finish();
}

fn updates(c: &mut Criterion) {
    let g = grid(100);
    let bundle = Bundle::build(&g, sample_objects(&g, 0.005, 5).unwrap(), 20, Algorithm::Bidirectional).unwrap();
    let n = g.num_vertices() as VertexId;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    c.bench_function("update/insert_then_delete", |b| {
        b.iter_batched(
            || {
                let u = loop {
                    let v = rng.gen_range(0..n);
                    if !bundle.objects.contains(v) {
                        break v;
                    }
                };
                (bundle.clone(), u)
            },
            |(mut b, u)| {
                b.insert(u).unwrap();
                b.delete(u).unwrap();
                b
            },
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, builders, queries, verification, updates);
criterion_main!(benches);
