use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use meshcloak::*;
use meshcloak_bench::{window, workload};

fn bench_matrix(c: &mut Criterion) {
    let w = workload(2000, 10, 3.0, 1);
    let mut group = c.benchmark_group("distance_matrix");
    group.sample_size(10);
    for dc_max in [500.0, 2000.0] {
        group.bench_function(format!("2000_terminals_dc{dc_max}"), |b| {
            b.iter(|| map_distance_matrix(black_box(&w.map), dc_max).unwrap())
        });
    }
    group.finish();
}

fn bench_constraint_graph(c: &mut Criterion) {
    let w = workload(6105, 5000, 5.0, 2);
    let waiting = window(&w.queries, 40.0, 5.0);
    let mut group = c.benchmark_group("constraint_graph");
    for rule in [EdgeRule::Literal, EdgeRule::Strict] {
        group.bench_function(format!("{}_queries_{rule:?}", waiting.len()), |b| {
            b.iter(|| build_constraint_graph(black_box(&waiting), &w.matrix, &w.map, rule).unwrap())
        });
    }
    group.finish();
}

fn bench_cliques(c: &mut Criterion) {
    let w = workload(6105, 5000, 5.0, 3);
    let waiting = window(&w.queries, 40.0, 5.0);
    let g = build_constraint_graph(&waiting, &w.matrix, &w.map, EdgeRule::Literal).unwrap();
    c.bench_function(&format!("tomita_{}_nodes_{}_edges", g.node_count(), g.edge_count()), |b| {
        b.iter(|| all_maximal_cliques(black_box(&g)).unwrap())
    });

    c.bench_function("incremental_build_same_graph", |b| {
        b.iter(|| {
            let mut inc = IncrementalCliques::new();
            for (i, &v) in g.nodes().iter().enumerate() {
                let earlier: Vec<u64> = g
                    .neighbors(i)
                    .iter()
                    .map(|&j| g.nodes()[j as usize])
                    .filter(|&u| u < v)
                    .collect();
                inc.add_node(v, &earlier).unwrap();
            }
            black_box(inc.clique_count())
        })
    });
}

fn bench_engine_step(c: &mut Criterion) {
    let w = workload(6105, 5000, 5.0, 4);
    let warm: Vec<Query> = w.queries.iter().filter(|q| q.t <= 39.0).copied().collect();
    let next: Vec<Query> = w.queries.iter().filter(|q| q.t > 39.0 && q.t <= 40.0).copied().collect();
    let mut group = c.benchmark_group("engine_step");
    group.sample_size(20);
    for mode in [SuccessMode::PerQuery, SuccessMode::AtomicClique] {
        let config = EngineConfig {
            success_mode: mode,
            ..Default::default()
        };
        group.bench_function(format!("second_40_{mode:?}"), |b| {
            b.iter_batched(
                || {
                    let mut e = Engine::new(&w.map, &w.matrix, config);
                    let mut i = 0;
                    for now in 1..=39 {
                        let start = i;
                        while i < warm.len() && warm[i].t <= now as f64 {
                            i += 1;
                        }
                        e.step(now, warm[start..i].to_vec()).unwrap();
                    }
                    (e, next.clone())
                },
                |(mut e, batch)| e.step(40, batch).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matrix, bench_constraint_graph, bench_cliques, bench_engine_step);
criterion_main!(benches);
