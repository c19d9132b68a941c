//! Shared workloads for the benchmarks.

use meshcloak::simulator::records_to_queries;
use meshcloak::*;

pub struct Workload {
    pub map: StreetMap,
    pub matrix: BoundedDistanceMatrix,
    /// Time-sorted stream, ids in arrival order.
    pub queries: Vec<Query>,
}

/// Synthetic map of `terminals` nodes with a P1 stream of `users` users.
pub fn workload(terminals: usize, users: usize, dt: f64, seed: u64) -> Workload {
    let mut cfg = SynthConfig::oldenburg(seed);
    cfg.terminals = terminals;
    cfg.streets = terminals * 115 / 100;
    let map = synthetic_map(&cfg).expect("synthetic map");
    let matrix = map_distance_matrix(&map, 2000.0).expect("matrix");
    let profile = SpeedProfile::p1();
    let sim_users = generate_users(&map, &profile, users, (2, 5), dt, seed).expect("users");
    let records: Vec<_> = simulate(&map, &sim_users, 11, seed)
        .expect("stream")
        .iter()
        .map(SimQuery::record)
        .collect();
    let queries = records_to_queries(&map, &records, 1.0).expect("snap");
    Workload { map, matrix, queries }
}

/// Queries issued in the window `(t - width, t]`, the waiting set a batch
/// would see at second `t` when nothing succeeds.
pub fn window(queries: &[Query], t: f64, width: f64) -> Vec<Query> {
    queries
        .iter()
        .filter(|q| q.t > t - width && q.t <= t)
        .copied()
        .collect()
}
