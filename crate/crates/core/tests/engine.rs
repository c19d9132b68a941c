mod common;

use std::collections::{BTreeSet, HashMap};

use common::brute_force_cliques;
use meshcloak::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQUARE: &str = "meshcloak-map v1 4 4
N 1 0 0
N 2 100 0
N 3 100 100
N 4 0 100
E 10 1 2 100 0
E 11 2 3 100 0
E 12 3 4 100 1
E 13 4 1 100 0
";

fn square() -> (StreetMap, BoundedDistanceMatrix) {
    let map = StreetMap::parse(SQUARE).unwrap();
    let m = map_distance_matrix(&map, 1000.0).unwrap();
    (map, m)
}

/// What one tick did, in a form both implementations can produce.
#[derive(Debug, PartialEq)]
struct TickView {
    succeeded: Vec<(u64, Vec<u64>)>,
    expired: BTreeSet<u64>,
    waiting: BTreeSet<u64>,
}

/// Straight-line batch loop over a plain list, with brute-force edges and
/// cliques.
fn reference_tick(
    map: &StreetMap,
    m: &BoundedDistanceMatrix,
    waiting: &mut Vec<Query>,
    now: i64,
    new: &[Query],
) -> TickView {
    let now_f = now as f64;
    let expired: BTreeSet<u64> = waiting.iter().filter(|q| q.t + q.dt < now_f).map(|q| q.id).collect();
    waiting.retain(|q| !expired.contains(&q.id));
    waiting.extend_from_slice(new);
    waiting.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.id.cmp(&b.id)));

    let n = waiting.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || waiting[i].user == waiting[j].user {
                continue;
            }
            let dij = point_distance(&waiting[i].pos, &waiting[j].pos, m, map);
            let dji = point_distance(&waiting[j].pos, &waiting[i].pos, m, map);
            adj[i][j] = matches!((dij, dji), (Some(a), Some(b)) if a <= waiting[i].dc && b <= waiting[j].dc);
        }
    }
    let mut cliques: Vec<Vec<u64>> = brute_force_cliques(n, &adj)
        .into_iter()
        .map(|c| {
            let mut ids: Vec<u64> = c.into_iter().map(|i| waiting[i].id).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    cliques.sort();

    let mut succeeded = Vec::new();
    for q in waiting.iter() {
        let mut best: Option<&Vec<u64>> = None;
        for c in cliques.iter().filter(|c| c.contains(&q.id)) {
            if best.map_or(true, |b| c.len() > b.len()) {
                best = Some(c);
            }
        }
        if let Some(c) = best {
            if c.len() >= q.k as usize {
                succeeded.push((q.id, c.clone()));
            }
        }
    }
    waiting.retain(|q| !succeeded.iter().any(|(id, _)| *id == q.id));
    TickView {
        succeeded,
        expired,
        waiting: waiting.iter().map(|q| q.id).collect(),
    }
}

fn scripted_queries(map: &StreetMap, seed: u64) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qs: Vec<Query> = (0..30)
        .map(|i| {
            let street = rng.gen_range(0..4);
            Query {
                id: 100 + i,
                user: rng.gen_range(0..20),
                k: rng.gen_range(2..=4),
                t: rng.gen_range(0..20) as f64 * 0.5 + 0.5,
                pos: map.position(street, rng.gen_range(0.0..=100.0)).unwrap(),
                dt: rng.gen_range(1..=3) as f64,
                dc: [0.0, 30.0, 80.0, 150.0, 250.0][rng.gen_range(0..5)],
            }
        })
        .collect();
    qs.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.id.cmp(&b.id)));
    qs
}

#[test]
fn thirty_scripted_queries_match_reference_loop() {
    let (map, m) = square();
    for seed in 0..20 {
        let qs = scripted_queries(&map, seed);
        let mut engine = Engine::new(&map, &m, EngineConfig::default());
        let mut reference = Vec::new();
        for now in 1..=14 {
            let new: Vec<Query> = qs
                .iter()
                .filter(|q| q.t > (now - 1) as f64 && q.t <= now as f64)
                .copied()
                .collect();
            let want = reference_tick(&map, &m, &mut reference, now, &new);
            let out = engine.step(now, new).unwrap();
            let got = TickView {
                succeeded: out.results.iter().map(|r| (r.query_id, r.members.clone())).collect(),
                expired: out.expired.iter().copied().collect(),
                waiting: engine.waiting().iter().map(|q| q.id).collect(),
            };
            assert_eq!(got, want, "seed {seed}, tick {now}");
        }
    }
}

/// Random stream with one arrival per whole second.
fn distinct_second_stream(map: &StreetMap, rng: &mut ChaCha8Rng, n: usize) -> Vec<Query> {
    let mut seconds: Vec<u32> = (1..=(2 * n as u32)).collect();
    for i in (1..seconds.len()).rev() {
        seconds.swap(i, rng.gen_range(0..=i));
    }
    let mut qs: Vec<Query> = (0..n)
        .map(|i| Query {
            id: i as u64,
            user: rng.gen_range(0..(n as u64 / 2).max(1)),
            k: rng.gen_range(2..=4),
            t: seconds[i] as f64,
            pos: map.position(rng.gen_range(0..4), rng.gen_range(0.0..=100.0)).unwrap(),
            dt: rng.gen_range(1..=6) as f64,
            dc: rng.gen_range(0.0..300.0),
        })
        .collect();
    qs.sort_by(|a, b| a.t.total_cmp(&b.t));
    qs
}

fn outcome(log: &EngineLog) -> HashMap<u64, Vec<u64>> {
    log.results.iter().map(|r| (r.query_id, r.members.clone())).collect()
}

// Only per-query success is compared. Under atomic success a clique can
// start to qualify when a member with a high k leaves; the batch loop sees
// that on its next tick, the sequential loop only on a later arrival that
// touches the clique.
#[test]
fn batch_and_sequential_agree_on_distinct_seconds() {
    let (map, m) = square();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for edge_rule in [EdgeRule::Literal, EdgeRule::Strict] {
        let config = EngineConfig {
            edge_rule,
            ..Default::default()
        };
        for _ in 0..50 {
            let qs = distinct_second_stream(&map, &mut rng, 40);
            let batch = run_batch(&map, &m, config, &qs).unwrap();
            let seq = run_sequential(&map, &m, config, &qs).unwrap();
            assert_eq!(outcome(&batch), outcome(&seq), "{edge_rule:?}");
            assert_eq!(batch.arrivals, seq.arrivals);
            let mut be = batch.expired.clone();
            let mut se = seq.expired.clone();
            be.sort_unstable();
            se.sort_unstable();
            assert_eq!(be, se);
        }
    }
}

#[test]
fn pair_in_same_second_succeeds_on_second_arrival_in_both_modes() {
    let (map, m) = square();
    let q = |id, t| Query {
        id,
        user: id,
        k: 2,
        t,
        pos: map.position(0, 50.0).unwrap(),
        dt: 2.0,
        dc: 10.0,
    };
    let stream = [q(1, 3.2), q(2, 3.7)];
    let seq = run_sequential(&map, &m, EngineConfig::default(), &stream).unwrap();
    assert!(seq.results.iter().all(|r| r.cloak_time == 3.7 && r.members == vec![1, 2]));
    let batch = run_batch(&map, &m, EngineConfig::default(), &stream).unwrap();
    assert!(batch.results.iter().all(|r| r.cloak_time == 4.0 && r.members == vec![1, 2]));
    assert_eq!(seq.results.len(), 2);
    assert_eq!(batch.results.len(), 2);
}

#[test]
fn literal_mode_can_emit_overlapping_cliques() {
    // Three queries at one spot: two with k = 2 succeed, the k = 4 one is
    // left waiting beside them.
    let (map, m) = square();
    let q = |id, k| Query {
        id,
        user: id,
        k,
        t: 1.0,
        pos: map.position(1, 20.0).unwrap(),
        dt: 1.0,
        dc: 50.0,
    };
    let mut e = Engine::new(&map, &m, EngineConfig::default());
    let out = e.step(1, vec![q(1, 2), q(2, 4), q(3, 2)]).unwrap();
    let ids: Vec<u64> = out.results.iter().map(|r| r.query_id).collect();
    assert_eq!(ids, vec![1, 3]);
    assert!(out.results.iter().all(|r| r.members == vec![1, 2, 3]));
    assert_eq!(e.state(2), Some(QueryState::Waiting));

    let mut atomic = Engine::new(
        &map,
        &m,
        EngineConfig {
            success_mode: SuccessMode::AtomicClique,
            ..Default::default()
        },
    );
    let out = atomic.step(1, vec![q(1, 2), q(2, 4), q(3, 2)]).unwrap();
    assert!(out.results.is_empty());
}

#[test]
fn log_csv_shapes() {
    let (map, m) = square();
    let qs = scripted_queries(&map, 1);
    let log = run_batch(&map, &m, EngineConfig::default(), &qs).unwrap();
    let ticks = log.ticks_csv();
    assert_eq!(ticks.lines().count(), log.ticks.len() + 1);
    assert!(ticks.lines().skip(1).all(|l| l.split(',').count() == 8));
    let results = log.results_csv();
    assert_eq!(results.lines().count(), log.results.len() + 1);
    assert_eq!(log.mesh_dump(&map).lines().count(), log.results.len());
}
