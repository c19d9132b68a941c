//! Random inputs and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use meshcloak::map_model::StreetRecord;
use meshcloak::{MapPosition, StreetMap, Terminal};
use rand::Rng;

/// Random planar map with `n` terminals. Every terminal links to two or
/// three of its nearest neighbours, a few long links are added, and about
/// `oneway` of the streets are one-way. The map need not be connected.
pub fn random_map(rng: &mut impl Rng, n: usize, side: f64, oneway: f64) -> StreetMap {
    let terminals: Vec<Terminal> = (0..n)
        .map(|i| Terminal {
            id: 10 + 3 * i as u64,
            x: rng.gen_range(0.0..side),
            y: rng.gen_range(0.0..side),
        })
        .collect();
    let dist = |a: usize, b: usize| {
        (terminals[a].x - terminals[b].x).hypot(terminals[a].y - terminals[b].y)
    };
    let mut pairs = BTreeSet::new();
    for a in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        order.sort_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)));
        for &b in order.iter().take(rng.gen_range(2..=3)) {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    for _ in 0..n / 10 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let records: Vec<StreetRecord> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            StreetRecord {
                id: 1000 + i as u64,
                from: terminals[a].id,
                to: terminals[b].id,
                length: dist(a, b) * rng.gen_range(1.0..1.3) + 0.5,
                oneway: rng.gen_bool(oneway),
            }
        })
        .collect();
    StreetMap::from_parts(terminals, records).expect("generated map is valid")
}

pub fn random_position(rng: &mut impl Rng, map: &StreetMap) -> MapPosition {
    let s = rng.gen_range(0..map.streets().len());
    let len = map.street(s).length;
    let offset = match rng.gen_range(0..10) {
        0 => 0.0,
        1 => len,
        _ => rng.gen_range(0.0..len),
    };
    map.position(s, offset).unwrap()
}

/// Array-scan Dijkstra over an explicit arc list.
pub fn dijkstra(n: usize, arcs: &[(usize, usize, f64)], source: usize) -> Vec<f64> {
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, w) in arcs {
        out[a].push((b, w));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    loop {
        let mut best = None;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && best.map_or(true, |b: usize| dist[v] < dist[b]) {
                best = Some(v);
            }
        }
        let Some(v) = best else { break };
        done[v] = true;
        for &(w, len) in &out[v] {
            if dist[v] + len < dist[w] {
                dist[w] = dist[v] + len;
            }
        }
    }
    dist
}

/// Arcs of the street graph over terminal indices.
pub fn terminal_arcs(map: &StreetMap) -> Vec<(usize, usize, f64)> {
    let mut arcs = Vec::new();
    for s in map.streets() {
        arcs.push((s.from, s.to, s.length));
        if !s.oneway {
            arcs.push((s.to, s.from, s.length));
        }
    }
    arcs
}

/// Network distance from `a` to `b`, found by splitting their streets at
/// the two positions and running Dijkstra on the enlarged graph.
pub fn virtual_node_distance(map: &StreetMap, a: &MapPosition, b: &MapPosition) -> f64 {
    let n = map.terminals().len();
    let (va, vb) = (n, n + 1);
    let mut arcs = Vec::new();
    for (i, s) in map.streets().iter().enumerate() {
        let mut stops: Vec<(f64, usize)> = vec![(0.0, s.from)];
        if a.street == i {
            stops.push((a.offset, va));
        }
        if b.street == i {
            stops.push((b.offset, vb));
        }
        stops.push((s.length, s.to));
        stops.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in stops.windows(2) {
            let len = w[1].0 - w[0].0;
            arcs.push((w[0].1, w[1].1, len));
            if !s.oneway {
                arcs.push((w[1].1, w[0].1, len));
            }
        }
    }
    dijkstra(n + 2, &arcs, va)[vb]
}

/// Every maximal clique of a small graph (n <= 20), by checking all vertex
/// subsets. A subset is a clique iff dropping its lowest vertex leaves a
/// clique that lies inside that vertex's neighbourhood.
pub fn brute_force_cliques(n: usize, adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    assert!(n <= 20);
    let nbr: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| adj[i][j]).fold(0, |m, j| m | 1 << j))
        .collect();
    let mut clique = vec![false; 1 << n];
    clique[0] = true;
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        clique[mask as usize] = clique[rest as usize] && rest & !nbr[low] == 0;
        if !clique[mask as usize] {
            continue;
        }
        let extendable = (0..n).any(|v| mask & (1 << v) == 0 && mask & !nbr[v] == 0);
        if !extendable {
            out.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    out.sort();
    out
}

pub fn random_adjacency(rng: &mut impl Rng, n: usize, p: f64) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}
