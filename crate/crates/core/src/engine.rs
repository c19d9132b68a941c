//! The cloaking engine.
//!
//! [`Engine::step`] runs one batch per simulated second. It expires overdue
//! queries and admits the new ones. It then rebuilds the constraint graph,
//! lists its maximal cliques and cloaks every waiting query whose largest
//! clique is big enough. [`run_sequential`] is the baseline: it handles one
//! query at a time and keeps the cliques up to date incrementally.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::time::Instant;

use crate::cliques::{all_maximal_cliques, IncrementalCliques};
use crate::constraint_graph::{build_constraint_graph, EdgeRule};
use crate::distance::{point_distance, BoundedDistanceMatrix};
use crate::error::{Error, Result};
use crate::map_model::{MapPosition, StreetMap};
use crate::mesh::{cloaking_mesh, CloakingMesh, MeshMode};

/// A personalized continuous query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub id: u64,
    pub user: u64,
    /// Requested anonymity level.
    pub k: u32,
    /// Arrival time, seconds on the simulation clock.
    pub t: f64,
    pub pos: MapPosition,
    /// Temporal tolerance in seconds.
    pub dt: f64,
    /// Distance constraint in meters.
    pub dc: f64,
}

impl Query {
    pub fn deadline(&self) -> f64 {
        self.t + self.dt
    }

    fn validate(&self, dc_max: f64) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("query {}: k must be at least 2", self.id)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("query {}: dt must be positive", self.id)));
        }
        if !(self.dc >= 0.0) {
            return Err(Error::Config(format!("query {}: dc must be non-negative", self.id)));
        }
        if self.dc > dc_max {
            return Err(Error::Config(format!(
                "query {}: dc {} exceeds dc_max {dc_max}",
                self.id, self.dc
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryState {
    New,
    Waiting,
    Expired,
    Succeeded,
}

impl QueryState {
    pub fn can_become(self, next: QueryState) -> bool {
        use QueryState::*;
        matches!(
            (self, next),
            (New, Waiting) | (Waiting, Expired) | (Waiting, Succeeded)
        )
    }
}

/// What happens to the other members of a clique that satisfies a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuccessMode {
    /// Each waiting query is judged on its own largest clique; other members
    /// stay waiting until their own turn.
    #[default]
    PerQuery,
    /// A clique is emitted once, for all its members, when it satisfies every
    /// member's k. Cliques touching an already retired query are skipped.
    AtomicClique,
}

impl std::str::FromStr for SuccessMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "per-query" => Ok(SuccessMode::PerQuery),
            "atomic" => Ok(SuccessMode::AtomicClique),
            _ => Err(format!("unknown success mode `{s}` (expected per-query|atomic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineMode {
    #[default]
    Batch,
    Sequential,
}

impl std::str::FromStr for EngineMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "batch" => Ok(EngineMode::Batch),
            "sequential" => Ok(EngineMode::Sequential),
            _ => Err(format!("unknown mode `{s}` (expected batch|sequential)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineConfig {
    pub edge_rule: EdgeRule,
    pub mesh_mode: MeshMode,
    pub success_mode: SuccessMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloakingResult {
    pub query_id: u64,
    pub user: u64,
    pub k: u32,
    pub dt: f64,
    /// Member query ids, ascending; includes `query_id`.
    pub members: Vec<u64>,
    pub mesh: CloakingMesh,
    pub cloak_time: f64,
    pub delay: f64,
}

/// Per-tick volumes and timings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TickRecord {
    pub tick: i64,
    /// Queries admitted this tick.
    pub new: usize,
    /// Waiting after the tick.
    pub waiting: usize,
    pub succeeded: usize,
    pub expired: usize,
    pub cg_nodes: usize,
    pub cg_edges: usize,
    pub batch_ms: f64,
}

#[derive(Debug)]
pub struct StepOutcome {
    pub results: Vec<CloakingResult>,
    pub expired: Vec<u64>,
    pub rejected: Vec<(u64, Error)>,
    pub tick: TickRecord,
}

/// Batch engine state machine.
pub struct Engine<'a> {
    map: &'a StreetMap,
    matrix: &'a BoundedDistanceMatrix,
    config: EngineConfig,
    last_now: Option<i64>,
    /// Kept sorted by `(t, id)`.
    waiting: Vec<Query>,
    states: HashMap<u64, QueryState>,
}

impl<'a> Engine<'a> {
    pub fn new(map: &'a StreetMap, matrix: &'a BoundedDistanceMatrix, config: EngineConfig) -> Self {
        Engine {
            map,
            matrix,
            config,
            last_now: None,
            waiting: Vec::new(),
            states: HashMap::new(),
        }
    }

    pub fn waiting(&self) -> &[Query] {
        &self.waiting
    }

    pub fn state(&self, id: u64) -> Option<QueryState> {
        self.states.get(&id).copied()
    }

    fn transition(&mut self, id: u64, next: QueryState) {
        let cur = self.states.get(&id).copied().unwrap_or(QueryState::New);
        debug_assert!(cur.can_become(next), "illegal transition {cur:?} -> {next:?} for {id}");
        self.states.insert(id, next);
    }

    pub fn step(&mut self, now: i64, new_queries: Vec<Query>) -> Result<StepOutcome> {
        if let Some(last) = self.last_now {
            if now <= last {
                return Err(Error::NonMonotonicClock { last, now });
            }
        }
        self.last_now = Some(now);
        let now_f = now as f64;

        let mut expired = Vec::new();
        let mut kept = Vec::with_capacity(self.waiting.len());
        for q in std::mem::take(&mut self.waiting) {
            if q.deadline() < now_f {
                expired.push(q.id);
            } else {
                kept.push(q);
            }
        }
        self.waiting = kept;
        for &id in &expired {
            self.transition(id, QueryState::Expired);
        }

        let mut rejected = Vec::new();
        let mut admitted = 0usize;
        for q in new_queries {
            let check = if self.states.contains_key(&q.id) {
                Err(Error::Config(format!("query id {} reused", q.id)))
            } else if !(q.t > now_f - 1.0 && q.t <= now_f) {
                Err(Error::Config(format!(
                    "query {} has t = {} outside batch ({}, {now}]",
                    q.id,
                    q.t,
                    now - 1
                )))
            } else {
                q.validate(self.matrix.dc_max())
            };
            match check {
                Ok(()) => {
                    self.states.insert(q.id, QueryState::New);
                    self.transition(q.id, QueryState::Waiting);
                    self.waiting.push(q);
                    admitted += 1;
                }
                Err(e) => rejected.push((q.id, e)),
            }
        }
        self.waiting
            .sort_by(|a, b| a.t.total_cmp(&b.t).then(a.id.cmp(&b.id)));

        let started = Instant::now();
        let graph =
            build_constraint_graph(&self.waiting, self.matrix, self.map, self.config.edge_rule)?;
        let cliques = all_maximal_cliques(&graph)?;
        let local: HashMap<u64, usize> = self
            .waiting
            .iter()
            .enumerate()
            .map(|(i, q)| (q.id, i))
            .collect();

        let mut meshes: HashMap<usize, CloakingMesh> = HashMap::new();
        let mut results = Vec::new();
        let mut succeeded: HashSet<u64> = HashSet::new();
        let waiting = &self.waiting;
        let mut mesh_for = |ci: usize, members: &[u64]| -> CloakingMesh {
            meshes
                .entry(ci)
                .or_insert_with(|| {
                    let parts: Vec<(MapPosition, f64)> = members
                        .iter()
                        .map(|m| {
                            let q = &waiting[local[m]];
                            (q.pos, q.dc)
                        })
                        .collect();
                    cloaking_mesh(self.map, &parts, self.config.mesh_mode)
                })
                .clone()
        };

        match self.config.success_mode {
            SuccessMode::PerQuery => {
                for q in waiting {
                    if let Some((ci, members)) = cliques.largest_containing(q.id) {
                        if members.len() >= q.k as usize {
                            let mesh = mesh_for(ci, members);
                            results.push(result_for(q, members.to_vec(), mesh, now_f));
                            succeeded.insert(q.id);
                        }
                    }
                }
            }
            SuccessMode::AtomicClique => {
                for q in waiting {
                    if succeeded.contains(&q.id) {
                        continue;
                    }
                    let best = cliques
                        .containing(q.id)
                        .iter()
                        .map(|&ci| (ci, cliques.cliques()[ci].as_slice()))
                        .filter(|(_, c)| c.iter().all(|m| !succeeded.contains(m)))
                        .fold(None::<(usize, &[u64])>, |acc, cur| match acc {
                            Some(a) if a.1.len() >= cur.1.len() => Some(a),
                            _ => Some(cur),
                        });
                    let Some((ci, members)) = best else { continue };
                    let need = members
                        .iter()
                        .map(|m| waiting[local[m]].k as usize)
                        .max()
                        .unwrap_or(usize::MAX);
                    if members.len() >= need {
                        let mesh = mesh_for(ci, members);
                        for m in members {
                            let mq = &waiting[local[m]];
                            results.push(result_for(mq, members.to_vec(), mesh.clone(), now_f));
                            succeeded.insert(*m);
                        }
                    }
                }
            }
        }
        let batch_ms = started.elapsed().as_secs_f64() * 1e3;

        self.waiting.retain(|q| !succeeded.contains(&q.id));
        for r in &results {
            self.transition(r.query_id, QueryState::Succeeded);
        }

        let tick = TickRecord {
            tick: now,
            new: admitted,
            waiting: self.waiting.len(),
            succeeded: results.len(),
            expired: expired.len(),
            cg_nodes: graph.node_count(),
            cg_edges: graph.edge_count(),
            batch_ms,
        };
        Ok(StepOutcome {
            results,
            expired,
            rejected,
            tick,
        })
    }
}

fn result_for(q: &Query, members: Vec<u64>, mesh: CloakingMesh, now: f64) -> CloakingResult {
    CloakingResult {
        query_id: q.id,
        user: q.user,
        k: q.k,
        dt: q.dt,
        members,
        mesh,
        cloak_time: now,
        delay: now - q.t,
    }
}

/// Everything an engine run produced.
#[derive(Debug, Clone, Default)]
pub struct EngineLog {
    pub mode: EngineMode,
    pub ticks: Vec<TickRecord>,
    pub results: Vec<CloakingResult>,
    pub expired: Vec<u64>,
    pub rejected: Vec<u64>,
    /// Admitted queries.
    pub arrivals: usize,
    /// Queries still waiting when the log ends.
    pub final_waiting: usize,
    /// Wall-clock per query in sequential mode, in arrival order.
    pub per_query_ms: Vec<f64>,
}

impl EngineLog {
    pub fn total_processing_ms(&self) -> f64 {
        self.ticks.iter().map(|t| t.batch_ms).sum()
    }

    pub fn ticks_csv(&self) -> String {
        let mut out = String::from("tick,new,waiting,succeeded,expired,cg_nodes,cg_edges,batch_ms\n");
        for t in &self.ticks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.tick, t.new, t.waiting, t.succeeded, t.expired, t.cg_nodes, t.cg_edges, t.batch_ms
            );
        }
        out
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from("query_id,user_id,k,clique_size,delay,mesh_len\n");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.query_id,
                r.user,
                r.k,
                r.members.len(),
                r.delay,
                r.mesh.total_length
            );
        }
        out
    }

    /// Mesh records as JSON lines.
    pub fn mesh_dump(&self, map: &StreetMap) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&r.mesh.dump_line(map, r.query_id));
            out.push('\n');
        }
        out
    }
}

fn check_sorted(stream: &[Query]) -> Result<()> {
    if stream.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::Config("query stream is not sorted by time".into()));
    }
    Ok(())
}

/// Drives [`Engine::step`] once per simulated second until the stream is
/// consumed and nothing is left waiting.
pub fn run_batch(
    map: &StreetMap,
    matrix: &BoundedDistanceMatrix,
    config: EngineConfig,
    stream: &[Query],
) -> Result<EngineLog> {
    check_sorted(stream)?;
    let mut log = EngineLog {
        mode: EngineMode::Batch,
        ..Default::default()
    };
    let Some(first) = stream.first() else {
        return Ok(log);
    };
    let mut engine = Engine::new(map, matrix, config);
    let mut now = first.t.ceil() as i64;
    let mut next = 0usize;
    loop {
        let start = next;
        while next < stream.len() && stream[next].t <= now as f64 {
            next += 1;
        }
        let out = engine.step(now, stream[start..next].to_vec())?;
        log.arrivals += out.tick.new;
        log.rejected.extend(out.rejected.iter().map(|(id, _)| *id));
        log.expired.extend(out.expired);
        log.results.extend(out.results);
        log.ticks.push(out.tick);
        if next >= stream.len() && engine.waiting().is_empty() {
            break;
        }
        now += 1;
    }
    log.final_waiting = engine.waiting().len();
    Ok(log)
}

/// One-query-at-a-time baseline. Each arrival first expires overdue
/// queries. It then joins the constraint graph with edges found by checking
/// every waiting query, and the maximal cliques are updated through
/// [`IncrementalCliques`]. Only members of cliques through the new query
/// are re-examined.
pub fn run_sequential(
    map: &StreetMap,
    matrix: &BoundedDistanceMatrix,
    config: EngineConfig,
    stream: &[Query],
) -> Result<EngineLog> {
    check_sorted(stream)?;
    let mut log = EngineLog {
        mode: EngineMode::Sequential,
        ..Default::default()
    };
    let dc_max = matrix.dc_max();
    let mut inc = IncrementalCliques::new();
    let mut waiting: BTreeMap<u64, Query> = BTreeMap::new();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut tick: Option<TickRecord> = None;

    for q in stream {
        let second = q.t.ceil() as i64;
        if tick.map_or(true, |t| t.tick != second) {
            if let Some(done) = tick.take() {
                log.ticks.push(done);
            }
            tick = Some(TickRecord {
                tick: second,
                ..Default::default()
            });
        }
        let rec = tick.as_mut().expect("set above");

        let started = Instant::now();
        let overdue: Vec<u64> = waiting
            .values()
            .filter(|w| w.deadline() < q.t)
            .map(|w| w.id)
            .collect();
        for id in overdue {
            waiting.remove(&id);
            inc.remove_node(id)?;
            log.expired.push(id);
            rec.expired += 1;
        }

        let valid = if seen.contains(&q.id) {
            Err(Error::Config(format!("query id {} reused", q.id)))
        } else {
            q.validate(dc_max)
        };
        if valid.is_err() {
            log.rejected.push(q.id);
            rec.batch_ms += started.elapsed().as_secs_f64() * 1e3;
            continue;
        }
        seen.insert(q.id);
        log.arrivals += 1;
        rec.new += 1;

        let nbrs: Vec<u64> = waiting
            .values()
            .filter(|w| w.user != q.user)
            .filter(|w| {
                config.edge_rule.admits(
                    point_distance(&q.pos, &w.pos, matrix, map),
                    point_distance(&w.pos, &q.pos, matrix, map),
                    q.dc,
                    w.dc,
                )
            })
            .map(|w| w.id)
            .collect();
        inc.add_node(q.id, &nbrs)?;
        waiting.insert(q.id, *q);

        let mut affected: Vec<&Query> = inc
            .cliques_containing(q.id)
            .into_iter()
            .flatten()
            .collect::<HashSet<u64>>()
            .into_iter()
            .map(|id| &waiting[&id])
            .collect();
        affected.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.id.cmp(&b.id)));

        let mut done: Vec<u64> = Vec::new();
        let mut emitted: Vec<CloakingResult> = Vec::new();
        let mut mesh_cache: HashMap<Vec<u64>, CloakingMesh> = HashMap::new();
        let mut claimed: HashSet<u64> = HashSet::new();
        for m in affected {
            if claimed.contains(&m.id) {
                continue;
            }
            let candidates = inc.cliques_containing(m.id);
            let chosen = match config.success_mode {
                SuccessMode::PerQuery => candidates
                    .into_iter()
                    .next()
                    .filter(|c| c.len() >= m.k as usize),
                SuccessMode::AtomicClique => candidates
                    .into_iter()
                    .find(|c| c.iter().all(|id| !claimed.contains(id)))
                    .filter(|c| c.iter().all(|id| c.len() >= waiting[id].k as usize)),
            };
            let Some(members) = chosen else { continue };
            let mesh = mesh_cache
                .entry(members.clone())
                .or_insert_with(|| {
                    let parts: Vec<(MapPosition, f64)> = members
                        .iter()
                        .map(|id| (waiting[id].pos, waiting[id].dc))
                        .collect();
                    cloaking_mesh(map, &parts, config.mesh_mode)
                })
                .clone();
            let winners: Vec<&Query> = match config.success_mode {
                SuccessMode::PerQuery => vec![m],
                SuccessMode::AtomicClique => members.iter().map(|id| &waiting[id]).collect(),
            };
            for w in winners {
                emitted.push(result_for(w, members.clone(), mesh.clone(), q.t));
                claimed.insert(w.id);
                done.push(w.id);
            }
        }
        for id in &done {
            waiting.remove(id);
            inc.remove_node(*id)?;
        }
        let ms = started.elapsed().as_secs_f64() * 1e3;
        log.per_query_ms.push(ms);
        rec.batch_ms += ms;
        rec.succeeded += emitted.len();
        rec.waiting = waiting.len();
        rec.cg_nodes = inc.node_count();
        rec.cg_edges = inc.edge_count();
        log.results.extend(emitted);
    }
    if let Some(done) = tick.take() {
        log.ticks.push(done);
    }

    // Whatever is still waiting runs out of time with no further arrivals.
    if !waiting.is_empty() {
        let last = waiting
            .values()
            .map(|w| w.deadline())
            .fold(f64::NEG_INFINITY, f64::max);
        let drained: Vec<u64> = waiting.keys().copied().collect();
        log.ticks.push(TickRecord {
            tick: last.floor() as i64 + 1,
            expired: drained.len(),
            ..Default::default()
        });
        log.expired.extend(drained);
    }
    log.final_waiting = 0;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::map_distance_matrix;

    const LINE: &str = "meshcloak-map v1 2 1\nN 1 0 0\nN 2 1000 0\nE 1 1 2 1000 0\n";

    fn setup() -> (StreetMap, BoundedDistanceMatrix) {
        let map = StreetMap::parse(LINE).unwrap();
        let m = map_distance_matrix(&map, 2000.0).unwrap();
        (map, m)
    }

    fn q(map: &StreetMap, id: u64, t: f64, offset: f64) -> Query {
        Query {
            id,
            user: id,
            k: 2,
            t,
            pos: map.position(0, offset).unwrap(),
            dt: 3.0,
            dc: 100.0,
        }
    }

    #[test]
    fn transitions() {
        use QueryState::*;
        assert!(New.can_become(Waiting));
        assert!(Waiting.can_become(Expired));
        assert!(Waiting.can_become(Succeeded));
        assert!(!New.can_become(Succeeded));
        assert!(!Expired.can_become(Waiting));
        assert!(!Succeeded.can_become(Expired));
    }

    #[test]
    fn idle_tick() {
        let (map, m) = setup();
        let mut e = Engine::new(&map, &m, EngineConfig::default());
        let out = e.step(1, vec![]).unwrap();
        assert!(out.results.is_empty() && out.expired.is_empty());
        assert_eq!(out.tick.cg_nodes, 0);
    }

    #[test]
    fn clock_must_advance() {
        let (map, m) = setup();
        let mut e = Engine::new(&map, &m, EngineConfig::default());
        e.step(5, vec![]).unwrap();
        assert!(matches!(e.step(5, vec![]), Err(Error::NonMonotonicClock { .. })));
        assert!(matches!(e.step(4, vec![]), Err(Error::NonMonotonicClock { .. })));
    }

    #[test]
    fn lonely_query_expires() {
        let (map, m) = setup();
        let mut e = Engine::new(&map, &m, EngineConfig::default());
        e.step(10, vec![q(&map, 1, 10.0, 50.0)]).unwrap();
        for now in 11..=13 {
            let out = e.step(now, vec![]).unwrap();
            assert!(out.expired.is_empty(), "expired too early at {now}");
        }
        let out = e.step(14, vec![]).unwrap();
        assert_eq!(out.expired, vec![1]);
        assert_eq!(e.state(1), Some(QueryState::Expired));
    }

    #[test]
    fn pair_cloaks_together() {
        let (map, m) = setup();
        let mut e = Engine::new(&map, &m, EngineConfig::default());
        let out = e
            .step(3, vec![q(&map, 1, 2.5, 50.0), q(&map, 2, 3.0, 120.0)])
            .unwrap();
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0].members, vec![1, 2]);
        assert_eq!(out.results[1].members, vec![1, 2]);
        assert_eq!(out.results[0].mesh, out.results[1].mesh);
        assert_eq!(out.results[0].delay, 0.5);
        assert_eq!(e.state(1), Some(QueryState::Succeeded));
        assert!(e.waiting().is_empty());
    }

    #[test]
    fn bad_queries_are_rejected_not_fatal() {
        let (map, m) = setup();
        let mut e = Engine::new(&map, &m, EngineConfig::default());
        let mut too_far = q(&map, 1, 1.0, 10.0);
        too_far.dc = 5000.0;
        let mut k1 = q(&map, 2, 1.0, 10.0);
        k1.k = 1;
        let late = q(&map, 3, 7.0, 10.0);
        let out = e.step(1, vec![too_far, k1, late]).unwrap();
        assert_eq!(out.rejected.len(), 3);
        assert_eq!(out.tick.new, 0);
    }

    #[test]
    fn run_batch_empty_and_single_tick() {
        let (map, m) = setup();
        let log = run_batch(&map, &m, EngineConfig::default(), &[]).unwrap();
        assert!(log.ticks.is_empty());
        let s = [q(&map, 1, 4.0, 10.0), q(&map, 2, 4.0, 30.0)];
        let log = run_batch(&map, &m, EngineConfig::default(), &s).unwrap();
        assert_eq!(log.ticks.len(), 1);
        assert_eq!(log.results.len(), 2);
    }

    #[test]
    fn sequential_pair_succeeds_on_second_arrival() {
        let (map, m) = setup();
        let s = [q(&map, 1, 4.0, 10.0), q(&map, 2, 4.0, 30.0)];
        let log = run_sequential(&map, &m, EngineConfig::default(), &s).unwrap();
        assert_eq!(log.results.len(), 2);
        assert!(log.results.iter().all(|r| r.members == vec![1, 2]));
        assert_eq!(log.per_query_ms.len(), 2);
    }

    #[test]
    fn sequential_single_query_expires() {
        let (map, m) = setup();
        let s = [q(&map, 1, 4.0, 10.0)];
        let seq = run_sequential(&map, &m, EngineConfig::default(), &s).unwrap();
        let bat = run_batch(&map, &m, EngineConfig::default(), &s).unwrap();
        assert_eq!(seq.expired, vec![1]);
        assert_eq!(bat.expired, vec![1]);
        assert!(seq.results.is_empty() && bat.results.is_empty());
    }

    #[test]
    fn atomic_mode_retires_whole_clique() {
        let (map, m) = setup();
        let config = EngineConfig {
            success_mode: SuccessMode::AtomicClique,
            ..Default::default()
        };
        let mut a = q(&map, 1, 1.0, 10.0);
        a.k = 3;
        let s = [a, q(&map, 2, 1.0, 30.0), q(&map, 3, 1.0, 60.0)];
        let log = run_batch(&map, &m, config, &s).unwrap();
        assert_eq!(log.results.len(), 3);
        let log = run_sequential(&map, &m, config, &s).unwrap();
        assert_eq!(log.results.len(), 3);
    }

    #[test]
    fn unsorted_stream_is_rejected() {
        let (map, m) = setup();
        let s = [q(&map, 1, 4.0, 10.0), q(&map, 2, 3.0, 30.0)];
        assert!(run_batch(&map, &m, EngineConfig::default(), &s).is_err());
    }

    #[test]
    fn csv_headers() {
        let log = EngineLog::default();
        assert_eq!(
            log.ticks_csv(),
            "tick,new,waiting,succeeded,expired,cg_nodes,cg_edges,batch_ms\n"
        );
        assert_eq!(log.results_csv(), "query_id,user_id,k,clique_size,delay,mesh_len\n");
    }
}
