//! Mobility and query generation.
//!
//! Users move by random waypoint over shortest paths on the street graph, at
//! a constant speed, and issue a query every `interval` seconds. All
//! randomness flows from one 64-bit seed through separate ChaCha streams so
//! that, for example, changing the k range leaves positions untouched.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::shortest_path_tree;
use crate::engine::Query;
use crate::error::{Error, Result};
use crate::map_model::{MapPosition, StreetLocator, StreetMap};

const STREAM_USERS: u64 = 1;
const STREAM_K: u64 = 2;
const STREAM_POSITIONS: u64 = 3;
const STREAM_MOBILITY: u64 = 1 << 32;

/// Latest possible first query time, in seconds.
pub const MAX_FIRST_QUERY_TIME: u32 = 50;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    #[serde(default)]
    pub name: String,
    /// m/s
    pub speeds: Vec<f64>,
    pub speed_proportions: Vec<f64>,
    /// seconds
    pub intervals: Vec<u32>,
    pub interval_proportions: Vec<f64>,
    /// Candidate dt values, seconds.
    pub tolerances: Vec<f64>,
}

impl SpeedProfile {
    pub fn p1() -> Self {
        SpeedProfile {
            name: "P1".into(),
            speeds: vec![10.0, 20.0, 30.0, 50.0],
            speed_proportions: vec![0.25; 4],
            intervals: vec![5, 10, 20],
            interval_proportions: vec![0.5, 0.3, 0.2],
            tolerances: vec![3.0, 4.0, 5.0],
        }
    }

    pub fn p2() -> Self {
        SpeedProfile {
            name: "P2".into(),
            speeds: vec![10.0, 20.0, 30.0, 50.0],
            speed_proportions: vec![0.25; 4],
            intervals: vec![20, 30],
            interval_proportions: vec![0.5, 0.5],
            tolerances: vec![3.0, 5.0, 7.0, 10.0],
        }
    }

    /// `P1`, `P2`, or a path to a TOML profile.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "P1" | "p1" => Ok(Self::p1()),
            "P2" | "p2" => Ok(Self::p2()),
            path => Self::load(path),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: SpeedProfile =
            toml::from_str(text).map_err(|e| Error::Config(format!("profile: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut p = Self::from_toml(&text)?;
        if p.name.is_empty() {
            p.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn min_interval(&self) -> u32 {
        self.intervals.iter().copied().min().unwrap_or(0)
    }

    /// Largest `speed * interval` the profile can produce.
    pub fn max_dc(&self) -> f64 {
        let v = self.speeds.iter().copied().fold(0.0, f64::max);
        v * self.intervals.iter().copied().max().unwrap_or(0) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("profile {}: {m}", self.name)));
        if self.speeds.is_empty() || self.intervals.is_empty() || self.tolerances.is_empty() {
            return bad("speeds, intervals and tolerances must be non-empty");
        }
        if self.speeds.len() != self.speed_proportions.len() {
            return bad("speeds and speed_proportions differ in length");
        }
        if self.intervals.len() != self.interval_proportions.len() {
            return bad("intervals and interval_proportions differ in length");
        }
        if self.speeds.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("speeds must be positive");
        }
        if self.intervals.contains(&0) {
            return bad("intervals must be positive");
        }
        if self.tolerances.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("tolerances must be positive");
        }
        for props in [&self.speed_proportions, &self.interval_proportions] {
            if props.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad("proportions must lie in [0, 1]");
            }
            if (props.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad("proportions must sum to 1");
            }
        }
        let max_tol = self.tolerances.iter().copied().fold(0.0, f64::max);
        if max_tol > self.min_interval() as f64 {
            return bad("largest tolerance exceeds the smallest query interval");
        }
        Ok(())
    }
}

/// Cursor over a shortest path: directed pieces of streets, as
/// `(street, from_offset, to_offset)`.
#[derive(Debug, Clone, Default, PartialEq)]
struct Route {
    legs: Vec<(usize, f64, f64)>,
    next: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimUser {
    pub id: u64,
    pub speed: f64,
    pub interval: u32,
    pub k: u32,
    pub dt: f64,
    pub first_query_time: u32,
    pub pos: MapPosition,
    /// Terminal index the user is heading to, once a route is chosen.
    pub destination: Option<usize>,
    route: Route,
}

impl SimUser {
    pub fn dc(&self) -> f64 {
        self.speed * self.interval as f64
    }
}

pub fn generate_users(
    map: &StreetMap,
    profile: &SpeedProfile,
    n: usize,
    k_range: (u32, u32),
    dt: f64,
    seed: u64,
) -> Result<Vec<SimUser>> {
    profile.validate()?;
    let (lo, hi) = k_range;
    if n == 0 {
        return Err(Error::Config("at least one user is required".into()));
    }
    if lo < 2 || hi < lo {
        return Err(Error::Config(format!("invalid k range {lo}:{hi}")));
    }
    if !profile.tolerances.contains(&dt) {
        return Err(Error::Config(format!(
            "dt {dt} is not one of the profile tolerances {:?}",
            profile.tolerances
        )));
    }
    if map.streets().is_empty() {
        return Err(Error::InvalidMap("map has no streets".into()));
    }
    let speed_pick = WeightedIndex::new(&profile.speed_proportions)
        .map_err(|e| Error::Config(format!("speed proportions: {e}")))?;
    let interval_pick = WeightedIndex::new(&profile.interval_proportions)
        .map_err(|e| Error::Config(format!("interval proportions: {e}")))?;
    let street_pick = WeightedIndex::new(map.streets().iter().map(|s| s.length))
        .map_err(|e| Error::InvalidMap(format!("street lengths: {e}")))?;

    let mut attrs = rng_for(seed, STREAM_USERS);
    let mut ks = rng_for(seed, STREAM_K);
    let mut places = rng_for(seed, STREAM_POSITIONS);
    let mut users = Vec::with_capacity(n);
    for id in 0..n as u64 {
        let speed = profile.speeds[speed_pick.sample(&mut attrs)];
        let interval = profile.intervals[interval_pick.sample(&mut attrs)];
        let first_query_time = attrs.gen_range(0..=MAX_FIRST_QUERY_TIME);
        let k = ks.gen_range(lo..=hi);
        let street = street_pick.sample(&mut places);
        let offset = places.gen_range(0.0..=map.street(street).length);
        users.push(SimUser {
            id,
            speed,
            interval,
            k,
            dt,
            first_query_time,
            pos: map.position(street, offset)?,
            destination: None,
            route: Route::default(),
        });
    }
    Ok(users)
}

/// One generated query before it is tied to a query id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimQuery {
    pub t: f64,
    pub user: u64,
    pub pos: MapPosition,
    pub k: u32,
    pub dt: f64,
    pub dc: f64,
}

impl SimQuery {
    pub fn record(&self) -> StreamRecord {
        StreamRecord {
            t: self.t,
            user: self.user,
            x: self.pos.x,
            y: self.pos.y,
            k: self.k,
            dt: self.dt,
            dc: self.dc,
        }
    }
}

/// Picks a fresh destination from where the user stands and lays out the
/// route to it.
fn plan_route(map: &StreetMap, user: &mut SimUser, rng: &mut ChaCha8Rng) -> Result<()> {
    let s = map.street(user.pos.street);
    let mut seeds = vec![(s.to, s.length - user.pos.offset)];
    if !s.oneway {
        seeds.push((s.from, user.pos.offset));
    }
    let (dist, pred) = shortest_path_tree(map, &seeds);
    let here = seeds
        .iter()
        .find(|&&(_, d)| d == 0.0)
        .map(|&(t, _)| t);
    let reachable: Vec<usize> = (0..dist.len())
        .filter(|&t| dist[t].is_finite() && Some(t) != here)
        .collect();
    if reachable.is_empty() {
        let terminal = map.terminal(here.unwrap_or(s.to)).id;
        return Err(Error::Stranded {
            user: user.id,
            terminal,
        });
    }
    let dest = reachable[rng.gen_range(0..reachable.len())];

    let mut legs = Vec::new();
    let mut at = dest;
    while let Some((tail, street)) = pred[at] {
        let st = map.street(street);
        let (a, b) = if st.from == tail {
            (0.0, st.length)
        } else {
            (st.length, 0.0)
        };
        legs.push((street, a, b));
        at = tail;
    }
    // `at` is now the seed terminal the path leaves from.
    if at == s.to {
        legs.push((user.pos.street, user.pos.offset, s.length));
    } else {
        legs.push((user.pos.street, user.pos.offset, 0.0));
    }
    legs.reverse();
    user.destination = Some(dest);
    user.route = Route { legs, next: 0 };
    Ok(())
}

/// Moves the user `distance` meters along its routes, replanning on arrival.
fn advance(
    map: &StreetMap,
    user: &mut SimUser,
    mut distance: f64,
    rng: &mut ChaCha8Rng,
    mut trace: Option<&mut Vec<Leg>>,
) -> Result<()> {
    loop {
        if user.route.next >= user.route.legs.len() {
            if distance <= 0.0 {
                return Ok(());
            }
            plan_route(map, user, rng)?;
            continue;
        }
        let (street, from, to) = user.route.legs[user.route.next];
        let start = if user.pos.street == street { user.pos.offset } else { from };
        let remaining = (to - start).abs();
        if distance < remaining {
            let offset = if to >= start { start + distance } else { start - distance };
            user.pos = map.position(street, offset)?;
            if let Some(t) = trace.as_deref_mut() {
                t.push(Leg { street, from: start, to: offset });
            }
            return Ok(());
        }
        distance -= remaining;
        user.pos = map.position(street, to)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(Leg { street, from: start, to });
        }
        user.route.next += 1;
        if distance <= 0.0 {
            return Ok(());
        }
    }
}

/// A stretch of one street covered by a moving user, as offsets from the
/// street's `from` terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub street: usize,
    pub from: f64,
    pub to: f64,
}

fn run_user(
    map: &StreetMap,
    user: &SimUser,
    queries_per_user: usize,
    seed: u64,
    mut trace: Option<&mut Vec<Leg>>,
) -> Result<Vec<SimQuery>> {
    let mut user = user.clone();
    let mut rng = rng_for(seed, STREAM_MOBILITY + user.id);
    let mut out = Vec::with_capacity(queries_per_user);
    for i in 0..queries_per_user {
        if i > 0 {
            let step = user.dc();
            advance(map, &mut user, step, &mut rng, trace.as_deref_mut())?;
        }
        out.push(SimQuery {
            t: (user.first_query_time as u64 + i as u64 * user.interval as u64) as f64,
            user: user.id,
            pos: user.pos,
            k: user.k,
            dt: user.dt,
            dc: user.dc(),
        });
    }
    Ok(out)
}

/// One user's queries together with every street stretch it covered, in
/// travel order. Gives the same queries as [`simulate`].
pub fn trace_user(
    map: &StreetMap,
    user: &SimUser,
    queries_per_user: usize,
    seed: u64,
) -> Result<(Vec<SimQuery>, Vec<Leg>)> {
    let mut legs = Vec::new();
    let queries = run_user(map, user, queries_per_user, seed, Some(&mut legs))?;
    Ok((queries, legs))
}

/// Runs every user's trajectory and returns all queries sorted by
/// `(t, user)`. Users are independent and run in parallel.
pub fn simulate(
    map: &StreetMap,
    users: &[SimUser],
    queries_per_user: usize,
    seed: u64,
) -> Result<Vec<SimQuery>> {
    if queries_per_user == 0 {
        return Err(Error::Config("queries_per_user must be at least 1".into()));
    }
    let per_user: Vec<Vec<SimQuery>> = users
        .par_iter()
        .map(|u| run_user(map, u, queries_per_user, seed, None))
        .collect::<Result<_>>()?;
    let mut out: Vec<SimQuery> = per_user.into_iter().flatten().collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.user.cmp(&b.user)));
    Ok(out)
}

/// One row of a query stream file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamRecord {
    pub t: f64,
    pub user: u64,
    pub x: f64,
    pub y: f64,
    pub k: u32,
    pub dt: f64,
    pub dc: f64,
}

pub const STREAM_HEADER: &str = "t,user,x,y,k,dt,dc";

pub fn stream_to_csv(records: &[StreamRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 48);
    out.push_str(STREAM_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", r.t, r.user, r.x, r.y, r.k, r.dt, r.dc);
    }
    out
}

pub fn parse_stream(text: &str) -> Result<Vec<StreamRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == STREAM_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{STREAM_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::parse(i + 1, format!("expected 7 fields, got {}", f.len())));
        }
        let num = |j: usize| -> Result<f64> {
            f[j].parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(i + 1, format!("bad number `{}`", f[j])))
        };
        let int = |j: usize| -> Result<u64> {
            f[j].parse::<u64>()
                .map_err(|_| Error::parse(i + 1, format!("bad integer `{}`", f[j])))
        };
        out.push(StreamRecord {
            t: num(0)?,
            user: int(1)?,
            x: num(2)?,
            y: num(3)?,
            k: u32::try_from(int(4)?).map_err(|_| Error::parse(i + 1, "k out of range"))?,
            dt: num(5)?,
            dc: num(6)?,
        });
    }
    Ok(out)
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<Vec<StreamRecord>> {
    let path = path.as_ref();
    parse_stream(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Snaps records onto the map and numbers them in order, giving queries
/// ready for the engine.
pub fn records_to_queries(map: &StreetMap, records: &[StreamRecord], max_snap: f64) -> Result<Vec<Query>> {
    let locator = StreetLocator::new(map)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(Query {
                id: i as u64,
                user: r.user,
                k: r.k,
                t: r.t,
                pos: locator.snap(r.x, r.y, max_snap)?,
                dt: r.dt,
                dc: r.dc,
            })
        })
        .collect()
}

/// Metadata written next to a generated stream, naming the modelling
/// choices the experiment depends on.
pub fn stream_metadata(profile: &SpeedProfile, n_users: usize, queries_per_user: usize, k_range: (u32, u32), dt: f64, seed: u64) -> String {
    format!(
        "profile={}\nusers={n_users}\nqueries_per_user={queries_per_user}\nk_range={}:{}\ndt={dt}\nseed={seed}\nk_distribution=uniform\nmobility=random-waypoint-shortest-path\nspeed=constant-per-user\n",
        profile.name, k_range.0, k_range.1
    )
}
