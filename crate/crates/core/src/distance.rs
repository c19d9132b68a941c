//! Bounded terminal-to-terminal distance matrix and constant-time
//! position-to-position network distance on top of it.
//!
//! For every terminal `u` the matrix holds the shortest directed distance to
//! every terminal reachable within `dc_max`. A path of length at most `dc_max`
//! never leaves the square of half-width `dc_max` around `u`, because a
//! street's length is never below the straight-line distance between its
//! ends. So each single-source search runs on the terminals returned by a
//! quadtree square query and still yields exact distances.
//!
//! Position distances combine an along-street part at each end with one
//! matrix lookup per pair of landmark terminals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map_model::{MapPosition, StreetMap};
use crate::spatial_index::QuadTree;

pub const DEFAULT_DC_MAX: f64 = 2000.0;

const MATRIX_MAGIC: &str = "meshcloak-matrix";
const MATRIX_VERSION: &str = "v1";

/// Sparse directed distances between terminals, capped at `dc_max`.
///
/// Rows are indexed by source terminal and sorted by target terminal. The
/// diagonal is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDistanceMatrix {
    dc_max: f64,
    row_start: Vec<usize>,
    targets: Vec<u32>,
    dists: Vec<f64>,
}

impl BoundedDistanceMatrix {
    fn from_rows(dc_max: f64, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let total = rows.iter().map(Vec::len).sum();
        let mut row_start = Vec::with_capacity(rows.len() + 1);
        let mut targets = Vec::with_capacity(total);
        let mut dists = Vec::with_capacity(total);
        row_start.push(0);
        for row in rows {
            for (v, d) in row {
                targets.push(v);
                dists.push(d);
            }
            row_start.push(targets.len());
        }
        BoundedDistanceMatrix {
            dc_max,
            row_start,
            targets,
            dists,
        }
    }

    pub fn dc_max(&self) -> f64 {
        self.dc_max
    }

    /// Number of stored (off-diagonal) entries.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_terminals(&self) -> usize {
        self.row_start.len() - 1
    }

    /// Distance from terminal `u` to terminal `v`, `None` when above `dc_max`
    /// or unreachable.
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        if u == v {
            return Some(0.0);
        }
        let (lo, hi) = (self.row_start[u], self.row_start[u + 1]);
        self.targets[lo..hi]
            .binary_search(&(v as u32))
            .ok()
            .map(|i| self.dists[lo + i])
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_start[u], self.row_start[u + 1]);
        self.targets[lo..hi]
            .iter()
            .zip(&self.dists[lo..hi])
            .map(|(&v, &d)| (v as usize, d))
    }

    /// All entries as `(u, v, d)` sorted by `(u, v)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_terminals()).flat_map(move |u| self.row(u).map(move |(v, d)| (u, v, d)))
    }

    pub fn to_text(&self, map: &StreetMap) -> String {
        let mut out = String::with_capacity(24 * self.len() + 64);
        let _ = writeln!(out, "{MATRIX_MAGIC} {MATRIX_VERSION} {} {}", self.dc_max, self.len());
        for (u, v, d) in self.entries() {
            let _ = writeln!(out, "{} {} {}", map.terminal(u).id, map.terminal(v).id, d);
        }
        out
    }

    pub fn save(&self, map: &StreetMap, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(map)).map_err(|e| Error::io(path, e))
    }

    /// Parses a cache file; its `dc_max` must equal `expected_dc_max`.
    pub fn parse(text: &str, map: &StreetMap, expected_dc_max: f64) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != MATRIX_MAGIC || h[1] != MATRIX_VERSION {
            return Err(Error::parse(
                1,
                format!("expected `{MATRIX_MAGIC} {MATRIX_VERSION} <dc_max> <n_entries>`"),
            ));
        }
        let dc_max: f64 = h[2]
            .parse()
            .map_err(|_| Error::parse(1, format!("bad dc_max `{}`", h[2])))?;
        let n: usize = h[3]
            .parse()
            .map_err(|_| Error::parse(1, format!("bad entry count `{}`", h[3])))?;
        if dc_max != expected_dc_max {
            return Err(Error::Config(format!(
                "matrix cache was built for dc_max {dc_max}, requested {expected_dc_max}"
            )));
        }

        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); map.terminals().len()];
        let mut count = 0usize;
        for (i, line) in lines {
            let ln = i + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(ln, "expected `<u> <v> <d>`"));
            }
            let terminal = |s: &str| -> Result<usize> {
                let id: u64 = s.parse().map_err(|_| Error::parse(ln, format!("bad id `{s}`")))?;
                map.terminal_by_id(id)
                    .ok_or_else(|| Error::parse(ln, format!("unknown terminal {id}")))
            };
            let (u, v) = (terminal(f[0])?, terminal(f[1])?);
            let d: f64 = f[2]
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad distance `{}`", f[2])))?;
            if u == v || !(d > 0.0 && d <= dc_max) {
                return Err(Error::parse(ln, "entry violates 0 < d <= dc_max off the diagonal"));
            }
            rows[u].push((v as u32, d));
            count += 1;
        }
        if count != n {
            return Err(Error::parse(0, format!("header declares {n} entries, found {count}")));
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::parse(0, "duplicate matrix entry"));
            }
        }
        Ok(Self::from_rows(dc_max, rows))
    }

    pub fn load(path: impl AsRef<Path>, map: &StreetMap, expected_dc_max: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, map, expected_dc_max)
    }
}

/// Min-heap entry for Dijkstra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HeapItem {
    pub dist: f64,
    pub node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Scratch {
    dist: Vec<f64>,
    member: Vec<u32>,
    touched: Vec<usize>,
    heap: BinaryHeap<HeapItem>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![f64::INFINITY; n],
            member: vec![u32::MAX; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }
}

/// Builds the bounded matrix with one sub-map Dijkstra per terminal.
pub fn map_distance_matrix(map: &StreetMap, dc_max: f64) -> Result<BoundedDistanceMatrix> {
    if !(dc_max > 0.0 && dc_max.is_finite()) {
        return Err(Error::Config(format!("dc_max must be positive, got {dc_max}")));
    }
    let n = map.terminals().len();
    if n == 0 {
        return Ok(BoundedDistanceMatrix::from_rows(dc_max, Vec::new()));
    }
    let pts: Vec<(f64, f64, usize)> = map
        .terminals()
        .iter()
        .enumerate()
        .map(|(i, t)| (t.x, t.y, i))
        .collect();
    let tree = QuadTree::build(&pts)?;

    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || Scratch::new(n),
            |s, u| bounded_row(map, &tree, dc_max, u, s),
        )
        .collect();
    Ok(BoundedDistanceMatrix::from_rows(dc_max, rows))
}

fn bounded_row(
    map: &StreetMap,
    tree: &QuadTree,
    dc_max: f64,
    u: usize,
    s: &mut Scratch,
) -> Vec<(u32, f64)> {
    let stamp = u as u32;
    let origin = map.terminal(u);
    tree.range_search_with((origin.x, origin.y), dc_max, |v| s.member[v] = stamp);
    s.member[u] = stamp;

    s.dist[u] = 0.0;
    s.touched.push(u);
    s.heap.push(HeapItem { dist: 0.0, node: u });
    let mut row = Vec::new();
    while let Some(HeapItem { dist, node }) = s.heap.pop() {
        if dist > s.dist[node] {
            continue;
        }
        if dist > dc_max {
            break;
        }
        if node != u {
            row.push((node as u32, dist));
        }
        for arc in map.out_arcs(node) {
            if s.member[arc.head] != stamp {
                continue;
            }
            let nd = dist + map.street(arc.street).length;
            if nd < s.dist[arc.head] {
                if s.dist[arc.head] == f64::INFINITY {
                    s.touched.push(arc.head);
                }
                s.dist[arc.head] = nd;
                s.heap.push(HeapItem {
                    dist: nd,
                    node: arc.head,
                });
            }
        }
    }
    s.heap.clear();
    for &t in &s.touched {
        s.dist[t] = f64::INFINITY;
    }
    s.touched.clear();
    row.sort_unstable_by_key(|e| e.0);
    row
}

/// Terminals a traveller at `p` can leave the street through, with the
/// along-street cost to get there.
#[inline]
pub(crate) fn exits(map: &StreetMap, p: &MapPosition) -> ([(usize, f64); 2], usize) {
    let s = map.street(p.street);
    let to = (s.to, s.length - p.offset);
    if s.oneway {
        ([to, to], 1)
    } else {
        ([(s.from, p.offset), to], 2)
    }
}

/// Terminals through which `p` can be entered, with the along-street cost
/// from there.
#[inline]
pub(crate) fn entries(map: &StreetMap, p: &MapPosition) -> ([(usize, f64); 2], usize) {
    let s = map.street(p.street);
    let from = (s.from, p.offset);
    if s.oneway {
        ([from, from], 1)
    } else {
        ([from, (s.to, s.length - p.offset)], 2)
    }
}

/// Directed shortest network distance from `a` to `b`, or `None` when no
/// combination of landmark terminals has a stored matrix entry.
///
/// The result is exact whenever the true distance is at most the matrix
/// `dc_max`; above that it is an upper bound or `None`.
pub fn point_distance(
    a: &MapPosition,
    b: &MapPosition,
    m: &BoundedDistanceMatrix,
    map: &StreetMap,
) -> Option<f64> {
    let mut best = f64::INFINITY;
    if a.street == b.street {
        if map.street(a.street).oneway {
            if b.offset >= a.offset {
                best = b.offset - a.offset;
            }
        } else {
            best = (b.offset - a.offset).abs();
        }
    }
    let (ex, n_ex) = exits(map, a);
    let (en, n_en) = entries(map, b);
    for &(u, cost_a) in &ex[..n_ex] {
        for &(w, cost_b) in &en[..n_en] {
            if let Some(d) = m.get(u, w) {
                let total = cost_a + d + cost_b;
                if total < best {
                    best = total;
                }
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Full single-source (multi-seed) Dijkstra over the whole map. Returns the
/// distance and predecessor arc `(tail, street)` per terminal.
pub fn shortest_path_tree(
    map: &StreetMap,
    seeds: &[(usize, f64)],
) -> (Vec<f64>, Vec<Option<(usize, usize)>>) {
    let n = map.terminals().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &(t, d) in seeds {
        if d < dist[t] {
            dist[t] = d;
            heap.push(HeapItem { dist: d, node: t });
        }
    }
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for arc in map.out_arcs(node) {
            let nd = d + map.street(arc.street).length;
            if nd < dist[arc.head] {
                dist[arc.head] = nd;
                pred[arc.head] = Some((node, arc.street));
                heap.push(HeapItem {
                    dist: nd,
                    node: arc.head,
                });
            }
        }
    }
    (dist, pred)
}
