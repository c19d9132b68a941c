//! Expanding meshes (streets reachable from one user within its distance
//! constraint) and cloaking meshes (their union over a cloaked clique).
//!
//! Meshes are made of whole streets. A street joins the mesh as soon as the
//! expansion stands on its tail terminal with budget left, however long the
//! street is.

use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::Serialize;

use crate::distance::HeapItem;
use crate::map_model::{MapPosition, StreetMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeshMode {
    /// FIFO expansion that marks a terminal visited when it is first
    /// enqueued. A later arrival with more budget left is ignored.
    #[default]
    Literal,
    /// Expansion ordered by remaining budget. Yields every street whose tail
    /// terminal is reachable with positive budget left.
    MaxRemaining,
}

impl std::str::FromStr for MeshMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(MeshMode::Literal),
            "max-remaining" => Ok(MeshMode::MaxRemaining),
            _ => Err(format!("unknown mesh mode `{s}` (expected literal|max-remaining)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CloakingMesh {
    /// Street indices, ascending.
    pub streets: BTreeSet<usize>,
    pub total_length: f64,
}

impl CloakingMesh {
    pub fn from_streets(map: &StreetMap, streets: BTreeSet<usize>) -> Self {
        let total_length = streets.iter().map(|&s| map.street(s).length).sum();
        CloakingMesh {
            streets,
            total_length,
        }
    }

    pub fn contains(&self, street: usize) -> bool {
        self.streets.contains(&street)
    }

    pub fn len(&self) -> usize {
        self.streets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streets.is_empty()
    }

    /// One JSON line with the street ids (not indices) and total length.
    pub fn dump_line(&self, map: &StreetMap, query_id: u64) -> String {
        #[derive(Serialize)]
        struct Record {
            query_id: u64,
            streets: Vec<u64>,
            total_length: f64,
        }
        let rec = Record {
            query_id,
            streets: self.streets.iter().map(|&s| map.street(s).id).collect(),
            total_length: self.total_length,
        };
        serde_json::to_string(&rec).expect("mesh record serializes")
    }
}

pub fn expanding_mesh(map: &StreetMap, pos: &MapPosition, dc: f64, mode: MeshMode) -> CloakingMesh {
    let streets = match mode {
        MeshMode::Literal => literal_streets(map, pos, dc),
        MeshMode::MaxRemaining => max_remaining_streets(map, pos, dc),
    };
    CloakingMesh::from_streets(map, streets)
}

fn start_terminals(map: &StreetMap, pos: &MapPosition) -> ([usize; 2], usize) {
    let s = map.street(pos.street);
    if s.oneway {
        ([s.to, s.to], 1)
    } else {
        ([s.to, s.from], 2)
    }
}

fn literal_streets(map: &StreetMap, pos: &MapPosition, dc: f64) -> BTreeSet<usize> {
    let mut mesh = BTreeSet::from([pos.street]);
    let mut visited = vec![false; map.terminals().len()];
    let mut queue = VecDeque::new();
    let (starts, n) = start_terminals(map, pos);
    for &t in &starts[..n] {
        visited[t] = true;
        queue.push_back((t, dc));
    }
    while let Some((v, budget)) = queue.pop_front() {
        if budget <= 0.0 {
            continue;
        }
        for arc in map.out_arcs(v) {
            if visited[arc.head] {
                continue;
            }
            mesh.insert(arc.street);
            visited[arc.head] = true;
            queue.push_back((arc.head, budget - map.street(arc.street).length));
        }
    }
    mesh
}

fn max_remaining_streets(map: &StreetMap, pos: &MapPosition, dc: f64) -> BTreeSet<usize> {
    let mut mesh = BTreeSet::from([pos.street]);
    // Stored negated so the min-heap from the distance module pops the
    // largest remaining budget first.
    let mut spent = vec![f64::INFINITY; map.terminals().len()];
    let mut heap = BinaryHeap::new();
    let (starts, n) = start_terminals(map, pos);
    for &t in &starts[..n] {
        spent[t] = 0.0;
        heap.push(HeapItem { dist: 0.0, node: t });
    }
    while let Some(HeapItem { dist, node }) = heap.pop() {
        if dist > spent[node] {
            continue;
        }
        if dc - dist <= 0.0 {
            break;
        }
        for arc in map.out_arcs(node) {
            mesh.insert(arc.street);
            let nd = dist + map.street(arc.street).length;
            if nd < spent[arc.head] {
                spent[arc.head] = nd;
                heap.push(HeapItem {
                    dist: nd,
                    node: arc.head,
                });
            }
        }
    }
    mesh
}

/// Union of the members' expanding meshes.
pub fn cloaking_mesh(map: &StreetMap, members: &[(MapPosition, f64)], mode: MeshMode) -> CloakingMesh {
    let mut streets = BTreeSet::new();
    for (pos, dc) in members {
        streets.extend(expanding_mesh(map, pos, *dc, mode).streets);
    }
    CloakingMesh::from_streets(map, streets)
}
