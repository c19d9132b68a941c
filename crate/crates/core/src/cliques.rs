//! Maximal clique listing.
//!
//! [`all_maximal_cliques`] is Bron-Kerbosch with Tomita pivoting: the pivot
//! is the vertex of `P ∪ X` with the most neighbours in `P`. It is what the
//! batch engine runs once per tick.
//!
//! [`IncrementalCliques`] maintains the maximal cliques of a graph that grows
//! and shrinks one vertex at a time. It backs the one-query-at-a-time
//! baseline.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::constraint_graph::ConstraintGraph;
use crate::error::{Error, Result};

/// Enumeration stops with [`Error::CliqueLimit`] past this many cliques.
pub const MAX_CLIQUES: usize = 1_000_000;

/// Maximal cliques in canonical order: each clique sorted by node id, the list
/// sorted lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Vec<u64>>,
    by_node: HashMap<u64, Vec<usize>>,
}

impl CliqueSet {
    pub fn from_cliques(mut cliques: Vec<Vec<u64>>) -> Self {
        for c in &mut cliques {
            c.sort_unstable();
        }
        cliques.sort_unstable();
        cliques.dedup();
        let mut by_node: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, c) in cliques.iter().enumerate() {
            for &v in c {
                by_node.entry(v).or_default().push(i);
            }
        }
        CliqueSet { cliques, by_node }
    }

    pub fn cliques(&self) -> &[Vec<u64>] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Indices of the cliques containing `node`, ascending.
    pub fn containing(&self, node: u64) -> &[usize] {
        self.by_node.get(&node).map_or(&[], Vec::as_slice)
    }

    /// Largest clique containing `node`; among equal sizes the first in
    /// canonical order.
    pub fn largest_containing(&self, node: u64) -> Option<(usize, &[u64])> {
        let mut best: Option<usize> = None;
        for &i in self.containing(node) {
            if best.map_or(true, |b| self.cliques[i].len() > self.cliques[b].len()) {
                best = Some(i);
            }
        }
        best.map(|i| (i, self.cliques[i].as_slice()))
    }
}

pub fn all_maximal_cliques(g: &ConstraintGraph) -> Result<CliqueSet> {
    all_maximal_cliques_with_limit(g, MAX_CLIQUES)
}

pub fn all_maximal_cliques_with_limit(g: &ConstraintGraph, limit: usize) -> Result<CliqueSet> {
    let n = g.node_count();
    let mut run = Tomita {
        g,
        limit,
        found: Vec::new(),
    };
    if n > 0 {
        run.top_level()?;
    }
    let ids = g.nodes();
    let cliques = run
        .found
        .into_iter()
        .map(|c| c.into_iter().map(|i| ids[i as usize]).collect())
        .collect();
    Ok(CliqueSet::from_cliques(cliques))
}

struct Tomita<'a> {
    g: &'a ConstraintGraph,
    limit: usize,
    found: Vec<Vec<u32>>,
}

impl Tomita<'_> {
    fn report(&mut self, r: &[u32]) -> Result<()> {
        if self.found.len() >= self.limit {
            return Err(Error::CliqueLimit { limit: self.limit });
        }
        self.found.push(r.to_vec());
        Ok(())
    }

    /// First level with `P = V` and `X = ∅`, using a membership array so that
    /// moving a vertex from `P` to `X` is constant time.
    fn top_level(&mut self) -> Result<()> {
        let n = self.g.node_count();
        let pivot = (0..n)
            .max_by(|&a, &b| {
                self.g
                    .neighbors(a)
                    .len()
                    .cmp(&self.g.neighbors(b).len())
                    .then(b.cmp(&a))
            })
            .expect("non-empty graph");
        let pivot_nbrs = self.g.neighbors(pivot);

        let mut in_x = vec![false; n];
        let mut r = Vec::new();
        for v in 0..n {
            if pivot_nbrs.binary_search(&(v as u32)).is_ok() {
                continue;
            }
            let (mut p, mut x) = (Vec::new(), Vec::new());
            for &w in self.g.neighbors(v) {
                if in_x[w as usize] {
                    x.push(w);
                } else {
                    p.push(w);
                }
            }
            r.push(v as u32);
            self.expand(&mut r, p, x)?;
            r.pop();
            in_x[v] = true;
        }
        Ok(())
    }

    fn expand(&mut self, r: &mut Vec<u32>, mut p: Vec<u32>, mut x: Vec<u32>) -> Result<()> {
        if p.is_empty() {
            if x.is_empty() {
                self.report(r)?;
            }
            return Ok(());
        }

        let mut pivot = u32::MAX;
        let mut best = 0usize;
        for &u in p.iter().chain(x.iter()) {
            let c = intersect_count(&p, self.g.neighbors(u as usize));
            if pivot == u32::MAX || c > best || (c == best && u < pivot) {
                pivot = u;
                best = c;
            }
        }
        let pivot_nbrs = self.g.neighbors(pivot as usize);
        let candidates: Vec<u32> = p
            .iter()
            .copied()
            .filter(|v| pivot_nbrs.binary_search(v).is_err())
            .collect();

        for v in candidates {
            let nv = self.g.neighbors(v as usize);
            let np = intersect(&p, nv);
            let nx = intersect(&x, nv);
            r.push(v);
            self.expand(r, np, nx)?;
            r.pop();
            if let Ok(i) = p.binary_search(&v) {
                p.remove(i);
            }
            if let Err(i) = x.binary_search(&v) {
                x.insert(i, v);
            }
        }
        Ok(())
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    if a.len() * 8 < b.len() {
        out.extend(a.iter().copied().filter(|v| b.binary_search(v).is_ok()));
    } else if b.len() * 8 < a.len() {
        out.extend(b.iter().copied().filter(|v| a.binary_search(v).is_ok()));
    } else {
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    out
}

fn intersect_count(a: &[u32], b: &[u32]) -> usize {
    if a.len() * 8 < b.len() {
        return a.iter().filter(|v| b.binary_search(v).is_ok()).count();
    }
    if b.len() * 8 < a.len() {
        return b.iter().filter(|v| a.binary_search(v).is_ok()).count();
    }
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Dynamic graph together with its maximal cliques, updated per vertex.
#[derive(Debug, Clone, Default)]
pub struct IncrementalCliques {
    adj: HashMap<u64, BTreeSet<u64>>,
    slots: Vec<Option<BTreeSet<u64>>>,
    free: Vec<usize>,
    by_node: HashMap<u64, HashSet<usize>>,
}

impl IncrementalCliques {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: u64) -> Option<&BTreeSet<u64>> {
        self.adj.get(&v)
    }

    pub fn clique_count(&self) -> usize {
        self.slots.len() - self.free.len()
    }

    /// Adds `v` joined to every vertex in `neighbors`.
    ///
    /// The maximal cliques through `v` are `{v} ∪ K` for the maximal sets `K`
    /// among `C ∩ N(v)` over existing cliques `C`; an old clique survives
    /// unless it lies entirely inside `N(v)`.
    pub fn add_node(&mut self, v: u64, neighbors: &[u64]) -> Result<()> {
        if self.adj.contains_key(&v) {
            return Err(Error::Precondition(format!("node {v} is already present")));
        }
        let nbrs: BTreeSet<u64> = neighbors.iter().copied().collect();
        if let Some(w) = nbrs.iter().find(|w| !self.adj.contains_key(w)) {
            return Err(Error::Precondition(format!("neighbor {w} of {v} is not present")));
        }
        for &w in &nbrs {
            self.adj.get_mut(&w).expect("checked above").insert(v);
        }
        self.adj.insert(v, nbrs.clone());

        if nbrs.is_empty() {
            self.store(BTreeSet::from([v]));
            return Ok(());
        }

        let touched: BTreeSet<usize> = nbrs
            .iter()
            .filter_map(|w| self.by_node.get(w))
            .flatten()
            .copied()
            .collect();
        let mut subsumed = Vec::new();
        let mut partial: Vec<BTreeSet<u64>> = Vec::new();
        for id in touched {
            let c = self.slots[id].as_ref().expect("indexed clique is live");
            let inter: BTreeSet<u64> = c.intersection(&nbrs).copied().collect();
            if inter.len() == c.len() {
                subsumed.push(id);
            }
            partial.push(inter);
        }

        partial.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        partial.dedup();
        let mut kept: Vec<BTreeSet<u64>> = Vec::new();
        for cand in partial {
            if !kept.iter().any(|k| cand.is_subset(k)) {
                kept.push(cand);
            }
        }

        for id in subsumed {
            self.discard(id);
        }
        for mut k in kept {
            k.insert(v);
            self.store(k);
        }
        Ok(())
    }

    /// Removes `v`. Each clique `C` through `v` is replaced by `C \ {v}` when
    /// that set has no common neighbour left.
    pub fn remove_node(&mut self, v: u64) -> Result<()> {
        if !self.adj.contains_key(&v) {
            return Err(Error::Precondition(format!("node {v} is not present")));
        }
        let ids: Vec<usize> = self
            .by_node
            .get(&v)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        let mut replacements = Vec::new();
        for id in ids {
            let mut c = self.discard(id);
            c.remove(&v);
            if !c.is_empty() && !self.has_common_neighbor(&c, v) {
                replacements.push(c);
            }
        }

        let nbrs = self.adj.remove(&v).expect("checked above");
        for w in nbrs {
            if let Some(set) = self.adj.get_mut(&w) {
                set.remove(&v);
            }
        }
        self.by_node.remove(&v);
        for c in replacements {
            self.store(c);
        }
        Ok(())
    }

    /// Whether some vertex other than `excluded` is adjacent to all of `c`.
    fn has_common_neighbor(&self, c: &BTreeSet<u64>, excluded: u64) -> bool {
        let mut members: Vec<&BTreeSet<u64>> = c.iter().map(|u| &self.adj[u]).collect();
        members.sort_by_key(|s| s.len());
        let (first, rest) = members.split_first().expect("non-empty clique");
        first
            .iter()
            .filter(|&&w| w != excluded && !c.contains(&w))
            .any(|w| rest.iter().all(|s| s.contains(w)))
    }

    fn store(&mut self, c: BTreeSet<u64>) {
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.slots.push(None);
                self.slots.len() - 1
            }
        };
        for &u in &c {
            self.by_node.entry(u).or_default().insert(id);
        }
        self.slots[id] = Some(c);
    }

    fn discard(&mut self, id: usize) -> BTreeSet<u64> {
        let c = self.slots[id].take().expect("live clique");
        for u in &c {
            if let Some(s) = self.by_node.get_mut(u) {
                s.remove(&id);
            }
        }
        self.free.push(id);
        c
    }

    /// Cliques through `v`, largest first, ties in canonical order.
    pub fn cliques_containing(&self, v: u64) -> Vec<Vec<u64>> {
        let mut out: Vec<Vec<u64>> = self
            .by_node
            .get(&v)
            .into_iter()
            .flatten()
            .map(|&id| self.slots[id].as_ref().expect("live").iter().copied().collect())
            .collect();
        out.sort_by(|a: &Vec<u64>, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        out
    }

    pub fn largest_containing(&self, v: u64) -> Option<Vec<u64>> {
        self.cliques_containing(v).into_iter().next()
    }

    pub fn clique_set(&self) -> CliqueSet {
        CliqueSet::from_cliques(
            self.slots
                .iter()
                .flatten()
                .map(|c| c.iter().copied().collect())
                .collect(),
        )
    }

    /// Snapshot of the current graph with nodes in ascending id order.
    pub fn to_graph(&self) -> ConstraintGraph {
        let mut nodes: Vec<u64> = self.adj.keys().copied().collect();
        nodes.sort_unstable();
        let index: HashMap<u64, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges: Vec<(usize, usize)> = self
            .adj
            .iter()
            .flat_map(|(a, set)| set.iter().map(|b| (index[a], index[b])))
            .filter(|(a, b)| a < b)
            .collect();
        ConstraintGraph::from_edges(nodes, edges)
    }
}
