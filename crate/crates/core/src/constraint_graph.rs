//! Constraint graph over waiting queries: an undirected edge certifies that
//! two queries cover each other under their distance constraints.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::distance::{point_distance, BoundedDistanceMatrix};
use crate::engine::Query;
use crate::error::{Error, Result};
use crate::map_model::StreetMap;
use crate::spatial_index::QuadTree;

/// How the two directed reachability checks combine into an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeRule {
    /// `d(q, q') <= dc_q` and `d(q', q) <= dc_q'`.
    #[default]
    Literal,
    /// `max(d(q, q'), d(q', q)) <= min(dc_q, dc_q')`.
    Strict,
}

impl EdgeRule {
    /// Edge decision from both directed distances; `None` means unreachable.
    pub fn admits(self, d_ab: Option<f64>, d_ba: Option<f64>, dc_a: f64, dc_b: f64) -> bool {
        let (Some(ab), Some(ba)) = (d_ab, d_ba) else {
            return false;
        };
        match self {
            EdgeRule::Literal => ab <= dc_a && ba <= dc_b,
            EdgeRule::Strict => ab.max(ba) <= dc_a.min(dc_b),
        }
    }
}

impl std::str::FromStr for EdgeRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "literal" => Ok(EdgeRule::Literal),
            "strict" => Ok(EdgeRule::Strict),
            _ => Err(format!("unknown edge rule `{s}` (expected literal|strict)")),
        }
    }
}

/// Undirected simple graph over node ids. Nodes keep their input order and
/// are addressed by that local index; adjacency lists are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintGraph {
    nodes: Vec<u64>,
    adj: Vec<Vec<u32>>,
}

impl ConstraintGraph {
    /// Graph from node ids and local-index edges. Self-loops and repeated
    /// edges are dropped.
    pub fn from_edges(nodes: Vec<u64>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); nodes.len()];
        for (a, b) in edges {
            if a != b {
                adj[a].push(b as u32);
                adj[b].push(a as u32);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        ConstraintGraph { nodes, adj }
    }

    pub fn nodes(&self) -> &[u64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&(b as u32)).is_ok()
    }

    /// Edges as `(a, b)` local indices with `a < b`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .map(move |&b| (a, b as usize))
                .filter(|&(a, b)| a < b)
        })
    }

    /// Edges as sorted node-id pairs `(min, max)`.
    pub fn id_edges(&self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = self
            .edges()
            .map(|(a, b)| {
                let (x, y) = (self.nodes[a], self.nodes[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// `<qid> <qid>` per line.
    pub fn edge_dump(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.id_edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

/// Builds the constraint graph over `queries` (node `i` is `queries[i]`).
///
/// Queries issued by the same user are never joined.
pub fn build_constraint_graph(
    queries: &[Query],
    m: &BoundedDistanceMatrix,
    map: &StreetMap,
    rule: EdgeRule,
) -> Result<ConstraintGraph> {
    if let Some(q) = queries.iter().find(|q| q.dc > m.dc_max()) {
        return Err(Error::Config(format!(
            "query {} has dc {} above the matrix dc_max {}",
            q.id,
            q.dc,
            m.dc_max()
        )));
    }
    let nodes: Vec<u64> = queries.iter().map(|q| q.id).collect();
    if queries.is_empty() {
        return Ok(ConstraintGraph::from_edges(nodes, []));
    }

    let pts: Vec<(f64, f64, usize)> = queries
        .iter()
        .enumerate()
        .map(|(i, q)| (q.pos.x, q.pos.y, i))
        .collect();
    let tree = QuadTree::build(&pts)?;

    // Directed coverage: j in covered[i] iff d(q_i, q_j) <= dc_i.
    let covered: Vec<Vec<(u32, f64)>> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut out = Vec::new();
            tree.range_search_with((q.pos.x, q.pos.y), q.dc, |j| {
                let other = &queries[j];
                if j == i || other.user == q.user {
                    return;
                }
                if let Some(d) = point_distance(&q.pos, &other.pos, m, map) {
                    if d <= q.dc {
                        out.push((j as u32, d));
                    }
                }
            });
            out.sort_unstable_by_key(|e| e.0);
            out
        })
        .collect();

    let mut edges = Vec::new();
    for (i, row) in covered.iter().enumerate() {
        for &(j, d_ij) in row {
            let j = j as usize;
            if j <= i {
                continue;
            }
            let back = &covered[j];
            if let Ok(k) = back.binary_search_by_key(&(i as u32), |e| e.0) {
                let d_ji = back[k].1;
                if rule.admits(Some(d_ij), Some(d_ji), queries[i].dc, queries[j].dc) {
                    edges.push((i, j));
                }
            }
        }
    }
    Ok(ConstraintGraph::from_edges(nodes, edges))
}
