//! Static point quadtree with closed-square range search.

use crate::error::{Error, Result};

pub const DEFAULT_LEAF_CAPACITY: usize = 16;
pub const MAX_DEPTH: usize = 32;

/// Axis-aligned box, boundary inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    fn intersects(&self, other: &Rect) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    fn within(&self, other: &Rect) -> bool {
        self.min_x >= other.min_x
            && self.max_x <= other.max_x
            && self.min_y >= other.min_y
            && self.max_y <= other.max_y
    }
}

#[derive(Debug, Clone, PartialEq)]
enum NodeKind {
    /// Indices into `QuadTree::points`.
    Leaf(Vec<u32>),
    /// Child node indices: SW, SE, NW, NE.
    Inner([u32; 4]),
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    bounds: Rect,
    depth: usize,
    kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadTree {
    bounds: Rect,
    leaf_capacity: usize,
    points: Vec<(f64, f64, usize)>,
    nodes: Vec<Node>,
}

impl QuadTree {
    pub fn build(points: &[(f64, f64, usize)]) -> Result<Self> {
        Self::with_capacity(points, DEFAULT_LEAF_CAPACITY)
    }

    pub fn with_capacity(points: &[(f64, f64, usize)], leaf_capacity: usize) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyIndex)?;
        if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
            return Err(Error::Config("quadtree points must be finite".into()));
        }
        let leaf_capacity = leaf_capacity.max(1);
        let mut b = Rect {
            min_x: first.0,
            min_y: first.1,
            max_x: first.0,
            max_y: first.1,
        };
        for p in points {
            b.min_x = b.min_x.min(p.0);
            b.min_y = b.min_y.min(p.1);
            b.max_x = b.max_x.max(p.0);
            b.max_y = b.max_y.max(p.1);
        }
        let bounds = Rect {
            min_x: b.min_x - 1.0,
            min_y: b.min_y - 1.0,
            max_x: b.max_x + 1.0,
            max_y: b.max_y + 1.0,
        };

        let mut tree = QuadTree {
            bounds,
            leaf_capacity,
            points: points.to_vec(),
            nodes: Vec::new(),
        };
        let all: Vec<u32> = (0..points.len() as u32).collect();
        tree.build_node(bounds, 0, all);
        Ok(tree)
    }

    fn build_node(&mut self, bounds: Rect, depth: usize, members: Vec<u32>) -> u32 {
        let id = self.nodes.len() as u32;
        if members.len() <= self.leaf_capacity || depth >= MAX_DEPTH {
            self.nodes.push(Node {
                bounds,
                depth,
                kind: NodeKind::Leaf(members),
            });
            return id;
        }
        self.nodes.push(Node {
            bounds,
            depth,
            kind: NodeKind::Leaf(Vec::new()),
        });

        let mx = 0.5 * (bounds.min_x + bounds.max_x);
        let my = 0.5 * (bounds.min_y + bounds.max_y);
        let mut parts: [Vec<u32>; 4] = Default::default();
        for m in members {
            let (x, y, _) = self.points[m as usize];
            let q = usize::from(x >= mx) + 2 * usize::from(y >= my);
            parts[q].push(m);
        }
        let quads = [
            Rect { min_x: bounds.min_x, min_y: bounds.min_y, max_x: mx, max_y: my },
            Rect { min_x: mx, min_y: bounds.min_y, max_x: bounds.max_x, max_y: my },
            Rect { min_x: bounds.min_x, min_y: my, max_x: mx, max_y: bounds.max_y },
            Rect { min_x: mx, min_y: my, max_x: bounds.max_x, max_y: bounds.max_y },
        ];
        let mut children = [0u32; 4];
        for (q, part) in parts.into_iter().enumerate() {
            children[q] = self.build_node(quads[q], depth + 1, part);
        }
        self.nodes[id as usize].kind = NodeKind::Inner(children);
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    /// Depth of the deepest leaf; a single-leaf tree has depth 0.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Payloads of leaves in depth-first order, one `Vec` per leaf.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Leaf(m) => Some(m.iter().map(|&i| self.points[i as usize].2).collect()),
                NodeKind::Inner(_) => None,
            })
            .collect()
    }

    /// Checks the structural invariants: points inside their leaf bounds, leaf
    /// occupancy, and that every point is stored exactly once.
    pub fn check_invariants(&self) -> bool {
        let mut seen = vec![0usize; self.points.len()];
        for n in &self.nodes {
            if let NodeKind::Leaf(m) = &n.kind {
                if m.len() > self.leaf_capacity && n.depth < MAX_DEPTH {
                    return false;
                }
                for &i in m {
                    let (x, y, _) = self.points[i as usize];
                    if !n.bounds.contains(x, y) || !self.bounds.contains(x, y) {
                        return false;
                    }
                    seen[i as usize] += 1;
                }
            }
        }
        seen.iter().all(|&c| c == 1)
    }

    /// Payloads of points `p` with `|p.x - cx| <= half_width` and
    /// `|p.y - cy| <= half_width`.
    pub fn range_search(&self, center: (f64, f64), half_width: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.range_search_with(center, half_width, |id| out.push(id));
        out
    }

    pub fn range_search_with(&self, center: (f64, f64), half_width: f64, mut f: impl FnMut(usize)) {
        let (cx, cy) = center;
        let q = Rect {
            min_x: cx - half_width,
            min_y: cy - half_width,
            max_x: cx + half_width,
            max_y: cy + half_width,
        };
        if self.nodes.is_empty() || !self.bounds.intersects(&q) {
            return;
        }
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            match &node.kind {
                NodeKind::Inner(children) => {
                    for &c in children.iter().rev() {
                        if self.nodes[c as usize].bounds.intersects(&q) {
                            stack.push(c);
                        }
                    }
                }
                NodeKind::Leaf(members) => {
                    let whole = node.bounds.within(&q);
                    for &i in members {
                        let (x, y, id) = self.points[i as usize];
                        if whole || q.contains(x, y) {
                            f(id);
                        }
                    }
                }
            }
        }
    }
}
