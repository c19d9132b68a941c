//! Synthetic street maps.
//!
//! Terminals sit on a jittered square grid. Streets join grid neighbours: a
//! random spanning tree first, so the map is connected, then extra
//! neighbour links until the street count is reached. A share of the streets
//! is made one-way, each only if every terminal can still reach every other.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::map_model::{StreetMap, StreetRecord, Terminal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub terminals: usize,
    /// Target street count; capped by the number of grid neighbour pairs.
    pub streets: usize,
    /// Grid spacing in meters.
    pub spacing: f64,
    /// Position jitter as a fraction of the spacing.
    pub jitter: f64,
    /// Street length is the straight-line length times `1 + U(0, detour)`.
    pub detour: f64,
    pub oneway_fraction: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Node and street counts of the Oldenburg road map, with a spacing
    /// chosen so that the total street length is close to the real map's
    /// 1,302 km.
    pub fn oldenburg(seed: u64) -> Self {
        SynthConfig {
            terminals: 6105,
            streets: 7029,
            spacing: 170.0,
            jitter: 0.2,
            detour: 0.2,
            oneway_fraction: 0.05,
            seed,
        }
    }

    /// Fully linked grid of about `terminals` nodes, all two-way.
    pub fn grid(terminals: usize, spacing: f64, seed: u64) -> Self {
        SynthConfig {
            terminals,
            streets: usize::MAX,
            spacing,
            jitter: 0.0,
            detour: 0.0,
            oneway_fraction: 0.0,
            seed,
        }
    }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

pub fn synthetic_map(cfg: &SynthConfig) -> Result<StreetMap> {
    let n = cfg.terminals;
    if n < 2 {
        return Err(Error::Config("a synthetic map needs at least 2 terminals".into()));
    }
    if !(cfg.spacing > 0.0) || !(0.0..0.5).contains(&cfg.jitter) || cfg.detour < 0.0 {
        return Err(Error::Config("invalid synthetic map geometry".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cols = (n as f64).sqrt().ceil() as usize;

    let terminals: Vec<Terminal> = (0..n)
        .map(|i| {
            let (c, r) = ((i % cols) as f64, (i / cols) as f64);
            let jx = rng.gen_range(-cfg.jitter..=cfg.jitter);
            let jy = rng.gen_range(-cfg.jitter..=cfg.jitter);
            Terminal {
                id: i as u64 + 1,
                x: (c + jx) * cfg.spacing,
                y: (r + jy) * cfg.spacing,
            }
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        if (i + 1) % cols != 0 && i + 1 < n {
            pairs.push((i, i + 1));
        }
        if i + cols < n {
            pairs.push((i, i + cols));
        }
    }
    pairs.shuffle(&mut rng);

    let mut sets = DisjointSets((0..n).collect());
    let mut chosen = Vec::with_capacity(pairs.len());
    let mut spare = Vec::new();
    for &(a, b) in &pairs {
        if sets.union(a, b) {
            chosen.push((a, b));
        } else {
            spare.push((a, b));
        }
    }
    let target = cfg.streets.max(chosen.len());
    chosen.extend(spare.into_iter().take(target - chosen.len()));
    chosen.sort_unstable();

    let mut records: Vec<StreetRecord> = chosen
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let (ta, tb) = (&terminals[a], &terminals[b]);
            let straight = (ta.x - tb.x).hypot(ta.y - tb.y);
            let factor = if cfg.detour > 0.0 {
                1.0 + rng.gen_range(0.0..cfg.detour)
            } else {
                1.0
            };
            StreetRecord {
                id: i as u64 + 1,
                from: ta.id,
                to: tb.id,
                length: straight * factor,
                oneway: false,
            }
        })
        .collect();

    let wanted = (cfg.oneway_fraction * records.len() as f64).round() as usize;
    if wanted > 0 {
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.shuffle(&mut rng);
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &chosen {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut made = 0;
        for i in order {
            if made == wanted {
                break;
            }
            let (a, b) = chosen[i];
            // Dropping the arc b -> a keeps strong connectivity iff b still
            // reaches a without it.
            let pos = adj[b].iter().position(|&x| x == a).expect("arc present");
            adj[b].swap_remove(pos);
            if reaches(&adj, b, a) {
                records[i].oneway = true;
                made += 1;
            } else {
                adj[b].push(a);
            }
        }
    }
    StreetMap::from_parts(terminals, records)
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            return true;
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}
