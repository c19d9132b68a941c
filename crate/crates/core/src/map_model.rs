//! Street maps: terminals joined by straight streets with declared lengths.
//!
//! Everything inside the crate refers to terminals and streets by their dense
//! index in the owning [`StreetMap`]. The integer ids from the map file are
//! labels only and show up again when something is written back out.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spatial_index::QuadTree;

pub type TerminalId = u64;
pub type StreetId = u64;

/// Slack allowed when checking a declared length against the straight-line
/// distance between its endpoints.
pub const LENGTH_TOLERANCE: f64 = 1e-6;

/// Default snapping radius for externally supplied coordinates.
pub const DEFAULT_MAX_SNAP: f64 = 50.0;

const MAP_MAGIC: &str = "meshcloak-map";
const MAP_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub id: TerminalId,
    pub x: f64,
    pub y: f64,
}

/// A street as stored in a loaded map; `from` and `to` are terminal indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Street {
    pub id: StreetId,
    pub from: usize,
    pub to: usize,
    pub length: f64,
    /// Traversable only from `from` to `to`.
    pub oneway: bool,
}

/// A street as declared in a file, referencing terminals by id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreetRecord {
    pub id: StreetId,
    pub from: TerminalId,
    pub to: TerminalId,
    pub length: f64,
    pub oneway: bool,
}

/// One directed traversal of a street.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub street: usize,
    pub head: usize,
}

/// Which end of a street.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    From,
    To,
}

#[derive(Debug, Clone)]
pub struct StreetMap {
    terminals: Vec<Terminal>,
    streets: Vec<Street>,
    out_arcs: Vec<Vec<Arc>>,
    terminal_index: HashMap<TerminalId, usize>,
    street_index: HashMap<StreetId, usize>,
}

impl StreetMap {
    /// Validates and indexes a map.
    pub fn from_parts(terminals: Vec<Terminal>, records: Vec<StreetRecord>) -> Result<Self> {
        let mut terminal_index = HashMap::with_capacity(terminals.len());
        for (i, t) in terminals.iter().enumerate() {
            if !(t.x.is_finite() && t.y.is_finite()) {
                return Err(Error::InvalidMap(format!(
                    "terminal {} has non-finite coordinates",
                    t.id
                )));
            }
            if terminal_index.insert(t.id, i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "terminal",
                    id: t.id,
                });
            }
        }

        let mut street_index = HashMap::with_capacity(records.len());
        let mut streets = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if street_index.insert(r.id, i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "street",
                    id: r.id,
                });
            }
            let lookup = |tid: TerminalId| {
                terminal_index.get(&tid).copied().ok_or_else(|| {
                    Error::InvalidMap(format!("street {} references missing terminal {tid}", r.id))
                })
            };
            let from = lookup(r.from)?;
            let to = lookup(r.to)?;
            if from == to {
                return Err(Error::InvalidMap(format!("street {} is a self-loop", r.id)));
            }
            if !(r.length.is_finite() && r.length > 0.0) {
                return Err(Error::InvalidMap(format!(
                    "street {} has non-positive length {}",
                    r.id, r.length
                )));
            }
            let (a, b) = (&terminals[from], &terminals[to]);
            let euclid = (a.x - b.x).hypot(a.y - b.y);
            if r.length < euclid - LENGTH_TOLERANCE {
                return Err(Error::InvalidMap(format!(
                    "street {} length {} is below the straight-line distance {euclid}",
                    r.id, r.length
                )));
            }
            streets.push(Street {
                id: r.id,
                from,
                to,
                length: r.length,
                oneway: r.oneway,
            });
        }

        let out_arcs = expand_arcs(terminals.len(), &streets);
        Ok(StreetMap {
            terminals,
            streets,
            out_arcs,
            terminal_index,
            street_index,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != MAP_MAGIC || h[1] != MAP_VERSION {
            return Err(Error::parse(
                hline,
                format!("expected `{MAP_MAGIC} {MAP_VERSION} <n_terminals> <n_streets>`"),
            ));
        }
        let n_terminals: usize = parse_field(hline, h[2], "terminal count")?;
        let n_streets: usize = parse_field(hline, h[3], "street count")?;

        let mut terminals = Vec::with_capacity(n_terminals);
        for _ in 0..n_terminals {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, "file ends before all terminals were read"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 || f[0] != "N" {
                return Err(Error::parse(ln, "expected `N <id> <x> <y>`"));
            }
            terminals.push(Terminal {
                id: parse_field(ln, f[1], "terminal id")?,
                x: parse_field(ln, f[2], "x")?,
                y: parse_field(ln, f[3], "y")?,
            });
        }

        let mut records = Vec::with_capacity(n_streets);
        for _ in 0..n_streets {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, "file ends before all streets were read"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 || f[0] != "E" {
                return Err(Error::parse(ln, "expected `E <id> <from> <to> <length> <0|1>`"));
            }
            let oneway = match f[5] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(ln, format!("bad one-way flag `{other}`"))),
            };
            records.push(StreetRecord {
                id: parse_field(ln, f[1], "street id")?,
                from: parse_field(ln, f[2], "from")?,
                to: parse_field(ln, f[3], "to")?,
                length: parse_field(ln, f[4], "length")?,
                oneway,
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln, "trailing content after declared records"));
        }

        StreetMap::from_parts(terminals, records)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(32 * (self.terminals.len() + self.streets.len()));
        let _ = writeln!(
            out,
            "{MAP_MAGIC} {MAP_VERSION} {} {}",
            self.terminals.len(),
            self.streets.len()
        );
        for t in &self.terminals {
            let _ = writeln!(out, "N {} {} {}", t.id, t.x, t.y);
        }
        for s in &self.streets {
            let _ = writeln!(
                out,
                "E {} {} {} {} {}",
                s.id,
                self.terminals[s.from].id,
                self.terminals[s.to].id,
                s.length,
                u8::from(s.oneway)
            );
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn terminals(&self) -> &[Terminal] {
        &self.terminals
    }

    pub fn streets(&self) -> &[Street] {
        &self.streets
    }

    pub fn terminal(&self, idx: usize) -> &Terminal {
        &self.terminals[idx]
    }

    pub fn street(&self, idx: usize) -> &Street {
        &self.streets[idx]
    }

    pub fn out_arcs(&self, terminal: usize) -> &[Arc] {
        &self.out_arcs[terminal]
    }

    pub fn arc_count(&self) -> usize {
        self.out_arcs.iter().map(Vec::len).sum()
    }

    pub fn terminal_by_id(&self, id: TerminalId) -> Option<usize> {
        self.terminal_index.get(&id).copied()
    }

    pub fn street_by_id(&self, id: StreetId) -> Option<usize> {
        self.street_index.get(&id).copied()
    }

    pub fn total_length(&self) -> f64 {
        self.streets.iter().map(|s| s.length).sum()
    }

    /// Tight bounding box `(min_x, min_y, max_x, max_y)`; `None` for an empty map.
    pub fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.terminals.first()?;
        Some(self.terminals.iter().fold(
            (first.x, first.y, first.x, first.y),
            |(x0, y0, x1, y1), t| (x0.min(t.x), y0.min(t.y), x1.max(t.x), y1.max(t.y)),
        ))
    }

    /// Incoming arcs per terminal, i.e. the arc set with every arc reversed.
    /// `Arc::head` holds the tail terminal of the original arc.
    pub fn reverse_arcs(&self) -> Vec<Vec<Arc>> {
        let mut rev = vec![Vec::new(); self.terminals.len()];
        for (tail, arcs) in self.out_arcs.iter().enumerate() {
            for a in arcs {
                rev[a.head].push(Arc {
                    street: a.street,
                    head: tail,
                });
            }
        }
        rev
    }

    pub fn position(&self, street: usize, offset: f64) -> Result<MapPosition> {
        let s = self
            .streets
            .get(street)
            .ok_or_else(|| Error::Precondition(format!("street index {street} out of range")))?;
        if !(0.0..=s.length).contains(&offset) {
            return Err(Error::Precondition(format!(
                "offset {offset} outside street {} of length {}",
                s.id, s.length
            )));
        }
        Ok(self.position_unchecked(street, offset))
    }

    pub(crate) fn position_unchecked(&self, street: usize, offset: f64) -> MapPosition {
        let s = &self.streets[street];
        let (a, b) = (&self.terminals[s.from], &self.terminals[s.to]);
        let f = offset / s.length;
        MapPosition {
            street,
            offset,
            x: a.x + f * (b.x - a.x),
            y: a.y + f * (b.y - a.y),
        }
    }

    /// Along-street distance from `pos` to one end of its street.
    pub fn offset_distance_to_terminal(&self, pos: &MapPosition, which: End) -> f64 {
        match which {
            End::From => pos.offset,
            End::To => self.streets[pos.street].length - pos.offset,
        }
    }

    /// Closest on-street position to `(x, y)`; ties go to the lowest street id.
    /// Scans every street; see [`StreetLocator`] for repeated lookups.
    pub fn snap_to_street(&self, x: f64, y: f64, max_snap: f64) -> Result<MapPosition> {
        self.snap_among(0..self.streets.len(), x, y, max_snap)
    }

    /// Straight-line distance from `(x, y)` to street `i` and the fraction of
    /// the way along it where the closest point lies.
    fn project(&self, i: usize, x: f64, y: f64) -> (f64, f64) {
        let s = &self.streets[i];
        let (a, b) = (&self.terminals[s.from], &self.terminals[s.to]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let frac = if len2 > 0.0 {
            (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (px, py) = (a.x + frac * dx, a.y + frac * dy);
        ((x - px).hypot(y - py), frac)
    }

    fn snap_among(
        &self,
        candidates: impl IntoIterator<Item = usize>,
        x: f64,
        y: f64,
        max_snap: f64,
    ) -> Result<MapPosition> {
        if !(max_snap > 0.0) {
            return Err(Error::Config(format!("max_snap must be positive, got {max_snap}")));
        }
        let mut best: Option<(f64, StreetId, usize, f64)> = None;
        for i in candidates {
            let (dist, frac) = self.project(i, x, y);
            let id = self.streets[i].id;
            let better = match best {
                None => true,
                Some((bd, bid, _, _)) => dist < bd || (dist == bd && id < bid),
            };
            if better {
                best = Some((dist, id, i, frac));
            }
        }
        match best {
            Some((dist, _, street, frac)) if dist <= max_snap => {
                let len = self.streets[street].length;
                Ok(self.position_unchecked(street, (frac * len).clamp(0.0, len)))
            }
            _ => Err(Error::Unsnappable { x, y, max_snap }),
        }
    }
}

/// Quadtree over street midpoints for fast snapping. Gives the same answer
/// as [`StreetMap::snap_to_street`].
pub struct StreetLocator<'a> {
    map: &'a StreetMap,
    tree: Option<QuadTree>,
    /// Largest distance from a street's midpoint to any point on it.
    reach: f64,
}

impl<'a> StreetLocator<'a> {
    pub fn new(map: &'a StreetMap) -> Result<Self> {
        let mut reach: f64 = 0.0;
        let mids: Vec<(f64, f64, usize)> = map
            .streets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (a, b) = (&map.terminals[s.from], &map.terminals[s.to]);
                reach = reach.max(0.5 * (b.x - a.x).hypot(b.y - a.y));
                (0.5 * (a.x + b.x), 0.5 * (a.y + b.y), i)
            })
            .collect();
        let tree = if mids.is_empty() {
            None
        } else {
            Some(QuadTree::build(&mids)?)
        };
        Ok(StreetLocator { map, tree, reach })
    }

    pub fn snap(&self, x: f64, y: f64, max_snap: f64) -> Result<MapPosition> {
        let mut candidates = Vec::new();
        if let Some(tree) = &self.tree {
            if max_snap > 0.0 {
                // Square search box; a small pad keeps rounding from
                // dropping a street sitting exactly at the limit.
                let half = (max_snap + self.reach) * (1.0 + 1e-9) + 1e-9;
                tree.range_search_with((x, y), half, |i| candidates.push(i));
            }
        }
        self.map.snap_among(candidates, x, y, max_snap)
    }
}

/// Arc expansion of a street list: two arcs per two-way street, one per
/// one-way street, in street order.
pub fn expand_arcs(n_terminals: usize, streets: &[Street]) -> Vec<Vec<Arc>> {
    let mut out = vec![Vec::new(); n_terminals];
    for (i, s) in streets.iter().enumerate() {
        out[s.from].push(Arc {
            street: i,
            head: s.to,
        });
        if !s.oneway {
            out[s.to].push(Arc {
                street: i,
                head: s.from,
            });
        }
    }
    out
}

pub fn load_map(path: impl AsRef<Path>) -> Result<StreetMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    StreetMap::parse(&text)
}

/// A point on a street, `offset` meters from its `from` terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPosition {
    /// Street index in the owning map.
    pub street: usize,
    pub offset: f64,
    pub x: f64,
    pub y: f64,
}

fn parse_field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SQUARE: &str = "meshcloak-map v1 4 4
N 1 0 0
N 2 100 0
N 3 100 100
N 4 0 100
E 10 1 2 100 0
E 11 2 3 100 0
E 12 3 4 100 0
E 13 4 1 100 0
";

    #[test]
    fn unit_square_arcs() {
        let m = StreetMap::parse(SQUARE).unwrap();
        assert_eq!(m.terminals().len(), 4);
        assert_eq!(m.streets().len(), 4);
        assert_eq!(m.arc_count(), 8);
    }

    #[test]
    fn oneway_contributes_one_arc() {
        let text = SQUARE.replace("E 12 3 4 100 0", "E 12 3 4 100 1");
        let m = StreetMap::parse(&text).unwrap();
        assert_eq!(m.arc_count(), 7);
        assert!(m.out_arcs(3).iter().all(|a| a.street != 2));
    }

    #[test]
    fn rejects_bad_maps() {
        let dangling = SQUARE.replace("E 13 4 1", "E 13 4 9");
        assert!(matches!(StreetMap::parse(&dangling), Err(Error::InvalidMap(_))));
        let short = SQUARE.replace("E 10 1 2 100", "E 10 1 2 99");
        assert!(matches!(StreetMap::parse(&short), Err(Error::InvalidMap(_))));
        let zero = SQUARE.replace("E 10 1 2 100", "E 10 1 2 0");
        assert!(matches!(StreetMap::parse(&zero), Err(Error::InvalidMap(_))));
        let dup = SQUARE.replace("N 4 0 100", "N 3 0 100");
        assert!(matches!(
            StreetMap::parse(&dup),
            Err(Error::DuplicateId { kind: "terminal", .. })
        ));
        let dup = SQUARE.replace("E 11", "E 10");
        assert!(matches!(
            StreetMap::parse(&dup),
            Err(Error::DuplicateId { kind: "street", .. })
        ));
        let selfloop = SQUARE.replace("E 13 4 1 100", "E 13 4 4 100");
        assert!(matches!(StreetMap::parse(&selfloop), Err(Error::InvalidMap(_))));
        let garbage = SQUARE.replace("N 2 100 0", "N 2 abc 0");
        assert!(matches!(StreetMap::parse(&garbage), Err(Error::Parse { line: 3, .. })));
        let truncated = SQUARE.replace("E 13 4 1 100 0\n", "");
        assert!(matches!(StreetMap::parse(&truncated), Err(Error::Parse { .. })));
    }

    #[test]
    fn length_within_tolerance_is_accepted() {
        let text = SQUARE.replace("E 10 1 2 100", "E 10 1 2 99.9999995");
        assert!(StreetMap::parse(&text).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let m = StreetMap::parse(SQUARE).unwrap();
        let again = StreetMap::parse(&m.to_text()).unwrap();
        assert_eq!(m.terminals(), again.terminals());
        assert_eq!(m.streets(), again.streets());
    }

    #[test]
    fn offsets_to_terminals() {
        let m = StreetMap::parse(SQUARE).unwrap();
        let p = m.position(0, 30.0).unwrap();
        assert_eq!(m.offset_distance_to_terminal(&p, End::From), 30.0);
        assert_eq!(m.offset_distance_to_terminal(&p, End::To), 70.0);
        let p0 = m.position(0, 0.0).unwrap();
        assert_eq!(m.offset_distance_to_terminal(&p0, End::From), 0.0);
        assert!(m.position(0, 100.5).is_err());
    }

    #[test]
    fn snap_interior_point() {
        let m = StreetMap::parse(SQUARE).unwrap();
        let p = m.snap_to_street(37.0, 0.0, DEFAULT_MAX_SNAP).unwrap();
        assert_eq!(p.street, 0);
        assert_eq!(p.offset, 37.0);
    }

    #[test]
    fn snap_tie_goes_to_lowest_id() {
        let text = "meshcloak-map v1 4 2
N 1 0 0
N 2 100 0
N 3 0 2
N 4 100 2
E 7 3 4 100 0
E 3 1 2 100 0
";
        let m = StreetMap::parse(text).unwrap();
        let p = m.snap_to_street(50.0, 1.0, 10.0).unwrap();
        assert_eq!(m.street(p.street).id, 3);
    }

    #[test]
    fn snap_out_of_range() {
        let m = StreetMap::parse(SQUARE).unwrap();
        let err = m.snap_to_street(50.0, 50.0, 5.0).unwrap_err();
        assert!(matches!(err, Error::Unsnappable { .. }));
        assert!(matches!(m.snap_to_street(0.0, 0.0, 0.0), Err(Error::Config(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn diagonal(len_factor: f64) -> StreetMap {
            let text = format!(
                "meshcloak-map v1 2 1\nN 1 3.7 -12.1\nN 2 181.3 97.9\nE 1 1 2 {} 0\n",
                (177.6f64).hypot(110.0) * len_factor
            );
            StreetMap::parse(&text).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]
            #[test]
            fn offsets_sum_to_length(factor in 1.0f64..3.0, frac in 0.0f64..=1.0) {
                let m = diagonal(factor);
                let len = m.street(0).length;
                let p = m.position(0, frac * len).unwrap();
                let sum = m.offset_distance_to_terminal(&p, End::From)
                    + m.offset_distance_to_terminal(&p, End::To);
                // `len - offset` is rounded, so the sum may be off by one ulp.
                prop_assert!((sum - len).abs() <= len * f64::EPSILON);
            }

            #[test]
            fn snapping_an_interpolated_point_returns_it(frac in 0.0f64..=1.0) {
                let m = diagonal(1.0);
                let p = m.position(0, frac * m.street(0).length).unwrap();
                let q = m.snap_to_street(p.x, p.y, 1.0).unwrap();
                prop_assert_eq!(q.street, 0);
                prop_assert!((q.offset - p.offset).abs() <= 1e-6);
            }
        }
    }
}
