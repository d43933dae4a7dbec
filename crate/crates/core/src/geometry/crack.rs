use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::domain::Point;
use super::grid::{Edge, Grid, Orientation};
use crate::error::{Error, Result};

/// A crack realized as a finite set of grid edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CrackSet {
    grid: GridKey,
    edges: BTreeSet<Edge>,
}

// Grid holds f64s; cracks only need an exact identity for equality and hashing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct GridKey {
    nx: usize,
    ny: usize,
    h_bits: u64,
    ox_bits: u64,
    oy_bits: u64,
}

impl GridKey {
    fn of(g: &Grid) -> Self {
        GridKey {
            nx: g.nx(),
            ny: g.ny(),
            h_bits: g.h().to_bits(),
            ox_bits: g.origin().x.to_bits(),
            oy_bits: g.origin().y.to_bits(),
        }
    }

    fn grid(&self) -> Grid {
        Grid::new(
            self.nx,
            self.ny,
            f64::from_bits(self.h_bits),
            Point::new(f64::from_bits(self.ox_bits), f64::from_bits(self.oy_bits)),
        )
        .expect("key built from a valid grid")
    }
}

impl CrackSet {
    pub fn empty(grid: &Grid) -> Self {
        CrackSet { grid: GridKey::of(grid), edges: BTreeSet::new() }
    }

    pub fn from_edges(grid: &Grid, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for e in edges {
            if !grid.edge_in_range(&e) {
                return Err(Error::NonConformingCrack(format!("edge {e:?} outside the grid")));
            }
            set.insert(e);
        }
        Ok(CrackSet { grid: GridKey::of(grid), edges: set })
    }

    /// Axis-aligned straight polyline between two grid nodes.
    pub fn from_segment(grid: &Grid, a: Point, b: Point) -> Result<Self> {
        let mut c = CrackSet::empty(grid);
        c.add_segment(a, b)?;
        Ok(c)
    }

    pub fn add_segment(&mut self, a: Point, b: Point) -> Result<()> {
        let grid = self.grid();
        let tol = 1e-6;
        let na = grid.snap(a, tol).ok_or_else(|| {
            Error::NonConformingCrack(format!("endpoint {a} is not a grid node"))
        })?;
        let nb = grid.snap(b, tol).ok_or_else(|| {
            Error::NonConformingCrack(format!("endpoint {b} is not a grid node"))
        })?;
        if na.1 == nb.1 {
            let (lo, hi) = (na.0.min(nb.0), na.0.max(nb.0));
            for i in lo..hi {
                self.edges.insert(Edge::horizontal(i, na.1));
            }
        } else if na.0 == nb.0 {
            let (lo, hi) = (na.1.min(nb.1), na.1.max(nb.1));
            for j in lo..hi {
                self.edges.insert(Edge::vertical(na.0, j));
            }
        } else {
            return Err(Error::NonConformingCrack(format!(
                "segment {a} -> {b} is not axis-aligned"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.grid.grid()
    }

    pub fn is_on(&self, grid: &Grid) -> bool {
        self.grid == GridKey::of(grid)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_subset(&self, other: &CrackSet) -> bool {
        self.edges.is_subset(&other.edges)
    }

    pub fn union(&self, other: &CrackSet) -> CrackSet {
        debug_assert_eq!(self.grid, other.grid);
        CrackSet {
            grid: self.grid,
            edges: self.edges.union(&other.edges).copied().collect(),
        }
    }

    /// One-dimensional Hausdorff measure: total edge length.
    pub fn h1_measure(&self) -> f64 {
        self.edges.len() as f64 * f64::from_bits(self.grid.h_bits)
    }

    /// Partition by shared edge endpoints; components are ordered by their smallest edge.
    pub fn connected_components(&self) -> Vec<CrackSet> {
        let grid = self.grid();
        let edges: Vec<Edge> = self.edges.iter().copied().collect();
        let mut uf = UnionFind::new(edges.len());
        let mut first_at_node = std::collections::HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            let ((i0, j0), (i1, j1)) = e.nodes();
            for n in [grid.node_index(i0, j0), grid.node_index(i1, j1)] {
                match first_at_node.get(&n) {
                    Some(&other) => uf.union(k, other),
                    None => {
                        first_at_node.insert(n, k);
                    }
                }
            }
        }
        let mut comps: Vec<(usize, CrackSet)> = Vec::new();
        let mut root_slot = std::collections::HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            let r = uf.find(k);
            let slot = *root_slot.entry(r).or_insert_with(|| {
                comps.push((k, CrackSet::empty(&grid)));
                comps.len() - 1
            });
            comps[slot].1.edges.insert(*e);
        }
        comps.into_iter().map(|(_, c)| c).collect()
    }

    /// Bounding box `(min, max)` of the edge endpoints.
    pub fn bbox(&self) -> Option<(Point, Point)> {
        let grid = self.grid();
        let mut it = self.edges.iter();
        let first = it.next()?;
        let (a, b) = grid.edge_endpoints(first);
        let mut lo = Point::new(a.x.min(b.x), a.y.min(b.y));
        let mut hi = Point::new(a.x.max(b.x), a.y.max(b.y));
        for e in it {
            let (a, b) = grid.edge_endpoints(e);
            lo = Point::new(lo.x.min(a.x).min(b.x), lo.y.min(a.y).min(b.y));
            hi = Point::new(hi.x.max(a.x).max(b.x), hi.y.max(a.y).max(b.y));
        }
        Some((lo, hi))
    }

    /// Node indices touched by the crack.
    pub fn nodes(&self) -> BTreeSet<usize> {
        let grid = self.grid();
        let mut out = BTreeSet::new();
        for e in &self.edges {
            let ((i0, j0), (i1, j1)) = e.nodes();
            out.insert(grid.node_index(i0, j0));
            out.insert(grid.node_index(i1, j1));
        }
        out
    }

    /// Smallest distance from a point to the crack (infinite for the empty crack).
    pub fn distance_to(&self, p: Point) -> f64 {
        let grid = self.grid();
        self.edges
            .iter()
            .map(|e| {
                let (a, b) = grid.edge_endpoints(e);
                let ab = b - a;
                let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
                p.dist(a + ab * t)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Parse the plain-text crack format: one `x0 y0 x1 y1` segment per line.
    ///
    /// Blank lines and `#` comments are ignored. Segments must be axis-aligned and
    /// join grid nodes; longer segments are split into unit edges.
    pub fn parse(grid: &Grid, text: &str) -> Result<Self> {
        let mut c = CrackSet::empty(grid);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    Error::NonConformingCrack(format!("line {}: {e}", lineno + 1))
                })?;
            if vals.len() != 4 {
                return Err(Error::NonConformingCrack(format!(
                    "line {}: expected 4 numbers, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            c.add_segment(Point::new(vals[0], vals[1]), Point::new(vals[2], vals[3]))
                .map_err(|e| Error::NonConformingCrack(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(c)
    }

    pub fn read_file(grid: &Grid, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        CrackSet::parse(grid, &text)
    }

    /// Serialize one unit edge per line.
    pub fn to_text(&self) -> String {
        let grid = self.grid();
        let mut s = String::new();
        for e in &self.edges {
            let (a, b) = grid.edge_endpoints(e);
            let _ = writeln!(s, "{} {} {} {}", a.x, a.y, b.x, b.y);
        }
        s
    }

    pub fn count_orientation(&self, o: Orientation) -> usize {
        self.edges.iter().filter(|e| e.orient == o).count()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Union keeping the smaller root, so representatives are deterministic.
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}
