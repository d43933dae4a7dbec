use super::domain::{Domain, Point, Side};
use crate::error::{Error, Result};

/// Uniform structured grid of square cells.
///
/// Nodes are `(i, j)` with `0 <= i <= nx`, `0 <= j <= ny`; cell `(i, j)` spans nodes
/// `(i, j)` to `(i + 1, j + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
    origin: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// A grid edge: horizontal edges join `(i, j)`–`(i + 1, j)`, vertical ones `(i, j)`–`(i, j + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub orient: Orientation,
    pub i: u32,
    pub j: u32,
}

impl Edge {
    pub fn horizontal(i: usize, j: usize) -> Self {
        Edge { orient: Orientation::Horizontal, i: i as u32, j: j as u32 }
    }

    pub fn vertical(i: usize, j: usize) -> Self {
        Edge { orient: Orientation::Vertical, i: i as u32, j: j as u32 }
    }

    /// Endpoint node coordinates `((i0, j0), (i1, j1))`.
    pub fn nodes(&self) -> ((usize, usize), (usize, usize)) {
        let (i, j) = (self.i as usize, self.j as usize);
        match self.orient {
            Orientation::Horizontal => ((i, j), (i + 1, j)),
            Orientation::Vertical => ((i, j), (i, j + 1)),
        }
    }
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: Point) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!("grid needs nx, ny >= 2 (got {nx} x {ny})")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing must be positive (got {h})")));
        }
        if nx.max(ny) > u32::MAX as usize / 2 {
            return Err(Error::invalid("grid too large"));
        }
        Ok(Grid { nx, ny, h, origin })
    }

    /// Grid covering the domain rectangle exactly with `nx × ny` square cells.
    pub fn for_domain(domain: &Domain, nx: usize, ny: usize) -> Result<Self> {
        let r = domain.rect();
        let hx = r.width() / nx as f64;
        let hy = r.height() / ny as f64;
        if ((hx - hy) / hx).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "{nx} x {ny} cells do not tile the {} x {} domain with square cells",
                r.width(),
                r.height()
            )));
        }
        Grid::new(nx, ny, hx, Point::new(r.x0, r.y0))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_ij(&self, n: usize) -> (usize, usize) {
        (n % (self.nx + 1), n / (self.nx + 1))
    }

    pub fn node_pos(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn cell_center(&self, c: usize) -> Point {
        let (i, j) = self.cell_ij(c);
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Node indices of a cell in counter-clockwise order SW, SE, NE, NW.
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    pub fn edge_in_range(&self, e: &Edge) -> bool {
        let (i, j) = (e.i as usize, e.j as usize);
        match e.orient {
            Orientation::Horizontal => i < self.nx && j <= self.ny,
            Orientation::Vertical => i <= self.nx && j < self.ny,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.nx * (self.ny + 1) + (self.nx + 1) * self.ny
    }

    /// Dense edge id for bitset-style bookkeeping.
    pub fn edge_id(&self, e: &Edge) -> usize {
        let (i, j) = (e.i as usize, e.j as usize);
        match e.orient {
            Orientation::Horizontal => j * self.nx + i,
            Orientation::Vertical => self.nx * (self.ny + 1) + j * (self.nx + 1) + i,
        }
    }

    pub fn edge_endpoints(&self, e: &Edge) -> (Point, Point) {
        let ((i0, j0), (i1, j1)) = e.nodes();
        (self.node_pos(i0, j0), self.node_pos(i1, j1))
    }

    pub fn edge_midpoint(&self, e: &Edge) -> Point {
        let (a, b) = self.edge_endpoints(e);
        (a + b) * 0.5
    }

    /// The cells on either side of an edge: (below/left, above/right).
    pub fn edge_cells(&self, e: &Edge) -> (Option<usize>, Option<usize>) {
        let (i, j) = (e.i as usize, e.j as usize);
        match e.orient {
            Orientation::Horizontal => (
                (j > 0).then(|| self.cell_index(i, j - 1)),
                (j < self.ny).then(|| self.cell_index(i, j)),
            ),
            Orientation::Vertical => (
                (i > 0).then(|| self.cell_index(i - 1, j)),
                (i < self.nx).then(|| self.cell_index(i, j)),
            ),
        }
    }

    /// The domain side an edge lies on, if it is a boundary edge.
    pub fn boundary_side(&self, e: &Edge) -> Option<Side> {
        let (i, j) = (e.i as usize, e.j as usize);
        match e.orient {
            Orientation::Horizontal if j == 0 => Some(Side::Bottom),
            Orientation::Horizontal if j == self.ny => Some(Side::Top),
            Orientation::Vertical if i == 0 => Some(Side::Left),
            Orientation::Vertical if i == self.nx => Some(Side::Right),
            _ => None,
        }
    }

    /// All boundary edges, walking each side in increasing coordinate.
    pub fn boundary_edges(&self, side: Side) -> Vec<Edge> {
        match side {
            Side::Bottom => (0..self.nx).map(|i| Edge::horizontal(i, 0)).collect(),
            Side::Top => (0..self.nx).map(|i| Edge::horizontal(i, self.ny)).collect(),
            Side::Left => (0..self.ny).map(|j| Edge::vertical(0, j)).collect(),
            Side::Right => (0..self.ny).map(|j| Edge::vertical(self.nx, j)).collect(),
        }
    }

    /// Nearest node indices to a point, or `None` if it is not within `tol·h` of a node.
    pub fn snap(&self, p: Point, tol: f64) -> Option<(usize, usize)> {
        let fi = (p.x - self.origin.x) / self.h;
        let fj = (p.y - self.origin.y) / self.h;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > tol || (fj - rj).abs() > tol {
            return None;
        }
        if ri < 0.0 || rj < 0.0 || ri > self.nx as f64 || rj > self.ny as f64 {
            return None;
        }
        Some((ri as usize, rj as usize))
    }

    /// Cell containing a point (points on the far boundary map to the last cell).
    pub fn locate_cell(&self, p: Point) -> Option<usize> {
        let fi = (p.x - self.origin.x) / self.h;
        let fj = (p.y - self.origin.y) / self.h;
        if fi < 0.0 || fj < 0.0 || fi > self.nx as f64 || fj > self.ny as f64 {
            return None;
        }
        let i = (fi.floor() as usize).min(self.nx - 1);
        let j = (fj.floor() as usize).min(self.ny - 1);
        Some(self.cell_index(i, j))
    }
}
