use super::crack::{CrackSet, UnionFind};
use super::domain::{Domain, Point};
use super::grid::{Edge, Grid};
use crate::error::{Error, Result};

/// Degrees of freedom of the cut grid: nodes adjacent to cut edges are duplicated per side.
///
/// DOFs are numbered node by node; at a node, groups appear in the order of their first
/// incident cell (SW, SE, NE, NW). On an uncut grid the DOF index equals the node index.
#[derive(Clone, Debug)]
pub struct CutTopology {
    grid: Grid,
    cut: Vec<bool>,
    cell_dofs: Vec<[u32; 4]>,
    dof_node: Vec<u32>,
    dof_point: Vec<Point>,
    constrained: Vec<bool>,
    component: Vec<u32>,
    n_components: usize,
}

impl CutTopology {
    /// Pure connectivity, with no Dirichlet constraints.
    pub fn new(grid: &Grid, crack: &CrackSet) -> Result<Self> {
        build(grid, crack, None)
    }

    /// Connectivity plus constraint flags: a DOF is constrained when one of its cells has an
    /// uncut boundary edge on the Dirichlet part that ends at the DOF's node.
    pub fn with_domain(domain: &Domain, grid: &Grid, crack: &CrackSet) -> Result<Self> {
        build(grid, crack, Some(domain))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_node.len()
    }

    /// Number of extra DOFs created by the cut.
    pub fn n_duplicated(&self) -> usize {
        self.n_dofs() - self.grid.n_nodes()
    }

    pub fn is_cut(&self, e: &Edge) -> bool {
        self.cut[self.grid.edge_id(e)]
    }

    /// DOFs of a cell's corners in SW, SE, NE, NW order.
    pub fn cell_dofs(&self, c: usize) -> [usize; 4] {
        let d = self.cell_dofs[c];
        [d[0] as usize, d[1] as usize, d[2] as usize, d[3] as usize]
    }

    pub fn dof_node(&self, d: usize) -> usize {
        self.dof_node[d] as usize
    }

    /// Position used to evaluate analytic fields on a DOF: the node itself, nudged slightly
    /// toward its own side when the node is split.
    pub fn dof_point(&self, d: usize) -> Point {
        self.dof_point[d]
    }

    pub fn is_constrained(&self, d: usize) -> bool {
        self.constrained[d]
    }

    pub fn has_constraints(&self) -> bool {
        self.constrained.iter().any(|&c| c)
    }

    /// Connected component (through shared cells) of a DOF.
    pub fn component(&self, d: usize) -> usize {
        self.component[d] as usize
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Whether a node was split by the cut.
    pub fn is_split_node(&self, n: usize) -> bool {
        let first = self.node_first_dof(n);
        first + 1 < self.dof_node.len() && self.dof_node[first + 1] as usize == n
    }

    /// All DOFs living on node `n`.
    pub fn node_dofs(&self, n: usize) -> std::ops::Range<usize> {
        let first = self.node_first_dof(n);
        let mut last = first + 1;
        while last < self.dof_node.len() && self.dof_node[last] as usize == n {
            last += 1;
        }
        first..last
    }

    fn node_first_dof(&self, n: usize) -> usize {
        // dof_node is sorted, so a binary search finds the first DOF of a node.
        self.dof_node.partition_point(|&m| (m as usize) < n)
    }

    /// Copy a nodal vector onto the DOFs (every copy of a node gets the node value).
    pub fn lift_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_node.iter().map(|&n| nodal[n as usize]).collect()
    }
}

/// Shorthand for [`CutTopology::new`].
pub fn cut_grid(grid: &Grid, crack: &CrackSet) -> Result<CutTopology> {
    CutTopology::new(grid, crack)
}

fn build(grid: &Grid, crack: &CrackSet, domain: Option<&Domain>) -> Result<CutTopology> {
    if !crack.is_on(grid) {
        return Err(Error::NonConformingCrack("crack was built on a different grid".into()));
    }
    let mut cut = vec![false; grid.n_edges()];
    for e in crack.edges() {
        if !grid.edge_in_range(e) {
            return Err(Error::NonConformingCrack(format!("edge {e:?} outside the grid")));
        }
        cut[grid.edge_id(e)] = true;
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut cell_dofs = vec![[u32::MAX; 4]; grid.n_cells()];
    let mut dof_node = Vec::with_capacity(grid.n_nodes());
    let mut dof_point = Vec::with_capacity(grid.n_nodes());
    let mut constrained = Vec::with_capacity(grid.n_nodes());
    let h = grid.h();

    for j in 0..=ny {
        for i in 0..=nx {
            let n = grid.node_index(i, j);
            // Incident cells by position relative to the node, and the corner slot the node
            // occupies in each (SW cell sees the node as its NE corner, and so on).
            let cells: [Option<(usize, usize)>; 4] = [
                (i > 0 && j > 0).then(|| (grid.cell_index(i - 1, j - 1), 2)),
                (i < nx && j > 0).then(|| (grid.cell_index(i, j - 1), 3)),
                (i < nx && j < ny).then(|| (grid.cell_index(i, j), 0)),
                (i > 0 && j < ny).then(|| (grid.cell_index(i - 1, j), 1)),
            ];
            // Edges separating consecutive cells around the node.
            let seps: [(usize, usize, Option<Edge>); 4] = [
                (0, 1, (j > 0).then(|| Edge::vertical(i, j - 1))),
                (1, 2, (i < nx).then(|| Edge::horizontal(i, j))),
                (2, 3, (j < ny).then(|| Edge::vertical(i, j))),
                (3, 0, (i > 0).then(|| Edge::horizontal(i - 1, j))),
            ];
            let mut uf = UnionFind::new(4);
            for (a, b, e) in seps {
                if let (Some(_), Some(_), Some(e)) = (cells[a], cells[b], e) {
                    if !cut[grid.edge_id(&e)] {
                        uf.union(a, b);
                    }
                }
            }
            let mut roots: Vec<usize> = Vec::with_capacity(4);
            for k in 0..4 {
                if cells[k].is_some() {
                    let r = uf.find(k);
                    if !roots.contains(&r) {
                        roots.push(r);
                    }
                }
            }
            let node_p = grid.node_pos(i, j);
            let split = roots.len() > 1;
            for &r in &roots {
                let d = dof_node.len() as u32;
                let mut centroid = Point::default();
                let mut count = 0.0;
                for k in 0..4 {
                    if let Some((c, slot)) = cells[k] {
                        if uf.find(k) == r {
                            cell_dofs[c][slot] = d;
                            centroid = centroid + grid.cell_center(c);
                            count += 1.0;
                        }
                    }
                }
                let p = if split {
                    let dir = centroid * (1.0 / count) - node_p;
                    node_p + dir * (1e-6 * h / dir.norm())
                } else {
                    node_p
                };
                dof_node.push(n as u32);
                dof_point.push(p);
                let fixed = match domain {
                    None => false,
                    Some(dom) => (0..4).any(|k| {
                        let Some((c, _)) = cells[k] else { return false };
                        if uf.find(k) != r {
                            return false;
                        }
                        node_boundary_edges(grid, i, j).into_iter().any(|e| {
                            let (lo, hi) = grid.edge_cells(&e);
                            let owner = lo.or(hi);
                            owner == Some(c) && !cut[grid.edge_id(&e)] && edge_is_dirichlet(dom, grid, &e)
                        })
                    }),
                };
                constrained.push(fixed);
            }
        }
    }

    let n_dofs = dof_node.len();
    let mut uf = UnionFind::new(n_dofs);
    for d in &cell_dofs {
        for k in 1..4 {
            uf.union(d[0] as usize, d[k] as usize);
        }
    }
    let mut component = vec![0u32; n_dofs];
    let mut label = std::collections::HashMap::new();
    for (k, slot) in component.iter_mut().enumerate() {
        let r = uf.find(k);
        let next = label.len() as u32;
        *slot = *label.entry(r).or_insert(next);
    }
    Ok(CutTopology {
        grid: *grid,
        cut,
        cell_dofs,
        dof_node,
        dof_point,
        constrained,
        component,
        n_components: label.len(),
    })
}

fn node_boundary_edges(grid: &Grid, i: usize, j: usize) -> Vec<Edge> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = Vec::new();
    for jj in [0, ny] {
        if j == jj {
            if i > 0 {
                out.push(Edge::horizontal(i - 1, jj));
            }
            if i < nx {
                out.push(Edge::horizontal(i, jj));
            }
        }
    }
    for ii in [0, nx] {
        if i == ii {
            if j > 0 {
                out.push(Edge::vertical(ii, j - 1));
            }
            if j < ny {
                out.push(Edge::vertical(ii, j));
            }
        }
    }
    out
}

/// Whether an uncut node carries a Dirichlet constraint.
pub fn node_is_dirichlet(domain: &Domain, grid: &Grid, i: usize, j: usize) -> bool {
    node_boundary_edges(grid, i, j).iter().any(|e| edge_is_dirichlet(domain, grid, e))
}

/// Dirichlet status of a boundary edge, decided at its midpoint.
pub fn edge_is_dirichlet(domain: &Domain, grid: &Grid, e: &Edge) -> bool {
    let Some(side) = grid.boundary_side(e) else { return false };
    let m = grid.edge_midpoint(e);
    let s = if side.is_horizontal() { m.x } else { m.y };
    domain.is_dirichlet_at(side, s)
}
