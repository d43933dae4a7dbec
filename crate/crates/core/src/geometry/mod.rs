//! Domains, grids, grid-conforming cracks, covers and cut topologies.

mod cover;
mod crack;
mod domain;
mod grid;
mod topology;

pub use cover::{cover_crack, Cover, CoverMember, CoverShape, BOUNDARY_RECT_FRACTION};
pub use crack::CrackSet;
pub(crate) use crack::UnionFind;
pub use domain::{BoundarySegment, Domain, Point, Rect, Side};
pub use grid::{Edge, Grid, Orientation};
pub use topology::{cut_grid, edge_is_dirichlet, node_is_dirichlet, CutTopology};
