//! Exhaustive minimization over finite crack families.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::elastic::{fmt_f64, solve_with, Problem, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{edge_is_dirichlet, CrackSet, Domain, Edge, Grid, Orientation, Point, Rect, Side};

/// Relative tolerance under which two energies count as tied.
pub const TIE_TOL: f64 = 1e-9;
/// Rungs of the default budget ladder.
pub const LADDER_RUNGS: usize = 7;

/// Where segment generators are anchored.
#[derive(Clone, Debug, PartialEq)]
pub enum Anchors {
    /// Every `stride`-th grid node, optionally restricted to a closed rectangle.
    Lattice { stride: usize, region: Option<Rect> },
    /// Explicit grid nodes.
    Points(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    /// Straight axis-aligned segments of the given lengths (in edges).
    Segments {
        anchors: Anchors,
        lengths: Vec<usize>,
        orientations: Vec<Orientation>,
        /// Center the segment on the anchor instead of starting it there.
        centered: bool,
    },
    /// Digital circles: the edges separating cells with centers inside `B_r(x)` from the rest.
    Circles { centers: Vec<Point>, radii: Vec<f64> },
    /// Runs of Dirichlet boundary edges; `full` adds every whole Dirichlet segment and their union.
    BoundaryDebond { lengths: Vec<usize>, stride: usize, full: bool },
    Union(Vec<FamilySpec>),
}

/// Finite, deduplicated list of cracks; index 0 is always the empty crack.
#[derive(Clone, Debug)]
pub struct CrackFamily {
    members: Vec<CrackSet>,
    max_components: usize,
}

impl CrackFamily {
    /// Enumerate a family, dropping duplicates and cracks with more than `m` components.
    pub fn build(spec: &FamilySpec, domain: &Domain, grid: &Grid, m: usize) -> Result<Self> {
        let mut raw = Vec::new();
        generate(spec, domain, grid, &mut raw)?;
        Self::from_cracks(grid, raw, m)
    }

    pub fn from_cracks(grid: &Grid, cracks: impl IntoIterator<Item = CrackSet>, m: usize) -> Result<Self> {
        let mut members = vec![CrackSet::empty(grid)];
        let mut seen: HashSet<CrackSet> = members.iter().cloned().collect();
        for c in cracks {
            if !c.is_on(grid) {
                return Err(Error::NonConformingCrack("family member lives on another grid".into()));
            }
            if c.connected_components().len() > m || !seen.insert(c.clone()) {
                continue;
            }
            members.push(c);
        }
        if members.len() == 1 {
            return Err(Error::EmptyFamily);
        }
        Ok(CrackFamily { members, max_components: m })
    }

    pub fn members(&self) -> &[CrackSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, i: usize) -> &CrackSet {
        &self.members[i]
    }

    pub fn max_components(&self) -> usize {
        self.max_components
    }
}

fn generate(spec: &FamilySpec, domain: &Domain, grid: &Grid, out: &mut Vec<CrackSet>) -> Result<()> {
    match spec {
        FamilySpec::Segments { anchors, lengths, orientations, centered } => {
            let nodes = anchor_nodes(anchors, grid)?;
            for &len in lengths {
                if len == 0 || (*centered && len % 2 == 1) {
                    return Err(Error::invalid(format!(
                        "segment length {len} is not usable{}",
                        if *centered { " for centered segments" } else { "" }
                    )));
                }
                for &(i, j) in &nodes {
                    for &o in orientations {
                        if let Some(c) = segment(grid, i, j, len, o, *centered) {
                            out.push(c);
                        }
                    }
                }
            }
        }
        FamilySpec::Circles { centers, radii } => {
            for &c in centers {
                if !domain.contains(c) {
                    return Err(Error::InvalidProbe { x: c.x, y: c.y });
                }
                for &r in radii {
                    let circle = digital_circle(grid, c, r);
                    if !circle.is_empty() {
                        out.push(circle);
                    }
                }
            }
        }
        FamilySpec::BoundaryDebond { lengths, stride, full } => {
            let runs = dirichlet_runs(domain, grid);
            for run in &runs {
                for &len in lengths {
                    if len == 0 || *stride == 0 {
                        return Err(Error::invalid("debond lengths and stride must be positive"));
                    }
                    let mut start = 0;
                    while start + len <= run.len() {
                        out.push(CrackSet::from_edges(grid, run[start..start + len].iter().copied())?);
                        start += stride;
                    }
                }
            }
            if *full {
                for run in &runs {
                    out.push(CrackSet::from_edges(grid, run.iter().copied())?);
                }
                if runs.len() > 1 {
                    out.push(CrackSet::from_edges(grid, runs.iter().flatten().copied())?);
                }
            }
        }
        FamilySpec::Union(parts) => {
            for p in parts {
                generate(p, domain, grid, out)?;
            }
        }
    }
    Ok(())
}

fn anchor_nodes(anchors: &Anchors, grid: &Grid) -> Result<Vec<(usize, usize)>> {
    match anchors {
        Anchors::Lattice { stride, region } => {
            if *stride == 0 {
                return Err(Error::invalid("anchor stride must be positive"));
            }
            let mut out = Vec::new();
            for j in (0..=grid.ny()).step_by(*stride) {
                for i in (0..=grid.nx()).step_by(*stride) {
                    let p = grid.node_pos(i, j);
                    if region.is_none_or(|r| r.contains(p)) {
                        out.push((i, j));
                    }
                }
            }
            Ok(out)
        }
        Anchors::Points(points) => points
            .iter()
            .map(|&p| {
                grid.snap(p, 1e-6)
                    .ok_or_else(|| Error::NonConformingCrack(format!("anchor {p} is not a grid node")))
            })
            .collect(),
    }
}

fn segment(grid: &Grid, i: usize, j: usize, len: usize, o: Orientation, centered: bool) -> Option<CrackSet> {
    let (along, limit) = match o {
        Orientation::Horizontal => (i, grid.nx()),
        Orientation::Vertical => (j, grid.ny()),
    };
    let start = if centered { along.checked_sub(len / 2)? } else { along };
    if start + len > limit {
        return None;
    }
    let edges = (start..start + len).map(|k| match o {
        Orientation::Horizontal => Edge::horizontal(k, j),
        Orientation::Vertical => Edge::vertical(i, k),
    });
    CrackSet::from_edges(grid, edges).ok()
}

/// Edges separating cells whose centers lie in `B_r(x)` from their neighbors.
pub fn digital_circle(grid: &Grid, center: Point, r: f64) -> CrackSet {
    let inside = |i: usize, j: usize| grid.cell_center(grid.cell_index(i, j)).dist(center) < r;
    let mut edges = Vec::new();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if i > 0 && inside(i - 1, j) != inside(i, j) {
                edges.push(Edge::vertical(i, j));
            }
            if j > 0 && inside(i, j - 1) != inside(i, j) {
                edges.push(Edge::horizontal(i, j));
            }
        }
    }
    CrackSet::from_edges(grid, edges).expect("interior edges are in range")
}

/// Maximal runs of consecutive Dirichlet boundary edges, side by side.
fn dirichlet_runs(domain: &Domain, grid: &Grid) -> Vec<Vec<Edge>> {
    let mut runs = Vec::new();
    for side in Side::ALL {
        let mut current = Vec::new();
        for e in grid.boundary_edges(side) {
            if edge_is_dirichlet(domain, grid, &e) {
                current.push(e);
            } else if !current.is_empty() {
                runs.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
    }
    runs
}

/// Bulk energy of one family member.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub index: usize,
    pub h1: f64,
    pub bulk: f64,
}

fn within(h1: f64, budget: f64) -> bool {
    h1 <= budget * (1.0 + 1e-12) + 1e-15
}

/// Solve every member with `H¹ ≤ budget` (in parallel, results in family order).
pub fn evaluate(problem: &Arc<Problem>, family: &CrackFamily, budget: f64) -> Result<Vec<Evaluation>> {
    if !(budget >= 0.0) {
        return Err(Error::invalid(format!("budget {budget} must be non-negative")));
    }
    let (uncut, w0) = problem.uncut_solution()?;
    let idx: Vec<usize> = (0..family.len()).filter(|&i| within(family.get(i).h1_measure(), budget)).collect();
    idx.par_iter()
        .map(|&i| {
            let crack = family.get(i);
            let bulk = if crack.is_empty() {
                w0
            } else {
                solve_with(problem, crack, problem.options(), Some(uncut))?.1.bulk_energy
            };
            Ok(Evaluation { index: i, h1: crack.h1_measure(), bulk })
        })
        .collect()
}

/// First index (in family order) of the smallest value, with relative ties resolved to the earlier one.
fn argmin_by(evals: &[Evaluation], value: impl Fn(&Evaluation) -> f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for e in evals {
        let v = value(e);
        match best {
            Some((_, b)) if v >= b - TIE_TOL * b.abs().max(f64::MIN_POSITIVE) => {}
            _ => best = Some((e.index, v)),
        }
    }
    best
}

/// Minimizers of the bulk and of the total energy among evaluated members within a budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub budget: f64,
    pub bulk_argmin: usize,
    pub bulk: f64,
    pub total_argmin: usize,
    pub total: f64,
    pub candidates: usize,
}

pub fn select(evals: &[Evaluation], budget: f64, k: f64) -> Result<Selection> {
    let feasible: Vec<Evaluation> = evals.iter().copied().filter(|e| within(e.h1, budget)).collect();
    let (bulk_argmin, bulk) = argmin_by(&feasible, |e| e.bulk).ok_or(Error::EmptyFamily)?;
    let (total_argmin, total) = argmin_by(&feasible, |e| e.bulk + k * e.h1).ok_or(Error::EmptyFamily)?;
    Ok(Selection { budget, bulk_argmin, bulk, total_argmin, total, candidates: feasible.len() })
}

pub struct SearchResult {
    pub selection: Selection,
    pub bulk_field: ScalarField,
    pub total_field: ScalarField,
    pub evaluations: Vec<Evaluation>,
}

/// Exhaustive minimization of bulk and total energy over members with `H¹ ≤ budget`.
pub fn minimize_total(problem: &Arc<Problem>, family: &CrackFamily, budget: f64, k: f64) -> Result<SearchResult> {
    let evaluations = evaluate(problem, family, budget)?;
    let selection = select(&evaluations, budget, k)?;
    let (uncut, _) = problem.uncut_solution()?;
    let field = |i: usize| -> Result<ScalarField> {
        Ok(solve_with(problem, family.get(i), problem.options(), Some(uncut))?.0)
    };
    let bulk_field = field(selection.bulk_argmin)?;
    let total_field = if selection.total_argmin == selection.bulk_argmin {
        bulk_field.clone()
    } else {
        field(selection.total_argmin)?
    };
    Ok(SearchResult { selection, bulk_field, total_field, evaluations })
}

/// `l_max 2^{-i}` for `i = 0..rungs`.
pub fn budget_ladder(l_max: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|i| l_max * 0.5f64.powi(i as i32)).collect()
}

/// `W(l)` and release rates over a budget ladder.
#[derive(Clone, Debug)]
pub struct ReleaseCurve {
    pub w0: f64,
    pub k: f64,
    pub selections: Vec<Selection>,
    /// Cracks realizing `W(l)`, aligned with `selections`.
    pub minimizers: Vec<CrackSet>,
}

impl ReleaseCurve {
    pub fn budgets(&self) -> Vec<f64> {
        self.selections.iter().map(|s| s.budget).collect()
    }

    pub fn w(&self) -> Vec<f64> {
        self.selections.iter().map(|s| s.bulk).collect()
    }

    /// `(W(0) − W(l)) / l`.
    pub fn rates(&self) -> Vec<f64> {
        self.selections.iter().map(|s| (self.w0 - s.bulk) / s.budget).collect()
    }

    /// CSV rows `l,W,rate,argmin_id,total_energy`; the last column is the smallest total
    /// energy within the budget.
    pub fn csv_rows(&self) -> Vec<String> {
        self.selections
            .iter()
            .zip(self.rates())
            .map(|(s, rate)| {
                format!(
                    "{},{},{},{},{}",
                    fmt_f64(s.budget),
                    fmt_f64(s.bulk),
                    fmt_f64(rate),
                    s.bulk_argmin,
                    fmt_f64(s.total)
                )
            })
            .collect()
    }
}

/// Evaluate the family once at the largest budget and select per budget.
pub fn release_curve(problem: &Arc<Problem>, family: &CrackFamily, budgets: &[f64], k: f64) -> Result<ReleaseCurve> {
    if budgets.is_empty() || budgets.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::invalid("budgets must be positive and non-empty"));
    }
    if budgets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("budgets must be strictly decreasing"));
    }
    let evals = evaluate(problem, family, budgets[0])?;
    let w0 = evals[0].bulk;
    let selections = budgets.iter().map(|&l| select(&evals, l, k)).collect::<Result<Vec<_>>>()?;
    let minimizers = selections.iter().map(|s| family.get(s.bulk_argmin).clone()).collect();
    Ok(ReleaseCurve { w0, k, selections, minimizers })
}

#[derive(Clone, Debug)]
pub struct LocalizationEntry {
    pub radius: f64,
    /// Whether each minimizer (in curve order) meets `B_radius(x)`.
    pub meets: Vec<bool>,
    /// Largest budget such that every minimizer at that budget or below meets the ball.
    pub largest_budget: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct LocalizationReport {
    pub point: Point,
    pub entries: Vec<LocalizationEntry>,
}

/// For each ball `B_ρ(x)`, how far up the ladder the minimizers keep meeting it.
pub fn localization_check(domain: &Domain, curve: &ReleaseCurve, x: Point, radii: &[f64]) -> Result<LocalizationReport> {
    if !domain.contains(x) {
        return Err(Error::InvalidProbe { x: x.x, y: x.y });
    }
    let budgets = curve.budgets();
    let mut order: Vec<usize> = (0..budgets.len()).collect();
    order.sort_by(|&a, &b| budgets[a].total_cmp(&budgets[b]));
    let entries = radii
        .iter()
        .map(|&radius| {
            let meets: Vec<bool> = curve.minimizers.iter().map(|c| c.distance_to(x) < radius).collect();
            let mut largest = None;
            for &i in &order {
                if !meets[i] {
                    break;
                }
                largest = Some(budgets[i]);
            }
            LocalizationEntry { radius, meets, largest_budget: largest }
        })
        .collect();
    Ok(LocalizationReport { point: x, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic::Datum;
    use crate::energy::Integrand;

    fn unit(n: usize, datum: Datum) -> Arc<Problem> {
        let d = Domain::with_dirichlet_sides(Rect::unit_square(), &Side::ALL);
        let g = Grid::for_domain(&d, n, n).unwrap();
        Problem::new(d, g, Integrand::dirichlet(), datum).unwrap()
    }

    fn center_segments(p: &Problem, lengths: Vec<usize>) -> CrackFamily {
        let spec = FamilySpec::Segments {
            anchors: Anchors::Points(vec![Point::new(0.5, 0.5)]),
            lengths,
            orientations: vec![Orientation::Vertical, Orientation::Horizontal],
            centered: true,
        };
        CrackFamily::build(&spec, p.domain(), p.grid(), 1).unwrap()
    }

    #[test]
    fn family_enumeration() {
        let p = unit(16, Datum::x1());
        let fam = center_segments(&p, vec![2, 4]);
        assert_eq!(fam.len(), 5);
        assert!(fam.get(0).is_empty());
        assert_eq!(fam.get(1).len(), 2);
        let lattice = FamilySpec::Segments {
            anchors: Anchors::Lattice { stride: 4, region: None },
            lengths: vec![4],
            orientations: vec![Orientation::Vertical],
            centered: false,
        };
        // 5 columns of anchors, 4 starting rows fit a length-4 segment.
        assert_eq!(CrackFamily::build(&lattice, p.domain(), p.grid(), 1).unwrap().len(), 1 + 5 * 4);
        let debond = FamilySpec::BoundaryDebond { lengths: vec![], stride: 1, full: true };
        let f = CrackFamily::build(&debond, p.domain(), p.grid(), 4).unwrap();
        // Four sides plus their union.
        assert_eq!(f.len(), 6);
        assert_eq!(f.get(5).len(), 64);
        let none = FamilySpec::Circles { centers: vec![Point::new(0.5, 0.5)], radii: vec![0.01] };
        assert!(matches!(CrackFamily::build(&none, p.domain(), p.grid(), 1), Err(Error::EmptyFamily)));
        let outside = FamilySpec::Circles { centers: vec![Point::new(2.0, 0.5)], radii: vec![0.1] };
        assert!(matches!(CrackFamily::build(&outside, p.domain(), p.grid(), 1), Err(Error::InvalidProbe { .. })));
    }

    #[test]
    fn digital_circle_is_closed() {
        let g = Grid::new(32, 32, 1.0 / 32.0, Point::new(0.0, 0.0)).unwrap();
        let c = digital_circle(&g, Point::new(0.5, 0.5), 0.2);
        assert_eq!(c.connected_components().len(), 1);
        // Every node of a closed curve has even degree.
        let mut degree = std::collections::HashMap::new();
        for e in c.edges() {
            let (a, b) = e.nodes();
            *degree.entry(a).or_insert(0) += 1;
            *degree.entry(b).or_insert(0) += 1;
        }
        assert!(degree.values().all(|d| d % 2 == 0));
        // Staircase perimeter of a digital disk is at least the bounding-box perimeter.
        assert!(c.h1_measure() >= 8.0 * 0.2 * 0.9);
    }

    #[test]
    fn zero_budget_and_huge_toughness_select_empty() {
        let p = unit(32, Datum::x1());
        let fam = center_segments(&p, vec![2, 4, 8]);
        let r = minimize_total(&p, &fam, 0.0, 1.0).unwrap();
        assert_eq!(r.selection.bulk_argmin, 0);
        assert_eq!(r.selection.bulk, p.uncut_solution().unwrap().1);
        let r = minimize_total(&p, &fam, 1.0, 1e9).unwrap();
        assert_eq!(r.selection.total_argmin, 0);
        assert!(r.selection.bulk_argmin != 0);
        assert!(r.total_field.crack().is_empty());
    }

    #[test]
    fn curve_is_monotone() {
        let p = unit(32, Datum::x1());
        let fam = center_segments(&p, vec![2, 4, 8, 16]);
        let curve = release_curve(&p, &fam, &budget_ladder(0.5, 4), 1.0).unwrap();
        let w = curve.w();
        assert!(w.windows(2).all(|x| x[0] <= x[1] + 1e-15));
        assert!(curve.rates().iter().all(|&r| r >= 0.0));
        // Vertical cuts across the x-gradient win.
        assert!(curve.minimizers.iter().all(|c| c.count_orientation(Orientation::Vertical) == c.len()));
        assert!(release_curve(&p, &fam, &[0.1, 0.2], 1.0).is_err());
    }

    #[test]
    fn constant_datum_releases_nothing() {
        let p = unit(16, Datum::Constant(2.0));
        let fam = center_segments(&p, vec![2, 4]);
        let curve = release_curve(&p, &fam, &budget_ladder(0.25, 2), 1.0).unwrap();
        assert!(curve.w().iter().all(|&w| w.abs() < 1e-20));
        assert!(curve.rates().iter().all(|&r| r.abs() < 1e-18));
    }

    #[test]
    fn ties_resolve_to_the_first_member() {
        let e = |index, bulk| Evaluation { index, h1: 0.0, bulk };
        let evals = [e(0, 1.0), e(1, 0.5), e(2, 0.5 * (1.0 - 1e-12)), e(3, 0.7)];
        assert_eq!(select(&evals, 1.0, 0.0).unwrap().bulk_argmin, 1);
        assert!(matches!(select(&[], 1.0, 0.0), Err(Error::EmptyFamily)));
    }

    #[test]
    fn localization_reports_largest_budget() {
        let g = Grid::new(8, 8, 0.125, Point::new(0.0, 0.0)).unwrap();
        let d = Domain::with_dirichlet_sides(Rect::unit_square(), &Side::ALL);
        let near = CrackSet::from_segment(&g, Point::new(0.5, 0.5), Point::new(0.5, 0.625)).unwrap();
        let far = CrackSet::from_segment(&g, Point::new(0.0, 0.0), Point::new(0.125, 0.0)).unwrap();
        let sel = |budget| Selection { budget, bulk_argmin: 1, bulk: 0.0, total_argmin: 0, total: 0.0, candidates: 1 };
        let curve = ReleaseCurve {
            w0: 1.0,
            k: 1.0,
            selections: vec![sel(0.4), sel(0.2), sel(0.1)],
            minimizers: vec![far, near.clone(), near],
        };
        let rep = localization_check(&d, &curve, Point::new(0.5, 0.5), &[0.1]).unwrap();
        assert_eq!(rep.entries[0].meets, vec![false, true, true]);
        assert_eq!(rep.entries[0].largest_budget, Some(0.2));
        assert!(localization_check(&d, &curve, Point::new(-1.0, 0.5), &[0.1]).is_err());
    }
}
