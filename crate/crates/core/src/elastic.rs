//! Minimization of the bulk energy on the cut grid.
//!
//! Each cell carries four corner gradients (one per corner triangle of the two diagonal
//! splittings), each weighted by a quarter of the cell area. The rule is exact for linear
//! fields and has no zero-energy hourglass modes.

use std::fmt;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use crate::energy::{dot, CellLaw, Integrand, Sym2, Vec2};
use crate::error::{Error, Result};
use crate::geometry::{CrackSet, CutTopology, Domain, Grid, Point};
use crate::fem::CellSystem;

/// Relative residual for linear solves.
pub const LINEAR_TOL: f64 = 1e-10;
/// Relative gradient norm at which Newton stops.
pub const NEWTON_TOL: f64 = 1e-10;

/// Derivatives of the corner gradients with respect to the cell's corner values (times `h`).
const D: [[[f64; 4]; 2]; 4] = [
    [[-1.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 1.0]],
    [[-1.0, 1.0, 0.0, 0.0], [0.0, -1.0, 1.0, 0.0]],
    [[0.0, 0.0, 1.0, -1.0], [0.0, -1.0, 1.0, 0.0]],
    [[0.0, 0.0, 1.0, -1.0], [-1.0, 0.0, 0.0, 1.0]],
];

/// Corner gradients of a cell from its SW, SE, NE, NW values.
#[inline]
pub fn corner_gradients(u: [f64; 4], h: f64) -> [Vec2; 4] {
    let dx_s = (u[1] - u[0]) / h;
    let dx_n = (u[2] - u[3]) / h;
    let dy_w = (u[3] - u[0]) / h;
    let dy_e = (u[2] - u[1]) / h;
    [[dx_s, dy_w], [dx_s, dy_e], [dx_n, dy_e], [dx_n, dy_w]]
}

/// Quadrature weight of one corner gradient.
#[inline]
pub fn corner_weight(h: f64) -> f64 {
    0.25 * h * h
}

/// `Σ_q W s_q · ∂g_q/∂u_a` for each corner `a`.
#[inline]
pub fn corner_forces(s: &[Vec2; 4], h: f64) -> [f64; 4] {
    let w = corner_weight(h) / h;
    let mut out = [0.0; 4];
    for q in 0..4 {
        for a in 0..4 {
            out[a] += w * (s[q][0] * D[q][0][a] + s[q][1] * D[q][1][a]);
        }
    }
    out
}

/// `Σ_q W D_qᵀ H_q D_q` for per-corner symmetric metrics `H_q`.
#[inline]
pub fn corner_stiffness(hs: &[Sym2; 4], h: f64) -> [[f64; 4]; 4] {
    let w = corner_weight(h) / (h * h);
    let mut k = [[0.0; 4]; 4];
    for q in 0..4 {
        let m = &hs[q];
        let dq = &D[q];
        for a in 0..4 {
            let ha = [
                m[0] * dq[0][a] + m[1] * dq[1][a],
                m[1] * dq[0][a] + m[2] * dq[1][a],
            ];
            for b in 0..4 {
                k[a][b] += w * (ha[0] * dq[0][b] + ha[1] * dq[1][b]);
            }
        }
    }
    k
}

/// Boundary datum `ψ`.
#[derive(Clone)]
pub enum Datum {
    Constant(f64),
    /// `c0 + cx x + cy y`.
    Linear { c0: f64, cx: f64, cy: f64 },
    /// `amplitude · r^γ cos θ` about `center`.
    Power { amplitude: f64, gamma: f64, center: Point },
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Constant(c) => write!(f, "Constant({c})"),
            Datum::Linear { c0, cx, cy } => write!(f, "Linear({c0} + {cx} x + {cy} y)"),
            Datum::Power { amplitude, gamma, center } => {
                write!(f, "Power({amplitude} r^{gamma} cos θ about {center})")
            }
            Datum::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Datum {
    /// `ψ = x₁`.
    pub fn x1() -> Self {
        Datum::Linear { c0: 0.0, cx: 1.0, cy: 0.0 }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Datum::Constant(c) => *c,
            Datum::Linear { c0, cx, cy } => c0 + cx * p.x + cy * p.y,
            Datum::Power { amplitude, gamma, center } => {
                let d = p - *center;
                let r = d.norm();
                if r == 0.0 {
                    0.0
                } else {
                    amplitude * r.powf(*gamma) * (d.x / r)
                }
            }
            Datum::Custom(f) => f(p),
        }
    }

    pub fn scaled(&self, t: f64) -> Datum {
        match self {
            Datum::Constant(c) => Datum::Constant(t * c),
            Datum::Linear { c0, cx, cy } => Datum::Linear { c0: t * c0, cx: t * cx, cy: t * cy },
            Datum::Power { amplitude, gamma, center } => {
                Datum::Power { amplitude: t * amplitude, gamma: *gamma, center: *center }
            }
            Datum::Custom(f) => {
                let f = f.clone();
                Datum::Custom(Arc::new(move |p| t * f(p)))
            }
        }
    }
}

/// Domain, grid, integrand and datum of one elastic problem.
pub struct Problem {
    domain: Domain,
    grid: Grid,
    integrand: Integrand,
    datum: Datum,
    laws: Vec<CellLaw>,
    options: SolveOptions,
    uncut: OnceLock<std::result::Result<(Vec<f64>, f64), String>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("integrand", &self.integrand)
            .field("datum", &self.datum)
            .finish()
    }
}

impl Problem {
    pub fn new(domain: Domain, grid: Grid, integrand: Integrand, datum: Datum) -> Result<Arc<Self>> {
        let r = domain.rect();
        let o = grid.origin();
        let tol = 1e-9 * domain.size();
        let far = grid.node_pos(grid.nx(), grid.ny());
        if (o.x - r.x0).abs() > tol
            || (o.y - r.y0).abs() > tol
            || (far.x - r.x1).abs() > tol
            || (far.y - r.y1).abs() > tol
        {
            return Err(Error::invalid("grid does not cover the domain exactly"));
        }
        let laws = integrand.sample(&grid);
        Ok(Arc::new(Problem {
            domain,
            grid,
            integrand,
            datum,
            laws,
            options: SolveOptions::default(),
            uncut: OnceLock::new(),
        }))
    }

    /// Same geometry and integrand with another datum.
    pub fn with_datum(&self, datum: Datum) -> Arc<Self> {
        Arc::new(Problem {
            domain: self.domain.clone(),
            grid: self.grid,
            integrand: self.integrand,
            datum,
            laws: self.laws.clone(),
            options: self.options,
            uncut: OnceLock::new(),
        })
    }

    /// Same problem solved with other tolerances.
    pub fn with_options(&self, options: SolveOptions) -> Arc<Self> {
        Arc::new(Problem {
            domain: self.domain.clone(),
            grid: self.grid,
            integrand: self.integrand,
            datum: self.datum.clone(),
            laws: self.laws.clone(),
            options,
            uncut: OnceLock::new(),
        })
    }

    /// Tolerances used by every solve on this problem.
    pub fn options(&self) -> SolveOptions {
        self.options
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn integrand(&self) -> &Integrand {
        &self.integrand
    }

    pub fn datum(&self) -> &Datum {
        &self.datum
    }

    pub fn laws(&self) -> &[CellLaw] {
        &self.laws
    }

    pub fn empty_crack(&self) -> CrackSet {
        CrackSet::empty(&self.grid)
    }

    /// Cut topology with this problem's Dirichlet part.
    pub fn topology(&self, crack: &CrackSet) -> Result<CutTopology> {
        CutTopology::with_domain(&self.domain, &self.grid, crack)
    }

    /// Nodal values and bulk energy of the uncracked elastic solution (computed once).
    pub fn uncut_solution(&self) -> Result<(&[f64], f64)> {
        let entry = self.uncut.get_or_init(|| {
            let crack = self.empty_crack();
            solve_values(self, &crack, None)
                .map(|(topo_values, report)| (topo_values.1, report.bulk_energy))
                .map_err(|e| e.to_string())
        });
        match entry {
            Ok((v, e)) => Ok((v.as_slice(), *e)),
            Err(msg) => Err(Error::SingularSystem(msg.clone())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveReport {
    /// Total conjugate-gradient iterations.
    pub iterations: usize,
    pub newton_steps: usize,
    /// Final relative residual.
    pub residual: f64,
    pub bulk_energy: f64,
    pub wall_time: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub linear_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { linear_tol: LINEAR_TOL, newton_tol: NEWTON_TOL, max_newton: 200 }
    }
}

/// Nodal displacement on a cut topology.
#[derive(Clone, Debug)]
pub struct ScalarField {
    problem: Arc<Problem>,
    crack: CrackSet,
    topology: Arc<CutTopology>,
    values: Vec<f64>,
}

impl ScalarField {
    /// Evaluate an analytic function at every DOF (split nodes are sampled on their own side).
    pub fn from_fn(problem: &Arc<Problem>, crack: &CrackSet, f: impl Fn(Point) -> f64) -> Result<Self> {
        let topo = problem.topology(crack)?;
        let values = (0..topo.n_dofs()).map(|d| f(topo.dof_point(d))).collect();
        Ok(ScalarField {
            problem: problem.clone(),
            crack: crack.clone(),
            topology: Arc::new(topo),
            values,
        })
    }

    pub fn from_values(problem: &Arc<Problem>, topology: Arc<CutTopology>, crack: &CrackSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != topology.n_dofs() {
            return Err(Error::invalid("value count does not match the topology"));
        }
        Ok(ScalarField { problem: problem.clone(), crack: crack.clone(), topology, values })
    }

    pub fn problem(&self) -> &Arc<Problem> {
        &self.problem
    }

    pub fn crack(&self) -> &CrackSet {
        &self.crack
    }

    pub fn topology(&self) -> &CutTopology {
        &self.topology
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    pub fn scaled(&self, t: f64) -> ScalarField {
        ScalarField {
            problem: self.problem.clone(),
            crack: self.crack.clone(),
            topology: self.topology.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn cell_values(&self, c: usize) -> [f64; 4] {
        let d = self.topology.cell_dofs(c);
        [self.values[d[0]], self.values[d[1]], self.values[d[2]], self.values[d[3]]]
    }

    pub fn cell_gradients(&self, c: usize) -> [Vec2; 4] {
        corner_gradients(self.cell_values(c), self.grid().h())
    }

    /// Cell-averaged gradient.
    pub fn mean_gradient(&self, c: usize) -> Vec2 {
        let g = self.cell_gradients(c);
        [
            0.25 * (g[0][0] + g[1][0] + g[2][0] + g[3][0]),
            0.25 * (g[0][1] + g[1][1] + g[2][1] + g[3][1]),
        ]
    }

    /// Energy of one cell.
    pub fn cell_energy(&self, c: usize) -> f64 {
        let law = &self.problem.laws()[c];
        let w = corner_weight(self.grid().h());
        self.cell_gradients(c).iter().map(|g| w * law.f(*g)).sum()
    }

    /// `Σ W |∇u|^p` over one cell.
    pub fn cell_gradient_power(&self, c: usize, p: f64) -> f64 {
        let w = corner_weight(self.grid().h());
        self.cell_gradients(c).iter().map(|g| w * dot(*g, *g).powf(0.5 * p)).sum()
    }

    pub fn bulk_energy(&self) -> f64 {
        bulk_energy(self)
    }

    pub fn total_energy(&self, k: f64) -> f64 {
        total_energy(self, k)
    }

    pub fn stress(&self) -> StressField {
        stress(self)
    }

    /// Value at a DOF.
    pub fn value(&self, d: usize) -> f64 {
        self.values[d]
    }

    /// CSV rows `i,j,side,u`.
    pub fn csv_rows(&self) -> Vec<String> {
        let g = self.grid();
        let mut rows = Vec::with_capacity(self.values.len());
        let mut side = 0;
        for d in 0..self.values.len() {
            let n = self.topology.dof_node(d);
            if d > 0 && self.topology.dof_node(d - 1) == n {
                side += 1;
            } else {
                side = 0;
            }
            let (i, j) = g.node_ij(n);
            rows.push(format!("{i},{j},{side},{}", fmt_f64(self.values[d])));
        }
        rows
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

/// Per-corner stress `σ = ∂f(x, ∇u)` with equilibrium residuals.
#[derive(Clone, Debug)]
pub struct StressField {
    pub sigma: Vec<[Vec2; 4]>,
    /// Largest nodal force imbalance at interior free DOFs, relative to the force scale.
    pub divergence_residual: f64,
    /// Same on free DOFs lying on the Neumann boundary or on the crack.
    pub flux_residual: f64,
    /// Normalization used for both residuals.
    pub force_scale: f64,
}

impl StressField {
    pub fn mean(&self, c: usize) -> Vec2 {
        let s = &self.sigma[c];
        [
            0.25 * (s[0][0] + s[1][0] + s[2][0] + s[3][0]),
            0.25 * (s[0][1] + s[1][1] + s[2][1] + s[3][1]),
        ]
    }

    /// CSV rows `cell_i,cell_j,sx,sy` (cell averages).
    pub fn csv_rows(&self, grid: &Grid) -> Vec<String> {
        (0..self.sigma.len())
            .map(|c| {
                let (i, j) = grid.cell_ij(c);
                let m = self.mean(c);
                format!("{i},{j},{},{}", fmt_f64(m[0]), fmt_f64(m[1]))
            })
            .collect()
    }
}

pub fn bulk_energy(field: &ScalarField) -> f64 {
    (0..field.grid().n_cells()).map(|c| field.cell_energy(c)).sum()
}

pub fn total_energy(field: &ScalarField, k: f64) -> f64 {
    bulk_energy(field) + k * field.crack().h1_measure()
}

pub fn stress(field: &ScalarField) -> StressField {
    let grid = field.grid();
    let h = grid.h();
    let laws = field.problem.laws();
    let topo = field.topology();
    let n = topo.n_dofs();
    let mut force = vec![0.0; n];
    let mut scale = vec![0.0; n];
    let mut sigma = Vec::with_capacity(grid.n_cells());
    for c in 0..grid.n_cells() {
        let g = field.cell_gradients(c);
        let s = [laws[c].grad(g[0]), laws[c].grad(g[1]), laws[c].grad(g[2]), laws[c].grad(g[3])];
        let fc = corner_forces(&s, h);
        let abs = [
            [s[0][0].abs(), s[0][1].abs()],
            [s[1][0].abs(), s[1][1].abs()],
            [s[2][0].abs(), s[2][1].abs()],
            [s[3][0].abs(), s[3][1].abs()],
        ];
        let fa = corner_forces(&abs, h);
        let d = topo.cell_dofs(c);
        for a in 0..4 {
            force[d[a]] += fc[a];
            scale[d[a]] += fa[a].abs();
        }
        sigma.push(s);
    }
    let force_scale = scale.iter().copied().fold(0.0, f64::max);
    let on_free_boundary = free_boundary_dofs(field);
    let pinned = pinned_dofs(topo);
    let (mut div, mut flux) = (0.0f64, 0.0f64);
    for d in 0..n {
        if topo.is_constrained(d) || pinned.contains(&d) {
            continue;
        }
        let r = force[d].abs();
        if on_free_boundary[d] {
            flux = flux.max(r);
        } else {
            div = div.max(r);
        }
    }
    let norm = if force_scale > 0.0 { force_scale } else { 1.0 };
    StressField {
        sigma,
        divergence_residual: div / norm,
        flux_residual: flux / norm,
        force_scale,
    }
}

/// DOFs on the outer boundary or on a crack.
fn free_boundary_dofs(field: &ScalarField) -> Vec<bool> {
    let topo = field.topology();
    let grid = field.grid();
    let crack_nodes = field.crack().nodes();
    (0..topo.n_dofs())
        .map(|d| {
            let n = topo.dof_node(d);
            let (i, j) = grid.node_ij(n);
            i == 0 || j == 0 || i == grid.nx() || j == grid.ny() || crack_nodes.contains(&n)
        })
        .collect()
}

/// First DOF of every component with no constrained DOF.
pub(crate) fn pinned_dofs(topo: &CutTopology) -> Vec<usize> {
    let nc = topo.n_components();
    let mut has_fixed = vec![false; nc];
    let mut first = vec![usize::MAX; nc];
    for d in 0..topo.n_dofs() {
        let c = topo.component(d);
        if topo.is_constrained(d) {
            has_fixed[c] = true;
        }
        if first[c] == usize::MAX {
            first[c] = d;
        }
    }
    (0..nc).filter(|&c| !has_fixed[c]).map(|c| first[c]).collect()
}

/// The uncracked elastic solution as a field (solved once per problem).
pub fn uncut_field(problem: &Arc<Problem>) -> Result<ScalarField> {
    let (values, _) = problem.uncut_solution()?;
    let crack = problem.empty_crack();
    let topo = problem.topology(&crack)?;
    ScalarField::from_values(problem, Arc::new(topo), &crack, values.to_vec())
}

/// Solve the elastic problem on the cracked domain.
pub fn solve(problem: &Arc<Problem>, crack: &CrackSet) -> Result<(ScalarField, SolveReport)> {
    solve_with(problem, crack, problem.options(), None)
}

/// Solve with explicit options and an optional nodal initial guess (lifted onto the cut DOFs).
pub fn solve_with(
    problem: &Arc<Problem>,
    crack: &CrackSet,
    opts: SolveOptions,
    guess: Option<&[f64]>,
) -> Result<(ScalarField, SolveReport)> {
    let ((topo, values), report) = solve_values_opts(problem, crack, guess, opts)?;
    Ok((
        ScalarField { problem: problem.clone(), crack: crack.clone(), topology: Arc::new(topo), values },
        report,
    ))
}

fn solve_values(
    problem: &Problem,
    crack: &CrackSet,
    guess: Option<&[f64]>,
) -> Result<((CutTopology, Vec<f64>), SolveReport)> {
    solve_values_opts(problem, crack, guess, problem.options())
}

fn solve_values_opts(
    problem: &Problem,
    crack: &CrackSet,
    guess: Option<&[f64]>,
    opts: SolveOptions,
) -> Result<((CutTopology, Vec<f64>), SolveReport)> {
    let start = Instant::now();
    // A crack covering all of ∂_DΩ frees the body; every component is then pinned below.
    if problem.domain().dirichlet_length() == 0.0 {
        return Err(Error::SingularSystem("no Dirichlet boundary".into()));
    }
    let topo = problem.topology(crack)?;
    let grid = problem.grid();
    let n = topo.n_dofs();
    let mut fixed = vec![false; n];
    let mut values = vec![0.0; n];
    for d in 0..n {
        if topo.is_constrained(d) {
            fixed[d] = true;
            let (i, j) = grid.node_ij(topo.dof_node(d));
            values[d] = problem.datum().eval(grid.node_pos(i, j));
        }
    }
    let mut floating = vec![false; topo.n_components()];
    for d in pinned_dofs(&topo) {
        floating[topo.component(d)] = true;
        fixed[d] = true;
    }
    if let Some(g) = guess {
        for d in 0..n {
            if !fixed[d] && !floating[topo.component(d)] {
                values[d] = g[topo.dof_node(d)];
            }
        }
    }
    let cells: Vec<[usize; 4]> = (0..grid.n_cells()).map(|c| topo.cell_dofs(c)).collect();
    let system = CellSystem { h: grid.h(), cells: &cells, laws: problem.laws(), fixed: &fixed, load: None };
    let mut report = if problem.integrand().is_linear() {
        system.minimize(&mut values, true, 0.0, opts)?
    } else {
        let start_values = values.clone();
        // A quadratic solve with the same data is a good Newton start.
        let quad = vec![CellLaw::Power { p: 2.0, c: 1.0 }; grid.n_cells()];
        let warm = CellSystem { laws: &quad, ..system };
        let loose = SolveOptions { linear_tol: 1e-6, ..opts };
        if guess.is_none() {
            warm.minimize(&mut values, true, 0.0, loose)?;
        }
        let datum_scale = (0..n)
            .filter(|&d| topo.is_constrained(d))
            .map(|d| values[d].abs())
            .fold(0.0, f64::max);
        let eps = 1e-8 * datum_scale.max(f64::MIN_POSITIVE) / problem.domain().size();
        match system.minimize(&mut values, false, eps, opts) {
            // An uncut guess can sit far from the cracked minimizer; restart from the quadratic solve.
            Err(Error::NoConvergence { .. }) if guess.is_some() => {
                values = start_values;
                warm.minimize(&mut values, true, 0.0, loose)?;
                system.minimize(&mut values, false, eps, opts)?
            }
            other => other?,
        }
    };
    report.bulk_energy = system.energy(&values);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(((topo, values), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Rect, Side};

    fn square(n: usize, sides: &[Side], datum: Datum) -> Arc<Problem> {
        let d = Domain::with_dirichlet_sides(Rect::unit_square(), sides);
        let g = Grid::for_domain(&d, n, n).unwrap();
        Problem::new(d, g, Integrand::dirichlet(), datum).unwrap()
    }

    #[test]
    fn linear_field_is_exact() {
        let p = square(16, &Side::ALL, Datum::x1());
        let (u, rep) = solve(&p, &p.empty_crack()).unwrap();
        for d in 0..u.values().len() {
            let x = u.topology().dof_point(d).x;
            assert!((u.value(d) - x).abs() < 1e-10);
        }
        assert!((rep.bulk_energy - 1.0).abs() < 1e-10);
        let s = u.stress();
        for c in 0..p.grid().n_cells() {
            let m = s.mean(c);
            assert!((m[0] - 2.0).abs() < 1e-9 && m[1].abs() < 1e-9);
        }
        assert!(s.divergence_residual < 1e-9);
    }

    #[test]
    fn constant_datum_gives_constant_field() {
        let p = square(8, &Side::ALL, Datum::Constant(5.0));
        let c = CrackSet::from_segment(p.grid(), Point::new(0.25, 0.5), Point::new(0.75, 0.5)).unwrap();
        let (u, rep) = solve(&p, &c).unwrap();
        assert!(u.values().iter().all(|v| (v - 5.0).abs() < 1e-9));
        assert!(rep.bulk_energy.abs() < 1e-16);
        assert!(u.stress().sigma.iter().flatten().all(|s| s[0].abs() < 1e-8 && s[1].abs() < 1e-8));
    }

    #[test]
    fn full_cut_disconnects_data() {
        let p = square(8, &[Side::Left, Side::Right], Datum::x1());
        let c = CrackSet::from_segment(p.grid(), Point::new(0.5, 0.0), Point::new(0.5, 1.0)).unwrap();
        let (u, rep) = solve(&p, &c).unwrap();
        assert!(rep.bulk_energy.abs() < 1e-18);
        assert!((u.total_energy(1.0) - 1.0).abs() < 1e-12);
        let g = p.grid();
        let left = u.topology().node_dofs(g.node_index(0, 3)).start;
        assert!(u.value(left).abs() < 1e-10);
        let right = u.topology().node_dofs(g.node_index(8, 3)).start;
        assert!((u.value(right) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn p_power_newton_matches_linear_field() {
        let d = Domain::with_dirichlet_sides(Rect::unit_square(), &Side::ALL);
        let g = Grid::for_domain(&d, 12, 12).unwrap();
        let f = Integrand::p_power(1.5, crate::energy::ScalarCoefficient::Constant(1.0)).unwrap();
        let p = Problem::new(d, g, f, Datum::Linear { c0: 0.0, cx: 1.0, cy: 0.5 }).unwrap();
        let (u, _) = solve(&p, &p.empty_crack()).unwrap();
        for d in 0..u.values().len() {
            let q = u.topology().dof_point(d);
            assert!((u.value(d) - (q.x + 0.5 * q.y)).abs() < 1e-7);
        }
    }

    #[test]
    fn energies_of_trivial_states() {
        let p = square(10, &Side::ALL, Datum::Constant(0.0));
        let c = CrackSet::from_segment(p.grid(), Point::new(0.2, 0.5), Point::new(0.5, 0.5)).unwrap();
        let (u, _) = solve(&p, &c).unwrap();
        assert!((u.total_energy(2.0) - 0.6).abs() < 1e-12);
        let q = square(10, &Side::ALL, Datum::x1());
        let (v, _) = solve(&q, &q.empty_crack()).unwrap();
        assert!((v.total_energy(1.0) - 1.0).abs() < 1e-10);
    }
}
