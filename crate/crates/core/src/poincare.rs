//! Optimal Poincaré and Poincaré-Korn constants on subgraph domains
//! `Q_f = {0 ≤ x ≤ s, 0 ≤ y ≤ s f(x/s)}` by constrained inverse iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::elastic::{corner_gradients, corner_stiffness, corner_weight, fmt_f64};
use crate::error::{Error, Result};
use crate::linalg::{dot, pcg, CellPattern, Csr};

/// Knots of the random profiles.
pub const PROFILE_KNOTS: usize = 8;
const EIGEN_TOL: f64 = 1e-11;
const MAX_ITER: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoincareCase {
    /// Scalar, zero on the base.
    ZeroOnBase,
    /// Scalar, zero mean.
    ZeroMean,
    /// Vector, zero on the base; symmetrized gradient.
    VectorZeroOnBase,
    /// Vector, orthogonal to rigid motions; symmetrized gradient.
    VectorRigid,
}

impl PoincareCase {
    pub const ALL: [PoincareCase; 4] =
        [PoincareCase::ZeroOnBase, PoincareCase::ZeroMean, PoincareCase::VectorZeroOnBase, PoincareCase::VectorRigid];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "i" => Some(PoincareCase::ZeroOnBase),
            "ii" => Some(PoincareCase::ZeroMean),
            "iii" => Some(PoincareCase::VectorZeroOnBase),
            "iv" => Some(PoincareCase::VectorRigid),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PoincareCase::ZeroOnBase => "i",
            PoincareCase::ZeroMean => "ii",
            PoincareCase::VectorZeroOnBase => "iii",
            PoincareCase::VectorRigid => "iv",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, PoincareCase::VectorZeroOnBase | PoincareCase::VectorRigid)
    }

    fn pins_base(self) -> bool {
        matches!(self, PoincareCase::ZeroOnBase | PoincareCase::VectorZeroOnBase)
    }
}

/// Piecewise-linear profile `f: [0,1] → [1, M]` given by its knots.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDomain {
    knots: Vec<(f64, f64)>,
    lipschitz: f64,
    height: f64,
    /// Cells per unit length.
    resolution: usize,
    scale: f64,
}

impl GraphDomain {
    pub fn new(knots: Vec<(f64, f64)>, lipschitz: f64, height: f64, resolution: usize) -> Result<Self> {
        if knots.len() < 2 || knots[0].0 != 0.0 || knots.last().unwrap().0 != 1.0 {
            return Err(Error::invalid("profile knots must span [0, 1]"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("profile knots must be increasing"));
        }
        if !(height >= 1.0) || resolution == 0 {
            return Err(Error::invalid("need M ≥ 1 and a positive resolution"));
        }
        for &(_, f) in &knots {
            if f < 1.0 - 1e-12 || f > height + 1e-12 {
                return Err(Error::invalid(format!("profile value {f} outside [1, {height}]")));
            }
        }
        for w in knots.windows(2) {
            if (w[1].1 - w[0].1).abs() > lipschitz * (w[1].0 - w[0].0) * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::invalid(format!("profile is not {lipschitz}-Lipschitz")));
            }
        }
        Ok(GraphDomain { knots, lipschitz, height, resolution, scale: 1.0 })
    }

    /// `f ≡ 1`: the unit square.
    pub fn flat(resolution: usize) -> Self {
        GraphDomain::new(vec![(0.0, 1.0), (1.0, 1.0)], 0.0, 1.0, resolution).expect("flat profile is valid")
    }

    /// Random profile: start uniform in `[1, M]`, slopes uniform in `[-L, L]`, values clamped.
    pub fn random(rng: &mut impl Rng, lipschitz: f64, height: f64, resolution: usize) -> Result<Self> {
        let dx = 1.0 / (PROFILE_KNOTS - 1) as f64;
        let mut v = if height > 1.0 { rng.random_range(1.0..=height) } else { 1.0 };
        let mut knots = vec![(0.0, v)];
        for i in 1..PROFILE_KNOTS {
            let slope = if lipschitz > 0.0 { rng.random_range(-lipschitz..=lipschitz) } else { 0.0 };
            v = (v + slope * dx).clamp(1.0, height);
            knots.push((if i == PROFILE_KNOTS - 1 { 1.0 } else { i as f64 * dx }, v));
        }
        GraphDomain::new(knots, lipschitz, height, resolution)
    }

    /// The same profile on the domain dilated by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        GraphDomain { scale: self.scale * s, ..self.clone() }
    }

    pub fn profile(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|&(xk, _)| xk <= x).clamp(1, self.knots.len() - 1);
        let ((x0, f0), (x1, f1)) = (self.knots[k - 1], self.knots[k]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn height(&self) -> f64 {
        self.height
    }
}

/// Active cells of the staircase approximation of `Q_f`.
struct Mesh {
    h: f64,
    /// Per active cell: local node numbers (SW, SE, NE, NW).
    cells: Vec<[usize; 4]>,
    /// Node positions.
    points: Vec<(f64, f64)>,
    /// Lumped mass per node.
    mass: Vec<f64>,
}

impl Mesh {
    fn new(d: &GraphDomain) -> Self {
        let n = d.resolution;
        let ny = (d.height * n as f64).ceil() as usize;
        let h = d.scale / n as f64;
        let mut node_id = vec![usize::MAX; (n + 1) * (ny + 1)];
        let mut cells = Vec::new();
        let mut points = Vec::new();
        let mut mass = Vec::new();
        let w = corner_weight(h);
        for j in 0..ny {
            for i in 0..n {
                let xc = (i as f64 + 0.5) / n as f64;
                let yc = (j as f64 + 0.5) / n as f64;
                if yc >= d.profile(xc) {
                    continue;
                }
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let ids = corners.map(|(a, b)| {
                    let g = b * (n + 1) + a;
                    if node_id[g] == usize::MAX {
                        node_id[g] = points.len();
                        points.push((a as f64 * h, b as f64 * h));
                        mass.push(0.0);
                    }
                    node_id[g]
                });
                for id in ids {
                    mass[id] += w;
                }
                cells.push(ids);
            }
        }
        Mesh { h, cells, points, mass }
    }

    fn n_nodes(&self) -> usize {
        self.points.len()
    }
}

/// Local stiffness of `∫|e(u)|²` for `u = (u_x at 4 corners, u_y at 4 corners)`.
fn korn_stiffness(h: f64) -> [[f64; 8]; 8] {
    // Columns of the corner-gradient operator, recovered from unit corner values.
    let mut d = [[[0.0; 4]; 2]; 4];
    for a in 0..4 {
        let mut e = [0.0; 4];
        e[a] = 1.0;
        let g = corner_gradients(e, h);
        for q in 0..4 {
            d[q][0][a] = g[q][0];
            d[q][1][a] = g[q][1];
        }
    }
    let w = corner_weight(h);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = [[0.0; 8]; 8];
    for q in 0..4 {
        let mut rows = [[0.0; 8]; 3];
        for a in 0..4 {
            rows[0][a] = d[q][0][a];
            rows[1][4 + a] = d[q][1][a];
            rows[2][a] = s * d[q][1][a];
            rows[2][4 + a] = s * d[q][0][a];
        }
        for r in &rows {
            for a in 0..8 {
                for b in 0..8 {
                    k[a][b] += w * r[a] * r[b];
                }
            }
        }
    }
    k
}

struct Operator {
    stiffness: Csr,
    /// Diagonal lumped mass per unknown.
    mass: Vec<f64>,
    /// Unknown → (node, component).
    unknowns: Vec<(usize, usize)>,
    /// M-orthonormal basis of the constraint space projected out.
    kernel: Vec<Vec<f64>>,
}

fn build_operator(mesh: &Mesh, case: PoincareCase) -> Operator {
    let comps = if case.is_vector() { 2 } else { 1 };
    let mut index = vec![u32::MAX; mesh.n_nodes() * comps];
    let mut unknowns = Vec::new();
    for c in 0..comps {
        for n in 0..mesh.n_nodes() {
            if case.pins_base() && mesh.points[n].1 == 0.0 {
                continue;
            }
            index[c * mesh.n_nodes() + n] = unknowns.len() as u32;
            unknowns.push((n, c));
        }
    }
    let lookup = |n: usize, c: usize| {
        let k = index[c * mesh.n_nodes() + n];
        (k != u32::MAX).then_some(k)
    };
    let stiffness = if case.is_vector() {
        let cells: Vec<[Option<u32>; 8]> = mesh
            .cells
            .iter()
            .map(|c| {
                let mut out = [None; 8];
                for a in 0..4 {
                    out[a] = lookup(c[a], 0);
                    out[4 + a] = lookup(c[a], 1);
                }
                out
            })
            .collect();
        let mut pat = CellPattern::new(unknowns.len(), &cells);
        let local = korn_stiffness(mesh.h);
        for c in 0..cells.len() {
            pat.add_cell(c, &local);
        }
        pat.matrix
    } else {
        let cells: Vec<[Option<u32>; 4]> = mesh.cells.iter().map(|c| c.map(|n| lookup(n, 0))).collect();
        let mut pat = CellPattern::new(unknowns.len(), &cells);
        let local = corner_stiffness(&[[1.0, 0.0, 1.0]; 4], mesh.h);
        for c in 0..cells.len() {
            pat.add_cell(c, &local);
        }
        pat.matrix
    };
    let mass: Vec<f64> = unknowns.iter().map(|&(n, _)| mesh.mass[n]).collect();
    let raw: Vec<Vec<f64>> = match case {
        PoincareCase::ZeroMean => vec![vec![1.0; unknowns.len()]],
        PoincareCase::VectorRigid => {
            let t = |comp: usize| unknowns.iter().map(|&(_, c)| if c == comp { 1.0 } else { 0.0 }).collect();
            // Infinitesimal rotation (−y, x).
            let rot = unknowns
                .iter()
                .map(|&(n, c)| if c == 0 { -mesh.points[n].1 } else { mesh.points[n].0 })
                .collect();
            vec![t(0), t(1), rot]
        }
        _ => Vec::new(),
    };
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    for mut v in raw {
        for b in &kernel {
            let c = m_dot(&mass, &v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let nrm = m_dot(&mass, &v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        kernel.push(v);
    }
    Operator { stiffness, mass, unknowns, kernel }
}

fn m_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

impl Operator {
    fn project(&self, v: &mut [f64]) {
        // Two passes keep the result orthogonal to roundoff.
        for _ in 0..2 {
            for b in &self.kernel {
                let c = m_dot(&self.mass, v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
    }

    fn rayleigh(&self, v: &[f64]) -> f64 {
        let mut kv = vec![0.0; v.len()];
        self.stiffness.matvec(v, &mut kv);
        dot(v, &kv) / m_dot(&self.mass, v, v)
    }
}

/// Optimal constant with its extremal field.
#[derive(Clone, Debug)]
pub struct ConstantReport {
    pub case: PoincareCase,
    /// `max ‖u‖² / ‖∇u‖²` (or `‖e(u)‖²`) over the constrained discrete fields.
    pub constant: f64,
    /// Extremal field per node; vector cases interleave `(u_x, u_y)`.
    pub field: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub iterations: usize,
    /// Largest `|⟨u, r⟩_M| / (‖u‖_M ‖r‖_M)` over the constraint basis.
    pub constraint_residual: f64,
    pub resolution: usize,
}

impl ConstantReport {
    /// `‖u‖²_M / a(u, u)` for a nodal field of this report's shape.
    fn quotient(op: &Operator, v: &[f64]) -> f64 {
        1.0 / op.rayleigh(v)
    }
}

/// Smallest constrained eigenvalue of `K u = λ M u` by inverse iteration; `C = 1/λ`.
pub fn optimal_constant(domain: &GraphDomain, case: PoincareCase) -> Result<ConstantReport> {
    let mesh = Mesh::new(domain);
    let op = build_operator(&mesh, case);
    let n = op.unknowns.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    op.project(&mut x);
    let mut lambda = op.rayleigh(&x);
    let mut y = vec![0.0; n];
    let mut converged = None;
    for it in 1..=MAX_ITER {
        let b: Vec<f64> = x.iter().zip(&op.mass).map(|(v, m)| v * m).collect();
        // Warm start: x is close to an eigenvector, so K⁻¹ M x ≈ x / λ.
        y.iter_mut().zip(&x).for_each(|(yv, xv)| *yv = xv / lambda);
        pcg(&op.stiffness, &b, &mut y, 1e-12, 20 * n + 100)?;
        op.project(&mut y);
        let nrm = m_dot(&op.mass, &y, &y).sqrt();
        x.iter_mut().zip(&y).for_each(|(xv, yv)| *xv = yv / nrm);
        let next = op.rayleigh(&x);
        let done = (lambda - next).abs() <= EIGEN_TOL * next;
        lambda = next;
        if done {
            converged = Some(it);
            break;
        }
    }
    let iterations = converged.ok_or(Error::EigenNoConvergence { iterations: MAX_ITER })?;
    let comps = if case.is_vector() { 2 } else { 1 };
    let mut field = vec![0.0; mesh.n_nodes() * comps];
    for (k, &(node, c)) in op.unknowns.iter().enumerate() {
        field[node * comps + c] = x[k];
    }
    let xn = m_dot(&op.mass, &x, &x).sqrt();
    let constraint_residual =
        op.kernel.iter().map(|b| m_dot(&op.mass, &x, b).abs() / xn).fold(0.0, f64::max);
    Ok(ConstantReport {
        case,
        constant: 1.0 / lambda,
        field,
        points: mesh.points,
        iterations,
        constraint_residual,
        resolution: domain.resolution,
    })
}

/// `‖u‖² / ‖∇u‖²` (or `‖e(u)‖²`) of an arbitrary field after applying the case constraints.
pub fn constrained_quotient(domain: &GraphDomain, case: PoincareCase, values: impl Fn(f64, f64, usize) -> f64) -> f64 {
    let mesh = Mesh::new(domain);
    let op = build_operator(&mesh, case);
    let mut v: Vec<f64> = op.unknowns.iter().map(|&(n, c)| values(mesh.points[n].0, mesh.points[n].1, c)).collect();
    op.project(&mut v);
    ConstantReport::quotient(&op, &v)
}

/// Sum of `‖e(u)‖²` for a vector field given per node; used to check rigid motions.
pub fn korn_energy(domain: &GraphDomain, u: impl Fn(f64, f64) -> (f64, f64)) -> f64 {
    let mesh = Mesh::new(domain);
    let local = korn_stiffness(mesh.h);
    let mut total = 0.0;
    for cell in &mesh.cells {
        let mut v = [0.0; 8];
        for a in 0..4 {
            let (x, y) = mesh.points[cell[a]];
            let (ux, uy) = u(x, y);
            v[a] = ux;
            v[4 + a] = uy;
        }
        for a in 0..8 {
            for b in 0..8 {
                total += v[a] * local[a][b] * v[b];
            }
        }
    }
    total
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub case: PoincareCase,
    pub lipschitz: f64,
    pub height: f64,
    pub resolution: usize,
    pub constants: Vec<f64>,
    pub profiles: Vec<GraphDomain>,
    pub max_constant: f64,
    pub worst: usize,
}

impl SweepReport {
    /// CSV rows `case,L,M,profile_id,C,resolution`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.constants
            .iter()
            .enumerate()
            .map(|(i, c)| {
                format!(
                    "{},{},{},{i},{},{}",
                    self.case.name(),
                    fmt_f64(self.lipschitz),
                    fmt_f64(self.height),
                    fmt_f64(*c),
                    self.resolution
                )
            })
            .collect()
    }
}

/// Constants over `samples` random profiles drawn from `seed` (profiles are drawn
/// sequentially, solves run in parallel).
pub fn uniformity_sweep(
    lipschitz: f64,
    height: f64,
    samples: usize,
    case: PoincareCase,
    resolution: usize,
    seed: u64,
) -> Result<SweepReport> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles = (0..samples)
        .map(|_| GraphDomain::random(&mut rng, lipschitz, height, resolution))
        .collect::<Result<Vec<_>>>()?;
    let constants = profiles
        .par_iter()
        .map(|d| optimal_constant(d, case).map(|r| r.constant))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0;
    for (i, &c) in constants.iter().enumerate() {
        if c > constants[worst] {
            worst = i;
        }
    }
    Ok(SweepReport {
        case,
        lipschitz,
        height,
        resolution,
        max_constant: constants[worst],
        worst,
        constants,
        profiles,
    })
}
