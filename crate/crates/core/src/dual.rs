//! Admissible stresses built from the elastic stress and dual bounds on the energy release.
//!
//! Near each cover member the elastic stress is multiplied by a cutoff and the divergence
//! this creates is removed by a p-Laplacian corrector solved on the collar. The result is
//! exactly balanced (up to solver tolerance) at every free degree of freedom of the cracked
//! grid, so the duality gap against the elastic stress bounds the energy release.

use std::sync::Arc;

use rayon::prelude::*;

use crate::elastic::{
    corner_forces, corner_gradients, corner_weight, fmt_f64, solve_with, uncut_field, Problem, ScalarField,
    SolveOptions, StressField,
};
use crate::energy::{dot, norm, CellLaw, Vec2};
use crate::error::{Error, Result};
use crate::fem::CellSystem;
use crate::geometry::{
    cover_crack, node_is_dirichlet, Cover, CoverShape, CrackSet, CutTopology, Grid, Orientation, Point, Side,
};

/// Default admissibility tolerance (relative to the stress force scale).
pub const ADMISSIBILITY_TOL: f64 = 1e-6;
/// Smallest member scale in grid cells.
pub const MIN_SCALE_CELLS: f64 = 2.0;

const NONE: u32 = u32::MAX;

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Cutoff of one member: 0 inside the member, 1 outside the doubled member.
pub fn member_cutoff(shape: &CoverShape, x: Point) -> f64 {
    let s = shape.scale();
    smoothstep((shape.gauge(x) - s) / s)
}

/// Cells where one member's cutoff acts.
#[derive(Clone, Debug, Default)]
pub struct MemberRegion {
    /// Cells where `φ = 0`, including every cell touching the member's crack.
    pub inner: Vec<usize>,
    /// Remaining cells with `φ < 1` and cells adjacent to the inner set.
    pub collar: Vec<usize>,
    /// `max |∇φ| · r` over the region.
    pub slope: f64,
}

#[derive(Clone, Debug)]
pub struct CutoffField {
    pub cover: Cover,
    /// Product cutoff at the grid nodes.
    pub nodal: Vec<f64>,
    /// Cell value used to weight the stress: 0 on inner cells, `φ(center)` elsewhere.
    pub cell: Vec<f64>,
    pub regions: Vec<MemberRegion>,
    /// Largest `|∇φ|` over the grid.
    pub gradient_bound: f64,
}

impl CutoffField {
    /// Uniform cutoff `φ ≡ 1` for an empty cover.
    pub fn is_trivial(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Build the product cutoff of a cover on a grid.
pub fn cutoff(cover: &Cover, grid: &Grid) -> Result<CutoffField> {
    let h = grid.h();
    let mut nodal = vec![1.0; grid.n_nodes()];
    let mut cell = vec![1.0; grid.n_cells()];
    let mut owner = vec![NONE; grid.n_cells()];
    let mut regions = Vec::with_capacity(cover.len());
    for (m, member) in cover.members.iter().enumerate() {
        let shape = &member.shape;
        let s = shape.scale();
        if s < MIN_SCALE_CELLS * h * (1.0 - 1e-9) {
            return Err(Error::UnresolvableCover(format!(
                "member {m} has scale {s} below {MIN_SCALE_CELLS} cells (h = {h})"
            )));
        }
        let c = shape.center();
        let reach = 2.0 * s + 2.0 * h;
        let (i0, i1) = index_range(c.x - reach, c.x + reach, grid.origin().x, h, grid.nx());
        let (j0, j1) = index_range(c.y - reach, c.y + reach, grid.origin().y, h, grid.ny());
        for j in j0..=j1 {
            for i in i0..=i1 {
                let n = grid.node_index(i, j);
                nodal[n] *= member_cutoff(shape, grid.node_pos(i, j));
            }
        }
        let crack_nodes = member.crack.nodes();
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        let mut in_inner = std::collections::HashSet::new();
        for j in j0..j1.min(grid.ny()) {
            for i in i0..i1.min(grid.nx()) {
                let cidx = grid.cell_index(i, j);
                let phi = member_cutoff(shape, grid.cell_center(cidx));
                let touches = grid.cell_nodes(cidx).iter().any(|n| crack_nodes.contains(n));
                if phi == 0.0 || touches {
                    inner.push(cidx);
                    in_inner.insert(cidx);
                } else if phi < 1.0 {
                    outer.push(cidx);
                }
            }
        }
        // Cells sharing a node with the inner set join the collar.
        let inner_nodes: std::collections::HashSet<usize> =
            inner.iter().flat_map(|&c| grid.cell_nodes(c)).collect();
        for j in j0..j1.min(grid.ny()) {
            for i in i0..i1.min(grid.nx()) {
                let cidx = grid.cell_index(i, j);
                if !in_inner.contains(&cidx)
                    && member_cutoff(shape, grid.cell_center(cidx)) >= 1.0
                    && grid.cell_nodes(cidx).iter().any(|n| inner_nodes.contains(n))
                {
                    outer.push(cidx);
                }
            }
        }
        outer.sort_unstable();
        for &cidx in inner.iter().chain(&outer) {
            if owner[cidx] != NONE {
                return Err(Error::UnresolvableCover(format!(
                    "members {} and {m} act on the same cell {cidx}",
                    owner[cidx]
                )));
            }
            owner[cidx] = m as u32;
        }
        regions.push(MemberRegion { inner, collar: outer, slope: 0.0 });
    }
    // Regions must not share nodes either, so every collar node belongs to one corrector.
    let mut node_owner = vec![NONE; grid.n_nodes()];
    for (m, r) in regions.iter().enumerate() {
        for &c in r.inner.iter().chain(&r.collar) {
            for n in grid.cell_nodes(c) {
                if node_owner[n] != NONE && node_owner[n] != m as u32 {
                    return Err(Error::UnresolvableCover(format!(
                        "members {} and {m} touch at node {n}",
                        node_owner[n]
                    )));
                }
                node_owner[n] = m as u32;
            }
        }
    }
    for (m, r) in regions.iter().enumerate() {
        for &c in &r.inner {
            cell[c] = 0.0;
        }
        for &c in &r.collar {
            cell[c] = member_cutoff(&cover.members[m].shape, grid.cell_center(c));
        }
    }
    let mut gradient_bound = 0.0f64;
    for (m, r) in regions.iter_mut().enumerate() {
        let s = cover.members[m].shape.scale();
        let mut g = 0.0f64;
        for &c in r.inner.iter().chain(&r.collar) {
            let v = grid.cell_nodes(c).map(|n| nodal[n]);
            for q in corner_gradients(v, h) {
                g = g.max(norm(q));
            }
        }
        r.slope = g * s;
        gradient_bound = gradient_bound.max(g);
    }
    Ok(CutoffField { cover: cover.clone(), nodal, cell, regions, gradient_bound })
}

fn index_range(lo: f64, hi: f64, origin: f64, h: f64, n: usize) -> (usize, usize) {
    let a = ((lo - origin) / h).floor().max(0.0) as usize;
    let b = (((hi - origin) / h).ceil().max(0.0) as usize).min(n);
    (a.min(n), b)
}

/// Which kinds of outer boundary the collar touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollarCase {
    Interior,
    Dirichlet,
    Neumann,
    Mixed,
}

impl CollarCase {
    pub fn name(self) -> &'static str {
        match self {
            CollarCase::Interior => "interior",
            CollarCase::Dirichlet => "dirichlet",
            CollarCase::Neumann => "neumann",
            CollarCase::Mixed => "mixed",
        }
    }
}

/// Corrector `η = |∇v|^{p-2}∇v` on one member's collar.
#[derive(Clone, Debug)]
pub struct Corrector {
    pub member: usize,
    pub case: CollarCase,
    /// Collar cells, aligned with `eta`.
    pub cells: Vec<usize>,
    pub eta: Vec<[Vec2; 4]>,
    /// `Σ_C W |η|^q`.
    pub eta_q: f64,
    /// `Σ_C W |σ|^q`.
    pub sigma_q: f64,
    pub iterations: usize,
}

impl Corrector {
    /// `∫|η|^q / ∫|σ|^q` over the collar (0 when the stress vanishes there).
    pub fn energy_ratio(&self) -> f64 {
        if self.sigma_q > 0.0 {
            self.eta_q / self.sigma_q
        } else {
            0.0
        }
    }
}

fn q_power(v: Vec2, q: f64) -> f64 {
    let n = norm(v);
    if n == 0.0 {
        0.0
    } else {
        n.powf(q)
    }
}

/// Solve the collar problem for one member.
///
/// `v` is fixed to zero at collar nodes on the Dirichlet boundary; collar components without
/// such nodes are pure Neumann problems and must have balanced sources.
pub fn corrector(
    problem: &Problem,
    sigma: &StressField,
    phi: &CutoffField,
    member: usize,
    opts: SolveOptions,
) -> Result<Corrector> {
    let grid = problem.grid();
    let h = grid.h();
    let p = problem.integrand().p();
    let q = problem.integrand().q();
    let region = &phi.regions[member];
    let w = corner_weight(h);

    // Local numbering of collar nodes.
    let mut local = std::collections::HashMap::new();
    let mut nodes = Vec::new();
    for &c in &region.collar {
        for n in grid.cell_nodes(c) {
            local.entry(n).or_insert_with(|| {
                nodes.push(n);
                nodes.len() - 1
            });
        }
    }
    let cells: Vec<[usize; 4]> = region.collar.iter().map(|&c| grid.cell_nodes(c).map(|n| local[&n])).collect();

    let mut load = vec![0.0; nodes.len()];
    for &c in region.inner.iter().chain(&region.collar) {
        let weight = 1.0 - phi.cell[c];
        if weight == 0.0 {
            continue;
        }
        let f = corner_forces(&sigma.sigma[c], h);
        for (a, n) in grid.cell_nodes(c).into_iter().enumerate() {
            if let Some(&k) = local.get(&n) {
                load[k] += weight * f[a];
            }
        }
    }

    let domain = problem.domain();
    let mut fixed = vec![false; nodes.len()];
    let (mut any_dirichlet, mut any_neumann) = (false, false);
    for (k, &n) in nodes.iter().enumerate() {
        let (i, j) = grid.node_ij(n);
        if i == 0 || j == 0 || i == grid.nx() || j == grid.ny() {
            if node_is_dirichlet(domain, grid, i, j) {
                fixed[k] = true;
                any_dirichlet = true;
            } else {
                any_neumann = true;
            }
        }
    }
    let case = match (any_dirichlet, any_neumann) {
        (false, false) => CollarCase::Interior,
        (true, false) => CollarCase::Dirichlet,
        (false, true) => CollarCase::Neumann,
        (true, true) => CollarCase::Mixed,
    };

    // Pure Neumann components: check the sources balance, then pin one node.
    let mut uf = crate::geometry::UnionFind::new(nodes.len());
    for cell in &cells {
        for a in 1..4 {
            uf.union(cell[0], cell[a]);
        }
    }
    let mut comp_fixed = std::collections::HashMap::new();
    for k in 0..nodes.len() {
        let r = uf.find(k);
        let e = comp_fixed.entry(r).or_insert((false, 0.0f64, 0.0f64, k));
        e.0 |= fixed[k];
        e.1 += load[k];
        e.2 += load[k].abs();
    }
    let mut roots: Vec<_> = comp_fixed.into_iter().collect();
    roots.sort_by_key(|(_, v)| v.3);
    for (root, (has_fixed, sum, abs, first)) in roots {
        if has_fixed {
            continue;
        }
        let tol = 1e-6 * abs.max(sigma.force_scale * 1e-12);
        if sum.abs() > tol {
            return Err(Error::CompatibilityViolated { mean: sum, tol });
        }
        // Spread the solver-level imbalance evenly instead of dumping it on the pinned node.
        let members: Vec<usize> = (0..nodes.len()).filter(|&k| uf.find(k) == root).collect();
        let shift = sum / members.len() as f64;
        for k in members {
            load[k] -= shift;
        }
        fixed[first] = true;
    }

    let laws = vec![CellLaw::Power { p, c: 1.0 }; cells.len()];
    let mut v = vec![0.0; nodes.len()];
    let mut iterations = 0;
    if load.iter().any(|&b| b != 0.0) {
        let quad = vec![CellLaw::Power { p: 2.0, c: 1.0 }; cells.len()];
        let lin = CellSystem { h, cells: &cells, laws: &quad, fixed: &fixed, load: Some(&load) };
        let rep = lin.minimize(&mut v, true, 0.0, opts)?;
        iterations += rep.iterations;
        if p != 2.0 {
            // Rescale the quadratic solution to the right order of magnitude.
            let gmax = (0..cells.len())
                .flat_map(|c| corner_gradients(cells[c].map(|k| v[k]), h))
                .map(norm)
                .fold(0.0f64, f64::max);
            if gmax > 0.0 {
                let t = gmax.powf(1.0 / (p - 1.0) - 1.0);
                v.iter_mut().for_each(|x| *x *= t);
            }
            let sys = CellSystem { h, cells: &cells, laws: &laws, fixed: &fixed, load: Some(&load) };
            let smax = sigma.sigma.iter().flatten().map(|s| norm(*s)).fold(0.0f64, f64::max);
            let eps = 1e-8 * smax.powf(1.0 / (p - 1.0)).max(1e-300);
            let rep = sys.minimize(&mut v, false, eps, opts)?;
            iterations += rep.iterations;
        }
    }

    let mut eta = Vec::with_capacity(cells.len());
    let (mut eta_q, mut sigma_q) = (0.0, 0.0);
    for (k, cell) in cells.iter().enumerate() {
        let g = corner_gradients(cell.map(|a| v[a]), h);
        let e = g.map(|x| laws[k].grad(x));
        let c = region.collar[k];
        for a in 0..4 {
            eta_q += w * q_power(e[a], q);
            sigma_q += w * q_power(sigma.sigma[c][a], q);
        }
        eta.push(e);
    }
    Ok(Corrector { member, case, cells: region.collar.clone(), eta, eta_q, sigma_q, iterations })
}

/// `τ = φσ + η`, balanced on the cracked grid.
#[derive(Clone, Debug)]
pub struct AdmissibleStress {
    pub tau: Vec<[Vec2; 4]>,
    /// Largest nodal force imbalance over free DOFs of the cut grid, relative to the force
    /// scale of `σ`.
    pub residual: f64,
    pub crack: CrackSet,
}

/// Assemble `τ` and measure its admissibility for `crack` against `tol`.
pub fn assemble_tau(
    problem: &Problem,
    sigma: &StressField,
    phi: &CutoffField,
    correctors: &[Corrector],
    crack: &CrackSet,
    tol: f64,
) -> Result<AdmissibleStress> {
    if correctors.len() != phi.regions.len() {
        return Err(Error::invalid(format!(
            "{} correctors for {} cover members",
            correctors.len(),
            phi.regions.len()
        )));
    }
    let mut tau: Vec<[Vec2; 4]> = sigma
        .sigma
        .iter()
        .zip(&phi.cell)
        .map(|(s, &f)| if f == 1.0 { *s } else { s.map(|x| [f * x[0], f * x[1]]) })
        .collect();
    for corr in correctors {
        for (k, &c) in corr.cells.iter().enumerate() {
            for a in 0..4 {
                tau[c][a][0] += corr.eta[k][a][0];
                tau[c][a][1] += corr.eta[k][a][1];
            }
        }
    }
    let topo = problem.topology(crack)?;
    let residual = admissibility_residual(&topo, &tau, problem.grid().h(), sigma.force_scale);
    if !(residual <= tol) {
        return Err(Error::ResidualTooLarge { residual, tol });
    }
    Ok(AdmissibleStress { tau, residual, crack: crack.clone() })
}

/// `max_d |Σ W τ·∇φ_d|` over unconstrained DOFs, divided by `scale`.
pub fn admissibility_residual(topo: &CutTopology, tau: &[[Vec2; 4]], h: f64, scale: f64) -> f64 {
    let mut force = vec![0.0; topo.n_dofs()];
    for (c, t) in tau.iter().enumerate() {
        let f = corner_forces(t, h);
        for (a, d) in topo.cell_dofs(c).into_iter().enumerate() {
            force[d] += f[a];
        }
    }
    let worst = (0..topo.n_dofs())
        .filter(|&d| !topo.is_constrained(d))
        .map(|d| force[d].abs())
        .fold(0.0f64, f64::max);
    worst / if scale > 0.0 { scale } else { 1.0 }
}

/// `Σ W (τ−σ)·(∂f*(τ) − ∂f*(σ))` over the given cells (all cells when `None`).
fn gap_over(laws: &[CellLaw], tau: &[[Vec2; 4]], sigma: &[[Vec2; 4]], h: f64, cells: Option<&[usize]>) -> f64 {
    let w = corner_weight(h);
    let term = |c: usize| -> f64 {
        let law = &laws[c];
        (0..4)
            .map(|a| {
                let (t, s) = (tau[c][a], sigma[c][a]);
                if t == s {
                    return 0.0;
                }
                let (gt, gs) = (law.grad_fstar(t), law.grad_fstar(s));
                (t[0] - s[0]) * (gt[0] - gs[0]) + (t[1] - s[1]) * (gt[1] - gs[1])
            })
            .sum::<f64>()
    };
    w * match cells {
        Some(cs) => cs.iter().map(|&c| term(c)).sum::<f64>(),
        None => (0..tau.len()).map(term).sum::<f64>(),
    }
}

/// The duality gap `∫ (τ−σ)·(∂f*(τ) − ∂f*(σ))`.
pub fn duality_gap(problem: &Problem, tau: &AdmissibleStress, sigma: &StressField) -> f64 {
    gap_over(problem.laws(), &tau.tau, &sigma.sigma, problem.grid().h(), None)
}

/// One-sided Bregman form `∫ f*(τ) − f*(σ) − (τ−σ)·∂f*(σ)`; never larger than the gap.
pub fn bregman_gap(problem: &Problem, tau: &AdmissibleStress, sigma: &StressField) -> f64 {
    let w = corner_weight(problem.grid().h());
    let laws = problem.laws();
    let mut total = 0.0;
    for (c, (t4, s4)) in tau.tau.iter().zip(&sigma.sigma).enumerate() {
        for a in 0..4 {
            let (t, s) = (t4[a], s4[a]);
            if t == s {
                continue;
            }
            let gs = laws[c].grad_fstar(s);
            total += laws[c].fstar(t) - laws[c].fstar(s) - (t[0] - s[0]) * gs[0] - (t[1] - s[1]) * gs[1];
        }
    }
    w * total
}

/// Per-member terms of the bound.
#[derive(Clone, Debug)]
pub struct MemberBreakdown {
    pub member: usize,
    pub case: CollarCase,
    pub scale: f64,
    pub diameter: f64,
    pub h1: f64,
    /// Contribution of this member's cells to the gap.
    pub gap: f64,
    /// `Σ_I W |σ|^q` over the inner cells.
    pub inner_sigma_q: f64,
    /// `Σ_C W |σ|^q` over the collar.
    pub collar_sigma_q: f64,
    /// `Σ_C W |η|^q` over the collar.
    pub collar_eta_q: f64,
    /// `collar_eta_q / collar_sigma_q`.
    pub corrector_ratio: f64,
    /// `max |∇φ| · r`.
    pub cutoff_slope: f64,
}

#[derive(Clone, Debug)]
pub struct ReleaseBound {
    /// Certified bound (the duality gap); 0 for the empty crack.
    pub bound: f64,
    pub bregman: f64,
    pub residual: f64,
    pub cover: Option<Cover>,
    pub members: Vec<MemberBreakdown>,
}

/// Everything needed to assemble `τ` for one crack.
pub struct DualConstruction {
    pub sigma: StressField,
    pub cutoff: CutoffField,
    pub correctors: Vec<Corrector>,
    pub tau: AdmissibleStress,
}

/// Cover, cutoff, correctors and `τ` for `crack`, given the elastic stress.
pub fn construct(problem: &Problem, sigma: StressField, crack: &CrackSet, m: usize, tol: f64) -> Result<DualConstruction> {
    let cover = if crack.is_empty() {
        Cover::empty(problem.domain())
    } else {
        cover_crack(crack, problem.domain(), m)?
    };
    let phi = cutoff(&cover, problem.grid())?;
    let opts = problem.options();
    let correctors = (0..phi.regions.len())
        .into_par_iter()
        .map(|k| corrector(problem, &sigma, &phi, k, opts))
        .collect::<Result<Vec<_>>>()?;
    let tau = assemble_tau(problem, &sigma, &phi, &correctors, crack, tol)?;
    Ok(DualConstruction { sigma, cutoff: phi, correctors, tau })
}

impl DualConstruction {
    pub fn breakdown(&self, problem: &Problem) -> Vec<MemberBreakdown> {
        let h = problem.grid().h();
        let w = corner_weight(h);
        let q = problem.integrand().q();
        let laws = problem.laws();
        self.correctors
            .iter()
            .map(|corr| {
                let m = corr.member;
                let region = &self.cutoff.regions[m];
                let member = &self.cutoff.cover.members[m];
                let cells: Vec<usize> = region.inner.iter().chain(&region.collar).copied().collect();
                let inner_sigma_q = region
                    .inner
                    .iter()
                    .map(|&c| self.sigma.sigma[c].iter().map(|s| w * q_power(*s, q)).sum::<f64>())
                    .sum();
                MemberBreakdown {
                    member: m,
                    case: corr.case,
                    scale: member.shape.scale(),
                    diameter: member.shape.diameter(),
                    h1: member.crack.h1_measure(),
                    gap: gap_over(laws, &self.tau.tau, &self.sigma.sigma, h, Some(&cells)),
                    inner_sigma_q,
                    collar_sigma_q: corr.sigma_q,
                    collar_eta_q: corr.eta_q,
                    corrector_ratio: corr.energy_ratio(),
                    cutoff_slope: region.slope,
                }
            })
            .collect()
    }
}

/// Certified upper bound on `∫f(∇u) − ∫f(∇u_Γ)` for the crack, with `m` cover members allowed.
pub fn release_bound(problem: &Arc<Problem>, crack: &CrackSet, m: usize) -> Result<ReleaseBound> {
    if crack.is_empty() {
        return Ok(ReleaseBound { bound: 0.0, bregman: 0.0, residual: 0.0, cover: None, members: Vec::new() });
    }
    let sigma = uncut_field(problem)?.stress();
    let dc = construct(problem, sigma, crack, m, ADMISSIBILITY_TOL)?;
    Ok(ReleaseBound {
        bound: duality_gap(problem, &dc.tau, &dc.sigma),
        bregman: bregman_gap(problem, &dc.tau, &dc.sigma),
        residual: dc.tau.residual,
        members: dc.breakdown(problem),
        cover: Some(dc.cutoff.cover),
    })
}

/// Bound checked against the brute-force cracked solve.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub h1: f64,
    pub bound: ReleaseBound,
    /// `∫f(∇u) − ∫f(∇u_Γ)` from the two discrete solves.
    pub release: f64,
    /// `|∫ τ·∇(u_Γ − u)|`: the only term separating the release from the Bregman form.
    pub slack: f64,
    pub jump_flux: f64,
    /// `∫ σ·∇(u − u_Γ)`, the volume form of the jump-flux bound.
    pub volume_flux: f64,
}

impl Certificate {
    /// `release ≤ bound + slack`.
    pub fn holds(&self) -> bool {
        self.release <= self.bound.bound + self.slack
    }

    /// CSV row `crack_id,h1,bound,release_measured,ratio,alpha_fit`.
    pub fn csv_row(&self, id: usize, alpha: Option<f64>) -> String {
        let ratio = if self.h1 > 0.0 { self.bound.bound / self.h1 } else { 0.0 };
        format!(
            "{id},{},{},{},{},{}",
            fmt_f64(self.h1),
            fmt_f64(self.bound.bound),
            fmt_f64(self.release),
            fmt_f64(ratio),
            alpha.map(fmt_f64).unwrap_or_else(|| "nan".into())
        )
    }
}

/// Run the bound and the cracked solve and compare.
pub fn certify(problem: &Arc<Problem>, crack: &CrackSet, m: usize) -> Result<Certificate> {
    let uncut = uncut_field(problem)?;
    let (cracked, _) = solve_with(problem, crack, problem.options(), Some(uncut.values()))?;
    let release = uncut.bulk_energy() - cracked.bulk_energy();
    let sigma = uncut.stress();
    let jump_flux = jump_flux_bound(&sigma, &uncut, &cracked);
    let volume_flux = volume_flux(&sigma, &uncut, &cracked);
    if crack.is_empty() {
        return Ok(Certificate {
            h1: 0.0,
            bound: release_bound(problem, crack, m)?,
            release,
            slack: 0.0,
            jump_flux,
            volume_flux,
        });
    }
    let dc = construct(problem, sigma, crack, m, ADMISSIBILITY_TOL)?;
    let slack = pairing(&dc.tau.tau, &cracked, &uncut).abs();
    let bound = ReleaseBound {
        bound: duality_gap(problem, &dc.tau, &dc.sigma),
        bregman: bregman_gap(problem, &dc.tau, &dc.sigma),
        residual: dc.tau.residual,
        members: dc.breakdown(problem),
        cover: Some(dc.cutoff.cover.clone()),
    };
    Ok(Certificate { h1: crack.h1_measure(), bound, release, slack, jump_flux, volume_flux })
}

/// `Σ W s·∇(a − b)` with `a` on the cracked topology and `b` on the uncut grid.
fn pairing(s: &[[Vec2; 4]], a: &ScalarField, b: &ScalarField) -> f64 {
    let h = a.grid().h();
    let w = corner_weight(h);
    let mut total = 0.0;
    for (c, s4) in s.iter().enumerate() {
        let ga = a.cell_gradients(c);
        let gb = b.cell_gradients(c);
        for k in 0..4 {
            total += w * dot(s4[k], [ga[k][0] - gb[k][0], ga[k][1] - gb[k][1]]);
        }
    }
    total
}

/// `Σ W σ·∇(u − u_Γ)`: dominates the release by convexity.
pub fn volume_flux(sigma: &StressField, uncut: &ScalarField, cracked: &ScalarField) -> f64 {
    -pairing(&sigma.sigma, cracked, uncut)
}

/// Edge quadrature of `∫_Γ σ·n (u_Γ⁺ − u_Γ⁻)`; on cracks along the outer boundary the jump is
/// taken against the uncut solution with the outward normal.
pub fn jump_flux_bound(sigma: &StressField, uncut: &ScalarField, cracked: &ScalarField) -> f64 {
    let grid = cracked.grid();
    let h = grid.h();
    let topo = cracked.topology();
    let mut total = 0.0;
    let avg = |a: Vec2, b: Vec2| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    for e in cracked.crack().edges() {
        let (lo, hi) = grid.edge_cells(e);
        // Corner slots facing the edge on the low and high side, ordered by endpoint.
        let (lo_slots, hi_slots, n) = match e.orient {
            Orientation::Horizontal => ([3, 2], [0, 1], [0.0, 1.0]),
            Orientation::Vertical => ([1, 2], [0, 3], [1.0, 0.0]),
        };
        match (lo, hi) {
            (Some(l), Some(u)) => {
                let sl = &sigma.sigma[l];
                let su = &sigma.sigma[u];
                let sbar = avg(avg(sl[lo_slots[0]], sl[lo_slots[1]]), avg(su[hi_slots[0]], su[hi_slots[1]]));
                let (dl, du) = (topo.cell_dofs(l), topo.cell_dofs(u));
                let jump = 0.5
                    * ((cracked.value(du[hi_slots[0]]) - cracked.value(dl[lo_slots[0]]))
                        + (cracked.value(du[hi_slots[1]]) - cracked.value(dl[lo_slots[1]])));
                total += h * dot(sbar, n) * jump;
            }
            (Some(c), None) | (None, Some(c)) => {
                let side = grid.boundary_side(e).expect("one-sided edge lies on the boundary");
                let slots = if lo.is_some() { lo_slots } else { hi_slots };
                let s = &sigma.sigma[c];
                let sbar = avg(s[slots[0]], s[slots[1]]);
                let inward = side_normal(side);
                let outward = [-inward[0], -inward[1]];
                let d = topo.cell_dofs(c);
                let nodes = grid.cell_nodes(c);
                let w = 0.5
                    * ((uncut.value(nodes[slots[0]]) - cracked.value(d[slots[0]]))
                        + (uncut.value(nodes[slots[1]]) - cracked.value(d[slots[1]])));
                total += h * dot(sbar, outward) * w;
            }
            (None, None) => {}
        }
    }
    total
}

fn side_normal(side: Side) -> Vec2 {
    let n = side.inward_normal();
    [n.x, n.y]
}

/// CSV rows `member,case,scale,diameter,h1,gap,inner_sigma_q,collar_sigma_q,collar_eta_q,corrector_ratio,cutoff_slope`.
pub fn breakdown_rows(members: &[MemberBreakdown]) -> Vec<String> {
    members
        .iter()
        .map(|b| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                b.member,
                b.case.name(),
                fmt_f64(b.scale),
                fmt_f64(b.diameter),
                fmt_f64(b.h1),
                fmt_f64(b.gap),
                fmt_f64(b.inner_sigma_q),
                fmt_f64(b.collar_sigma_q),
                fmt_f64(b.collar_eta_q),
                fmt_f64(b.corrector_ratio),
                fmt_f64(b.cutoff_slope)
            )
        })
        .collect()
}
