//! Time-incremental irreversible evolution under the load `t ↦ tψ`.
//!
//! All integrands are `p`-homogeneous in the gradient, so the state at time `t` with crack `Γ`
//! is `t·v_Γ` where `v_Γ` solves the unit-datum problem; each crack is solved once.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::crack_search::{CrackFamily, TIE_TOL};
use crate::elastic::{corner_gradients, corner_weight, fmt_f64, solve_with, Problem, ScalarField};
use crate::energy::dot;
use crate::error::{Error, Result};
use crate::geometry::CrackSet;
use crate::singularity::fit_power_law;

/// Largest first crack (in grid edges) still called progressive.
pub const PROGRESSIVE_EDGES: f64 = 3.0;

/// One recorded time step.
#[derive(Clone, Debug)]
pub struct Step {
    pub t: f64,
    /// Index into [`Trajectory::states`].
    pub state: usize,
    pub h1: f64,
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
    /// Trapezoidal accumulation of the load power.
    pub work: f64,
    /// `|total − total(0) − work|`.
    pub balance_residual: f64,
    /// Smallest `total(H) − total` over the solved competitors `H ≠ Γ(t)`; negative values
    /// beyond the tie tolerance would break unilateral minimality.
    pub minimality_margin: f64,
    /// Competitors considered at this step (solved or pruned by the surface term).
    pub competitors: usize,
    /// `total ≤ t^p · bulk(v)` with `v` the uncracked unit-datum solution.
    pub below_elastic: bool,
}

/// Unit-datum solution for one crack of the trajectory.
#[derive(Clone, Debug)]
pub struct State {
    pub field: ScalarField,
    pub bulk: f64,
    /// `∫ ∂f(∇v)·∇ψ`.
    pub power: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub p: f64,
    pub k: f64,
    pub h: f64,
    /// Bulk energy of the uncracked unit-datum solution.
    pub elastic_bulk: f64,
    pub states: Vec<State>,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn crack(&self, j: usize) -> &CrackSet {
        self.states[self.steps[j].state].field.crack()
    }

    /// `u(t_j) = t_j v_{Γ(t_j)}`.
    pub fn displacement(&self, j: usize) -> ScalarField {
        self.states[self.steps[j].state].field.scaled(self.steps[j].t)
    }

    /// CSV rows `t,h1,bulk,surface,total,work,balance_residual`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{},{},{},{}",
                    fmt_f64(s.t),
                    fmt_f64(s.h1),
                    fmt_f64(s.bulk),
                    fmt_f64(s.surface),
                    fmt_f64(s.total),
                    fmt_f64(s.work),
                    fmt_f64(s.balance_residual)
                )
            })
            .collect()
    }
}

/// `n + 1` equally spaced times on `[0, horizon]`.
pub fn time_grid(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|j| horizon * j as f64 / n as f64).collect()
}

fn solve_state(problem: &Arc<Problem>, crack: &CrackSet, guess: &[f64]) -> Result<State> {
    let (field, rep) = solve_with(problem, crack, problem.options(), Some(guess))?;
    let power = load_power(&field);
    Ok(State { field, bulk: rep.bulk_energy, power })
}

/// `Σ W ∂f(∇v)·∇ψ_h` with `ψ_h` the nodal interpolant of the datum.
fn load_power(field: &ScalarField) -> f64 {
    let problem = field.problem();
    let grid = field.grid();
    let h = grid.h();
    let w = corner_weight(h);
    let laws = problem.laws();
    let psi: Vec<f64> = (0..grid.n_nodes())
        .map(|n| {
            let (i, j) = grid.node_ij(n);
            problem.datum().eval(grid.node_pos(i, j))
        })
        .collect();
    let mut total = 0.0;
    for c in 0..grid.n_cells() {
        let gv = field.cell_gradients(c);
        let gp = corner_gradients(grid.cell_nodes(c).map(|n| psi[n]), h);
        for q in 0..4 {
            total += w * dot(laws[c].grad(gv[q]), gp[q]);
        }
    }
    total
}

/// Greedy unilateral minimization: at each `t_j` pick `H = Γ(t_{j-1}) ∪ M`, `M` in the family,
/// minimizing `t_j^p bulk(v_H) + k H¹(H)`; ties keep the earlier family member (so `M = ∅` wins).
pub fn evolve(problem: &Arc<Problem>, k: f64, family: &CrackFamily, times: &[f64]) -> Result<Trajectory> {
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times must start at 0 and increase strictly"));
    }
    if !(k >= 0.0) {
        return Err(Error::invalid(format!("toughness {k} must be non-negative")));
    }
    let p = problem.integrand().p();
    let (uncut, elastic_bulk) = problem.uncut_solution()?;
    let uncut = uncut.to_vec();
    let mut states: Vec<State> = vec![solve_state(problem, &problem.empty_crack(), &uncut)?];
    let mut index: HashMap<CrackSet, usize> = HashMap::new();
    index.insert(problem.empty_crack(), 0);
    let mut current = 0usize;
    let mut steps: Vec<Step> = Vec::with_capacity(times.len());
    let mut work = 0.0;
    let m = family.max_components();

    for (j, &t) in times.iter().enumerate() {
        let tp = t.powf(p);
        let prev = states[current].field.crack().clone();
        let prev_total = tp * states[current].bulk + k * prev.h1_measure();
        // Competitors in family order; the surface term alone prunes those that cannot win.
        let mut candidates: Vec<CrackSet> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for member in family.members() {
            let h = prev.union(member);
            if seen.insert(h.clone()) {
                candidates.push(h);
            }
        }
        let competitors = candidates.len();
        let live: Vec<&CrackSet> = candidates
            .iter()
            .filter(|h| k * h.h1_measure() <= prev_total * (1.0 + TIE_TOL) && h.connected_components().len() <= m)
            .collect();
        let fresh: Vec<&CrackSet> = live.iter().copied().filter(|h| !index.contains_key(*h)).collect();
        let guess = if prev.is_empty() { uncut.clone() } else { nodal_values(&states[current].field) };
        let solved = fresh
            .par_iter()
            .map(|h| solve_state(problem, h, &guess))
            .collect::<Result<Vec<_>>>()?;
        for (h, s) in fresh.into_iter().zip(solved) {
            index.insert(h.clone(), states.len());
            states.push(s);
        }
        let totals: Vec<(usize, f64)> = live
            .iter()
            .map(|h| {
                let i = index[*h];
                (i, tp * states[i].bulk + k * h.h1_measure())
            })
            .collect();
        let mut best = totals[0];
        for &(i, e) in &totals[1..] {
            if e < best.1 - TIE_TOL * best.1.abs().max(f64::MIN_POSITIVE) {
                best = (i, e);
            }
        }
        let margin = totals
            .iter()
            .filter(|(i, _)| *i != best.0)
            .map(|(_, e)| e - best.1)
            .fold(f64::INFINITY, f64::min);

        // The power over [t_{j-1}, t_j] is evaluated with the crack held during the step.
        let state_prev = current;
        current = best.0;
        if j > 0 {
            let dt = t - times[j - 1];
            let p_prev = times[j - 1].powf(p - 1.0) * states[steps[j - 1].state].power;
            let p_now = t.powf(p - 1.0) * states[state_prev].power;
            work += 0.5 * dt * (p_prev + p_now);
        }
        let s = &states[current];
        let h1 = s.field.crack().h1_measure();
        let bulk = tp * s.bulk;
        let surface = k * h1;
        let total = bulk + surface;
        let total0 = steps.first().map_or(total, |s: &Step| s.total);
        steps.push(Step {
            t,
            state: current,
            h1,
            bulk,
            surface,
            total,
            work,
            balance_residual: (total - total0 - work).abs(),
            minimality_margin: margin,
            competitors,
            below_elastic: total <= tp * elastic_bulk * (1.0 + 1e-9) + 1e-300,
        });
    }
    Ok(Trajectory { p, k, h: problem.grid().h(), elastic_bulk, states, steps })
}

/// Nodal values of a field, taking the first DOF at split nodes.
fn nodal_values(field: &ScalarField) -> Vec<f64> {
    let topo = field.topology();
    (0..field.grid().n_nodes()).map(|n| field.value(topo.node_dofs(n).start)).collect()
}

/// Initiation classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Initiation {
    None,
    Brutal,
    Progressive,
}

impl Initiation {
    pub fn name(self) -> &'static str {
        match self {
            Initiation::None => "none",
            Initiation::Brutal => "brutal",
            Initiation::Progressive => "progressive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitiationReport {
    /// Last time with no crack.
    pub t_i: f64,
    /// `H¹` at the first cracked step.
    pub jump: f64,
    /// Index of the first cracked step.
    pub first_cracked: Option<usize>,
    pub class: Initiation,
}

pub fn initiation_report(traj: &Trajectory) -> InitiationReport {
    let first = traj.steps.iter().position(|s| s.h1 > 0.0);
    match first {
        None => InitiationReport {
            t_i: traj.steps.last().map_or(0.0, |s| s.t),
            jump: 0.0,
            first_cracked: None,
            class: Initiation::None,
        },
        Some(j) => {
            let jump = traj.steps[j].h1;
            let class = if jump <= PROGRESSIVE_EDGES * traj.h * (1.0 + 1e-9) {
                Initiation::Progressive
            } else {
                Initiation::Brutal
            };
            InitiationReport { t_i: if j > 0 { traj.steps[j - 1].t } else { 0.0 }, jump, first_cracked: Some(j), class }
        }
    }
}

/// Energy balance residual at every recorded step.
pub fn energy_balance_residual(traj: &Trajectory) -> Vec<f64> {
    traj.steps.iter().map(|s| s.balance_residual).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedFit {
    pub exponent: f64,
    pub constant: f64,
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub passes: bool,
}

/// Fit `H¹(Γ(t)) ≈ C t^β` over the first time each distinct crack length is reached.
///
/// Passes when `β ≥ min(p, 1 + margin)`.
pub fn zero_speed_check(times: &[f64], h1: &[f64], p: f64, margin: f64) -> Result<SpeedFit> {
    let mut ts = Vec::new();
    let mut ls: Vec<f64> = Vec::new();
    for (&t, &l) in times.iter().zip(h1) {
        if l > 0.0 && t > 0.0 && ls.last().is_none_or(|&last| l != last) {
            ts.push(t);
            ls.push(l);
        }
    }
    if ts.len() < 2 {
        return Err(Error::InsufficientData(format!("{} distinct crack lengths", ts.len())));
    }
    let (exponent, constant) = fit_power_law(&ts, &ls)?;
    Ok(SpeedFit { exponent, constant, times: ts, lengths: ls, passes: exponent >= p.min(1.0 + margin) })
}

pub fn trajectory_speed(traj: &Trajectory, margin: f64) -> Result<SpeedFit> {
    let times: Vec<f64> = traj.steps.iter().map(|s| s.t).collect();
    let h1: Vec<f64> = traj.steps.iter().map(|s| s.h1).collect();
    zero_speed_check(&times, &h1, traj.p, margin)
}

/// Time beyond which debonding all of `∂_DΩ` beats the elastic state:
/// `T = (k H¹(∂_DΩ) / bulk(v))^{1/p}`.
pub fn load_horizon(problem: &Problem, k: f64) -> Result<f64> {
    let (values, bulk) = problem.uncut_solution()?;
    let grid = problem.grid();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let area = grid.h() * grid.h() * grid.n_cells() as f64;
    let p = problem.integrand().p();
    if !(bulk > 1e-14 * scale.powf(p) * area) {
        return Err(Error::ZeroElasticEnergy);
    }
    Ok((k * problem.domain().dirichlet_length() / bulk).powf(1.0 / p))
}
