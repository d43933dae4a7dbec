//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crackinit::config::ExperimentConfig;
use crackinit::crack_search::{
    budget_ladder, digital_circle, evaluate, minimize_total, release_curve, Anchors, CrackFamily, FamilySpec,
};
use crackinit::dual::certify;
use crackinit::elastic::{solve, Datum, Problem};
use crackinit::energy::{Integrand, MeyersOrientation, ScalarCoefficient};
use crackinit::geometry::{CrackSet, Domain, Grid, Orientation, Point, Rect, Side};
use crackinit::poincare::{optimal_constant, uniformity_sweep, ConstantReport, GraphDomain, PoincareCase};
use crackinit::quasistatic::{evolve, initiation_report, load_horizon, time_grid, trajectory_speed, Trajectory};
use crackinit::runner::{run, Command, RunOptions};
use crackinit::singularity::{fit_power_law, probe, DEFAULT_MARGIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, pass: bool, detail: &str) {
    println!("criterion {n:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    if !pass {
        FAILED.store(true, Ordering::SeqCst);
    }
}

static FAILED: AtomicBool = AtomicBool::new(false);

fn main() {
    let criteria: [(usize, fn()); 10] = [
        (1, criterion_01_duality_dominance),
        (2, criterion_02_small_cracks_do_not_pay),
        (3, criterion_03_strong_singularity_invites_cracks),
        (4, criterion_04_release_rate_limit),
        (5, criterion_05_brutal_and_progressive_initiation),
        (6, criterion_06_energy_balance),
        (7, criterion_07_load_horizon),
        (8, criterion_08_conjugacy_and_scaling),
        (9, criterion_09_poincare_oracles),
        (10, criterion_10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    for (n, f) in criteria {
        let name = format!("criterion_{n:02}");
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        if let Err(e) = std::panic::catch_unwind(f) {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            report(n, false, &format!("panicked: {}", msg.unwrap_or_default()));
        }
    }
    if FAILED.load(Ordering::SeqCst) {
        std::process::exit(1);
    }
}

fn unit_problem(n: usize, sides: &[Side], integrand: Integrand, datum: Datum) -> Arc<Problem> {
    let d = Domain::with_dirichlet_sides(Rect::unit_square(), sides);
    let g = Grid::for_domain(&d, n, n).unwrap();
    Problem::new(d, g, integrand, datum).unwrap()
}

// ---------------------------------------------------------------- 1

const C1_INSTANCES: usize = 20;
const C1_SLACK_FRACTION: f64 = 0.05;
/// Relative slack below which refinement noise is not compared.
const C1_SLACK_FLOOR: f64 = 1e-9;

struct Instance {
    coefficient: f64,
    datum: [f64; 5],
    /// Segments in units of 1/32, so the crack sits on both grids.
    segments: Vec<[i64; 4]>,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let coefficient = rng.random_range(0.5..3.0);
    let datum = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ];
    let x = rng.random_range(10..=20i64);
    let y = rng.random_range(10..=20i64);
    let len = rng.random_range(1..=3i64);
    let mut segments = vec![if rng.random_bool(0.5) { [x, y, x + len, y] } else { [x, y, x, y + len] }];
    if rng.random_bool(0.4) {
        let [_, _, ex, ey] = segments[0];
        let l2 = rng.random_range(1..=2i64);
        segments.push(if ex != x { [ex, ey, ex, ey + l2] } else { [ex, ey, ex + l2, ey] });
    }
    Instance { coefficient, datum, segments }
}

fn instance_problem(inst: &Instance, n: usize) -> (Arc<Problem>, CrackSet) {
    let [c0, cx, cy, a, b] = inst.datum;
    // linear plus the two quadratic harmonics
    let datum = Datum::Custom(Arc::new(move |q: Point| {
        c0 + cx * q.x + cy * q.y + a * (q.x * q.x - q.y * q.y) + b * q.x * q.y
    }));
    let p = unit_problem(n, &Side::ALL, Integrand::p_power(2.0, ScalarCoefficient::Constant(inst.coefficient)).unwrap(), datum);
    let mut crack = CrackSet::empty(p.grid());
    for s in &inst.segments {
        let f = |v: i64| v as f64 / 32.0;
        crack.add_segment(Point::new(f(s[0]), f(s[1])), Point::new(f(s[2]), f(s[3]))).unwrap();
    }
    (p, crack)
}

fn criterion_01_duality_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_ratio = [0.0f64; 2];
    let mut failures = Vec::new();
    for i in 0..C1_INSTANCES {
        let inst = random_instance(&mut rng);
        let mut ratios = [0.0; 2];
        for (k, n) in [128, 256].into_iter().enumerate() {
            let (p, crack) = instance_problem(&inst, n);
            let c = certify(&p, &crack, 2).unwrap();
            let gap = c.bound.bound;
            ratios[k] = c.slack / gap;
            worst_ratio[k] = worst_ratio[k].max(ratios[k]);
            if !(c.release <= gap + c.slack) {
                failures.push(format!("#{i} n={n}: release {:e} > gap {gap:e} + slack {:e}", c.release, c.slack));
            }
            if !(c.slack <= C1_SLACK_FRACTION * gap) {
                failures.push(format!("#{i} n={n}: slack {:e} > 5% of gap {gap:e}", c.slack));
            }
        }
        if ratios[1] > ratios[0].max(C1_SLACK_FLOOR) {
            failures.push(format!("#{i}: slack/gap grew {:e} -> {:e}", ratios[0], ratios[1]));
        }
    }
    let detail = format!(
        "{C1_INSTANCES} instances, max slack/gap {:.2e} (128) {:.2e} (256){}",
        worst_ratio[0],
        worst_ratio[1],
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    report(1, failures.is_empty(), &detail);
}

// ---------------------------------------------------------------- 2

const C2_GRID: usize = 512;
const C2_MIN_EXPONENT: f64 = 1.2;

fn criterion_02_small_cracks_do_not_pay() {
    let k = 1.0;
    let p = unit_problem(C2_GRID, &Side::ALL, Integrand::p_power(2.0, ScalarCoefficient::Constant(2.0)).unwrap(), Datum::x1());
    let h = p.grid().h();
    let w0 = p.uncut_solution().unwrap().1;
    let mut rows = Vec::new();
    for edges in [2usize, 4, 8, 16, 32, 64, 128] {
        let half = edges as f64 * h / 2.0;
        let crack = CrackSet::from_segment(p.grid(), Point::new(0.5, 0.5 - half), Point::new(0.5, 0.5 + half)).unwrap();
        let c = certify(&p, &crack, 1).unwrap();
        let total = w0 - c.release + k * c.h1;
        rows.push((c.h1, total, c.bound.bound));
    }
    // empirical l*: the shortest crack that beats the elastic state
    let l_star = rows.iter().filter(|r| r.1 < w0).map(|r| r.0).fold(f64::INFINITY, f64::min);
    let below: Vec<_> = rows.iter().filter(|r| r.0 < l_star).collect();
    let all_worse = below.iter().all(|r| r.1 > w0);
    let h1: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let bound: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (alpha, _) = fit_power_law(&h1, &bound).unwrap();
    report(
        2,
        all_worse && !below.is_empty() && alpha >= C2_MIN_EXPONENT,
        &format!(
            "l* = {l_star:.4}, {} cracks below it all above the elastic total, bound ~ H1^{alpha:.3} (need >= {C2_MIN_EXPONENT})",
            below.len()
        ),
    );
}

// ---------------------------------------------------------------- 3

const C3_GRID: usize = 256;
const C3_TOUGHNESS: f64 = 0.01;
const C3_ALPHA: f64 = 2.0 / 3.0;
const C3_ALPHA_TOL: f64 = 0.1;

fn meyers_problem(n: usize, half: f64) -> Arc<Problem> {
    let d = Domain::with_dirichlet_sides(Rect::new(-half, -half, half, half).unwrap(), &Side::ALL);
    let g = Grid::for_domain(&d, n, n).unwrap();
    let integrand = Integrand::meyers(3.0, MeyersOrientation::RadialStiff).unwrap();
    let gamma = MeyersOrientation::RadialStiff.exponent(3.0);
    Problem::new(d, g, integrand, Datum::Power { amplitude: 1.0, gamma, center: Point::new(0.0, 0.0) }).unwrap()
}

fn criterion_03_strong_singularity_invites_cracks() {
    let p = meyers_problem(C3_GRID, 1.0);
    let h = p.grid().h();
    let origin = Point::new(0.0, 0.0);
    let (elastic, _) = solve(&p, &p.empty_crack()).unwrap();
    let w0 = elastic.bulk_energy();
    // r = h and r = 2h enclose the 4 and 12 cells nearest the origin
    let mut lines = Vec::new();
    let mut beats = true;
    for r in [h, 2.0 * h] {
        let circle = digital_circle(p.grid(), origin, r);
        let (u, _) = solve(&p, &circle).unwrap();
        let total = u.total_energy(C3_TOUGHNESS);
        beats &= total < w0;
        lines.push(format!("r = {r:.4}: {total:.5} vs {w0:.5}"));
    }
    let pr = probe(&elastic, origin, DEFAULT_MARGIN).unwrap();
    let alpha_ok = (pr.alpha - C3_ALPHA).abs() <= C3_ALPHA_TOL;
    report(3, beats && alpha_ok, &format!("{}; alpha = {:.3} (target 2/3 +- {C3_ALPHA_TOL})", lines.join(", "), pr.alpha));
}

// ---------------------------------------------------------------- 4

const C4_SMALL_RATE: f64 = 0.2;

fn shipped(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

fn curve_rates(cfg: &ExperimentConfig) -> Vec<f64> {
    let p = cfg.problem().unwrap();
    let family = cfg.family(p.grid()).unwrap();
    let rc = cfg.release_curve.as_ref().unwrap();
    release_curve(&p, &family, &budget_ladder(rc.l_max, rc.rungs), cfg.toughness).unwrap().rates()
}

fn criterion_04_release_rate_limit() {
    let smooth_cfg = shipped("release_curve_smooth.toml");
    let smooth = curve_rates(&smooth_cfg);
    let meyers = curve_rates(&shipped("release_curve_meyers.toml"));
    let decreasing = smooth.windows(2).all(|w| w[1] < w[0]);
    let small = *smooth.last().unwrap() < C4_SMALL_RATE * smooth_cfg.toughness;
    let increasing = meyers.windows(2).all(|w| w[1] > w[0]);
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ");
    report(
        4,
        decreasing && small && increasing,
        &format!("smooth rates [{}], Meyers rates [{}] (largest budget first)", fmt(&smooth), fmt(&meyers)),
    );
}

// ---------------------------------------------------------------- 5

const C5_MIN_JUMP_EDGES: f64 = 10.0;
const C5_BALL: f64 = 0.1;
const C5_MIN_SPEED: f64 = 1.5;

fn shipped_trajectory(cfg: &ExperimentConfig) -> Trajectory {
    let p = cfg.problem().unwrap();
    let family = cfg.family(p.grid()).unwrap();
    let ec = cfg.evolve.as_ref().unwrap();
    let horizon = ec.horizon.unwrap_or_else(|| load_horizon(&p, cfg.toughness).unwrap());
    evolve(&p, cfg.toughness, &family, &time_grid(horizon, ec.steps)).unwrap()
}

fn meets_ball(crack: &CrackSet, center: Point, r: f64) -> bool {
    let g = crack.grid();
    crack.nodes().into_iter().any(|n| {
        let (i, j) = g.node_ij(n);
        g.node_pos(i, j).dist(center) <= r
    })
}

fn criterion_05_brutal_and_progressive_initiation() {
    let weak = shipped_trajectory(&shipped("evolve_debond.toml"));
    let wi = initiation_report(&weak);
    let weak_ok = wi.first_cracked.is_some() && wi.t_i > 0.0 && wi.jump >= C5_MIN_JUMP_EDGES * weak.h * (1.0 - 1e-9);

    let strong_cfg = shipped("evolve_meyers.toml");
    let strong = shipped_trajectory(&strong_cfg);
    let si = initiation_report(&strong);
    let first = si.first_cracked;
    let meets = first.is_some_and(|j| meets_ball(strong.crack(j), Point::new(0.0, 0.0), C5_BALL));
    let speed = trajectory_speed(&strong, strong_cfg.evolve.as_ref().unwrap().margin).unwrap();
    let strong_ok = si.t_i == 0.0 && first == Some(1) && meets && speed.exponent >= C5_MIN_SPEED;
    report(
        5,
        weak_ok && strong_ok,
        &format!(
            "weak: t_i = {:.4}, jump = {:.0} edges; Meyers: t_i = {}, first crack at step {:?}, meets B_0.1 = {meets}, speed exponent {:.3}",
            wi.t_i,
            wi.jump / weak.h,
            si.t_i,
            first,
            speed.exponent
        ),
    );
}

// ---------------------------------------------------------------- 6

const C6_RESIDUAL: f64 = 1e-3;
const C6_STEPS: usize = 200;

/// Largest balance residual before the first crack, on `steps` steps up to the load horizon.
fn elastic_residual(p_exp: f64, steps: usize) -> f64 {
    let integrand = Integrand::p_power(p_exp, ScalarCoefficient::Constant(2.0)).unwrap();
    let p = unit_problem(16, &[Side::Left, Side::Right], integrand, Datum::x1());
    let family = CrackFamily::build(
        &FamilySpec::BoundaryDebond { lengths: Vec::new(), stride: 1, full: true },
        p.domain(),
        p.grid(),
        4,
    )
    .unwrap();
    let traj = evolve(&p, 1.0, &family, &time_grid(load_horizon(&p, 1.0).unwrap(), steps)).unwrap();
    traj.steps.iter().take_while(|s| s.h1 == 0.0).map(|s| s.balance_residual).fold(0.0, f64::max)
}

fn criterion_06_energy_balance() {
    let quad = elastic_residual(2.0, C6_STEPS);
    let coarse = elastic_residual(1.5, C6_STEPS);
    let fine = elastic_residual(1.5, 2 * C6_STEPS);
    let small = quad <= C6_RESIDUAL && coarse <= C6_RESIDUAL;
    let halves = fine <= 0.5 * coarse;
    let mut violations = Vec::new();
    for name in ["evolve_debond.toml", "evolve_meyers.toml"] {
        let traj = shipped_trajectory(&shipped(name));
        let bad = traj.steps.iter().filter(|s| !s.below_elastic).count();
        if bad > 0 {
            violations.push(format!("{name}: {bad} steps"));
        }
    }
    report(
        6,
        small && halves && violations.is_empty(),
        &format!(
            "elastic residual p=2 {quad:.2e}, p=1.5 {coarse:.2e} -> {fine:.2e} at half the step; energy inequality violations: {}",
            if violations.is_empty() { "none".to_string() } else { violations.join(", ") }
        ),
    );
}

// ---------------------------------------------------------------- 7

const C7_TOL: f64 = 1e-9;

fn criterion_07_load_horizon() {
    let cfg = shipped("evolve_debond.toml");
    let p = cfg.problem().unwrap();
    let t = load_horizon(&p, cfg.toughness).unwrap();
    let traj = shipped_trajectory(&cfg);
    let dt = t / cfg.evolve.as_ref().unwrap().steps as f64;
    let cracked = initiation_report(&traj).first_cracked.map(|j| traj.steps[j].t);
    let ok = (t - 2f64.sqrt()).abs() <= C7_TOL && cracked.is_some_and(|c| c <= t + 2.0 * dt);
    report(7, ok, &format!("T = {t:.12} (sqrt 2 = {:.12}), first cracked at t = {cracked:?}", 2f64.sqrt()));
}

// ---------------------------------------------------------------- 8

const C8_SAMPLES: usize = 1000;
const C8_TOL_QUADRATIC: f64 = 1e-9;
const C8_TOL_P: f64 = 1e-6;

/// Largest `|f(ξ) + f*(∂f(ξ)) − ∂f(ξ)·ξ|`, relative to `f(ξ) + f*(∂f(ξ))`.
fn fenchel_defect(integrand: &Integrand, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..C8_SAMPLES {
        let x = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let scale = 10f64.powf(rng.random_range(-3.0..2.0));
        let xi = [scale * rng.random_range(-1.0..1.0), scale * rng.random_range(-1.0..1.0)];
        let f = integrand.eval_f(x, xi);
        let zeta = integrand.grad_f(x, xi);
        let fs = integrand.eval_fstar(x, zeta).unwrap();
        let pairing = zeta[0] * xi[0] + zeta[1] * xi[1];
        if f + fs > 0.0 {
            worst = worst.max((f + fs - pairing).abs() / (f + fs));
        }
    }
    worst
}

struct Scenario {
    problem: Arc<Problem>,
    family: CrackFamily,
}

fn segments(stride: usize, lengths: Vec<usize>) -> FamilySpec {
    FamilySpec::Segments {
        anchors: Anchors::Lattice { stride, region: Some(Rect::new(0.25, 0.25, 0.75, 0.75).unwrap()) },
        lengths,
        orientations: vec![Orientation::Horizontal, Orientation::Vertical],
        centered: false,
    }
}

fn scenarios() -> Vec<Scenario> {
    let wavy = || Datum::Custom(Arc::new(|q: Point| (3.0 * q.x).sin() + q.y * q.y - 0.5 * q.x * q.y));
    let debond = FamilySpec::BoundaryDebond { lengths: vec![4, 8], stride: 4, full: true };
    let checker = ScalarCoefficient::Checkerboard { low: 1.0, high: 4.0, period: 0.25 };
    let cases: Vec<(f64, ScalarCoefficient, &[Side], Datum, FamilySpec)> = vec![
        (2.0, ScalarCoefficient::Constant(2.0), &Side::ALL, Datum::Linear { c0: 0.0, cx: 1.0, cy: 0.3 }, segments(4, vec![2, 4, 8])),
        (1.5, ScalarCoefficient::Constant(1.0), &[Side::Left, Side::Right], wavy(), segments(4, vec![2, 4, 8])),
        (3.0, ScalarCoefficient::Constant(2.0), &Side::ALL, wavy(), segments(8, vec![4, 8])),
        (2.0, checker, &[Side::Left, Side::Bottom], Datum::Linear { c0: 0.5, cx: 1.0, cy: -1.0 }, segments(4, vec![2, 4])),
        (1.5, ScalarCoefficient::Constant(2.0), &[Side::Left, Side::Right], Datum::x1(), debond),
    ];
    cases
        .into_iter()
        .map(|(p, c, sides, datum, spec)| {
            let problem = unit_problem(32, sides, Integrand::p_power(p, c).unwrap(), datum);
            let family = CrackFamily::build(&spec, problem.domain(), problem.grid(), 4).unwrap();
            Scenario { problem, family }
        })
        .collect()
}

fn criterion_08_conjugacy_and_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let quadratic = [
        Integrand::p_power(2.0, ScalarCoefficient::Constant(2.0)).unwrap(),
        Integrand::meyers(3.0, MeyersOrientation::RadialStiff).unwrap(),
    ];
    let quad_defect = quadratic.iter().map(|f| fenchel_defect(f, &mut rng)).fold(0.0, f64::max);
    let p_defect =
        fenchel_defect(&Integrand::p_power(1.5, ScalarCoefficient::Constant(1.3)).unwrap(), &mut rng);

    let mut invariant = 0;
    let mut nontrivial = 0;
    let all = scenarios();
    for s in &all {
        let p = s.problem.integrand().p();
        // a toughness at which the best crack beats the elastic state
        let evals = evaluate(&s.problem, &s.family, f64::INFINITY).unwrap();
        let w0 = evals[0].bulk;
        let best_rate = evals[1..].iter().map(|e| (w0 - e.bulk) / e.h1).fold(0.0, f64::max);
        let k = 0.5 * best_rate;
        let base = minimize_total(&s.problem, &s.family, f64::INFINITY, k).unwrap().selection.total_argmin;
        nontrivial += (base != 0) as usize;
        let same = [0.5, 3.0].iter().all(|&c| {
            let scaled = s.problem.with_datum(s.problem.datum().scaled(c));
            minimize_total(&scaled, &s.family, f64::INFINITY, c.powf(p) * k).unwrap().selection.total_argmin == base
        });
        invariant += same as usize;
    }
    report(
        8,
        quad_defect <= C8_TOL_QUADRATIC && p_defect <= C8_TOL_P && invariant == all.len(),
        &format!(
            "Fenchel defect {quad_defect:.1e} (p=2), {p_defect:.1e} (p=1.5) over {C8_SAMPLES} samples each; \
             argmin invariant in {invariant}/{} scenarios ({nontrivial} with a crack)",
            all.len()
        ),
    );
}

// ---------------------------------------------------------------- 9

const C9_GRID: usize = 128;
const C9_REL: f64 = 0.02;
const C9_ORTHO: f64 = 1e-10;
const C9_SAMPLES: usize = 8;
const C9_STABLE: f64 = 0.10;

/// `max |⟨u, r⟩| / (‖u‖ ‖r‖)` over the rigid motions, with the lumped Q1 mass of the unit square.
fn rigid_overlap(report: &ConstantReport) -> f64 {
    let h = 1.0 / report.resolution as f64;
    let edge = |v: f64| v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12;
    let mass: Vec<f64> = report
        .points
        .iter()
        .map(|&(x, y)| h * h * if edge(x) { 0.5 } else { 1.0 } * if edge(y) { 0.5 } else { 1.0 })
        .collect();
    let u = &report.field;
    let inner = |a: &dyn Fn(usize, usize) -> f64, b: &dyn Fn(usize, usize) -> f64| -> f64 {
        (0..mass.len()).map(|n| mass[n] * (a(n, 0) * b(n, 0) + a(n, 1) * b(n, 1))).sum()
    };
    let uf = |n: usize, c: usize| u[2 * n + c];
    let pts = &report.points;
    let rigid: [Box<dyn Fn(usize, usize) -> f64>; 3] = [
        Box::new(|_, c| (c == 0) as u8 as f64),
        Box::new(|_, c| (c == 1) as u8 as f64),
        Box::new(move |n, c| if c == 0 { -pts[n].1 } else { pts[n].0 }),
    ];
    let un = inner(&uf, &uf).sqrt();
    rigid.iter().map(|r| inner(&uf, r.as_ref()).abs() / (un * inner(r.as_ref(), r.as_ref()).sqrt())).fold(0.0, f64::max)
}

fn criterion_09_poincare_oracles() {
    let pi2 = std::f64::consts::PI.powi(2);
    let flat = GraphDomain::flat(C9_GRID);
    let ii = optimal_constant(&flat, PoincareCase::ZeroMean).unwrap().constant;
    let i = optimal_constant(&flat, PoincareCase::ZeroOnBase).unwrap().constant;
    let iv = optimal_constant(&flat, PoincareCase::VectorRigid).unwrap();
    let overlap = rigid_overlap(&iv);
    let mut sweeps = Vec::new();
    let mut stable = true;
    for case in PoincareCase::ALL {
        let a = uniformity_sweep(1.0, 2.0, C9_SAMPLES, case, 16, 9).unwrap().max_constant;
        let b = uniformity_sweep(1.0, 2.0, 2 * C9_SAMPLES, case, 16, 9).unwrap().max_constant;
        stable &= (b - a).abs() <= C9_STABLE * a;
        sweeps.push(format!("{} {a:.4}->{b:.4}", case.name()));
    }
    let ii_ok = (ii * pi2 - 1.0).abs() <= C9_REL;
    let i_ok = (i * pi2 / 4.0 - 1.0).abs() <= C9_REL;
    report(
        9,
        ii_ok && i_ok && overlap <= C9_ORTHO && stable,
        &format!(
            "ii = {ii:.5} (1/pi^2 = {:.5}), i = {i:.5} (4/pi^2 = {:.5}), iv rigid overlap {overlap:.1e}; sweep max {}",
            1.0 / pi2,
            4.0 / pi2,
            sweeps.join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 10

const C10_CONFIGS: [(&str, Command); 9] = [
    ("solve_x1.toml", Command::Solve),
    ("dual_bound.toml", Command::DualBound),
    ("release_curve_smooth.toml", Command::ReleaseCurve),
    ("release_curve_meyers.toml", Command::ReleaseCurve),
    ("classify_meyers.toml", Command::Classify),
    ("evolve_debond.toml", Command::Evolve),
    ("evolve_meyers.toml", Command::Evolve),
    ("poincare.toml", Command::Poincare),
    ("meyers.toml", Command::MeyersVerify),
];

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_10_determinism() {
    let mut compared = 0;
    let mut differing = Vec::new();
    for (name, cmd) in C10_CONFIGS {
        let cfg = shipped(name);
        let outputs: Vec<Vec<(String, Vec<u8>)>> = [1usize, 3]
            .iter()
            .map(|&w| {
                let dir = tempfile::tempdir().unwrap();
                let opts = RunOptions { workers: Some(w), out: Some(dir.path().to_path_buf()), seed: None };
                run(cmd, &cfg, &opts).unwrap();
                csv_files(dir.path())
            })
            .collect();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            differing.push(name);
        }
        compared += outputs[0].len();
    }
    report(
        10,
        differing.is_empty(),
        &format!(
            "{} configs, {compared} CSVs byte-identical with 1 and 3 workers{}",
            C10_CONFIGS.len(),
            if differing.is_empty() { String::new() } else { format!("; differing: {}", differing.join(", ")) }
        ),
    );
}
