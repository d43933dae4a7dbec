//! Config-driven experiment runner: dispatches a subcommand, writes CSV/SVG artifacts atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::crack_search::{budget_ladder, localization_check, release_curve};
use crate::dual::{breakdown_rows, certify};
use crate::elastic::{fmt_f64, solve};
use crate::energy::MeyersOrientation;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::poincare::{uniformity_sweep, PoincareCase};
use crate::quasistatic::{evolve, initiation_report, load_horizon, time_grid, trajectory_speed};
use crate::singularity::{classify, classify_alpha, fit_power_law, meyers_equation_residual, meyers_reference};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residual below which a candidate exponent is taken to solve the Meyers equation.
const EQUATION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    DualBound,
    ReleaseCurve,
    Classify,
    Evolve,
    Poincare,
    MeyersVerify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Solve,
        Command::DualBound,
        Command::ReleaseCurve,
        Command::Classify,
        Command::Evolve,
        Command::Poincare,
        Command::MeyersVerify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::DualBound => "dual-bound",
            Command::ReleaseCurve => "release-curve",
            Command::Classify => "classify",
            Command::Evolve => "evolve",
            Command::Poincare => "poincare",
            Command::MeyersVerify => "meyers-verify",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    /// One line per experiment.
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

/// Run one subcommand inside a pool of the requested size.
pub fn run(command: Command, config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.output.dir = out.clone();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(Error::invalid("worker count must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    fs::create_dir_all(cfg.out_dir())?;
    let mut ctx = Context { cfg: &cfg, summary: RunSummary::default() };
    pool.install(|| match command {
        Command::Solve => ctx.solve(),
        Command::DualBound => ctx.dual_bound(),
        Command::ReleaseCurve => ctx.release_curve(),
        Command::Classify => ctx.classify(),
        Command::Evolve => ctx.evolve(),
        Command::Poincare => ctx.poincare(),
        Command::MeyersVerify => ctx.meyers_verify(),
    })?;
    Ok(ctx.summary)
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::invalid("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// CSV text with header and the `# version,grid,seed` trailer.
pub fn csv_text(header: &str, rows: &[String], grid: &str, seed: u64) -> String {
    let mut s = String::with_capacity(rows.iter().map(|r| r.len() + 1).sum::<usize>() + 64);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    let _ = writeln!(s, "# {VERSION},{grid},{seed}");
    s
}

/// Minimal SVG line plot; non-finite points are dropped.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let (w, h, m) = (640.0, 400.0, 56.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {} H{} M{m} {} V{m}" stroke="black" fill="none"/>"#,
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (x0, "start", m, h - m + 16.0),
        (x1, "end", w - m, h - m + 16.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3e}</text>"#);
    }
    for (v, y) in [(y0, h - m), (y1, m)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.3e}</text>"#, m - 4.0, y + 4.0);
    }
    for (k, (label, data)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let d: Vec<String> = data
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - m - 120.0,
            m + 14.0 * (k as f64 + 1.0),
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    summary: RunSummary,
}

impl Context<'_> {
    fn grid_tag(&self) -> String {
        format!("{}x{}", self.cfg.grid.nx, self.cfg.grid.ny)
    }

    fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        self.csv_tagged(name, header, rows, &self.grid_tag())
    }

    fn csv_tagged(&mut self, name: &str, header: &str, rows: &[String], grid: &str) -> Result<()> {
        let path = self.cfg.out_dir().join(name);
        write_atomic(&path, &csv_text(header, rows, grid, self.cfg.seed))?;
        self.summary.artifacts.push(path);
        Ok(())
    }

    fn svg(&mut self, name: &str, contents: String) -> Result<()> {
        if !self.cfg.output.svg {
            return Ok(());
        }
        let path = self.cfg.out_dir().join(name);
        write_atomic(&path, &contents)?;
        self.summary.artifacts.push(path);
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.summary.lines.push(line);
    }

    fn section<'s, T>(&self, v: &'s Option<T>, name: &str) -> Result<&'s T> {
        v.as_ref()
            .ok_or_else(|| Error::Config { location: Some(name.into()), message: "section is required".into() })
    }

    fn solve(&mut self) -> Result<()> {
        let problem = self.cfg.problem()?;
        let crack = self.cfg.crack(problem.grid())?;
        let (field, rep) = solve(&problem, &crack)?;
        let k = self.cfg.toughness;
        let bulk = field.bulk_energy();
        let h1 = crack.h1_measure();
        self.csv("field.csv", "i,j,side,u", &field.csv_rows())?;
        self.csv("stress.csv", "cell_i,cell_j,sx,sy", &field.stress().csv_rows(problem.grid()))?;
        let row = format!(
            "{},{},{},{},{},{},{:e}",
            fmt_f64(h1),
            fmt_f64(bulk),
            fmt_f64(k * h1),
            fmt_f64(bulk + k * h1),
            rep.iterations,
            rep.newton_steps,
            rep.residual
        );
        self.csv("summary.csv", "h1,bulk,surface,total,iterations,newton_steps,residual", &[row])?;
        self.say(format!(
            "solve: {} dofs, bulk {:.6e}, total {:.6e} (k = {k}), residual {:.1e}",
            field.values().len(),
            bulk,
            bulk + k * h1,
            rep.residual
        ));
        Ok(())
    }

    fn dual_bound(&mut self) -> Result<()> {
        let problem = self.cfg.problem()?;
        let family = self.cfg.family(problem.grid())?;
        let m = self.cfg.dual_bound.as_ref().map_or(1, |d| d.m);
        let certs = family.members()[1..]
            .par_iter()
            .map(|c| certify(&problem, c, m))
            .collect::<Result<Vec<_>>>()?;
        let h1: Vec<f64> = certs.iter().map(|c| c.h1).collect();
        let bounds: Vec<f64> = certs.iter().map(|c| c.bound.bound).collect();
        let alpha = fit_power_law(&h1, &bounds).ok().map(|(a, _)| a);
        let rows: Vec<String> = certs.iter().enumerate().map(|(i, c)| c.csv_row(i + 1, alpha)).collect();
        self.csv("bound.csv", "crack_id,h1,bound,release_measured,ratio,alpha_fit", &rows)?;
        let mut detail = Vec::new();
        for (i, c) in certs.iter().enumerate() {
            detail.extend(breakdown_rows(&c.bound.members).into_iter().map(|r| format!("{},{r}", i + 1)));
        }
        self.csv(
            "bound_members.csv",
            "crack_id,member,case,scale,diameter,h1,gap,inner_sigma_q,collar_sigma_q,collar_eta_q,corrector_ratio,cutoff_slope",
            &detail,
        )?;
        let held = certs.iter().filter(|c| c.holds()).count();
        self.svg(
            "bound.svg",
            svg_line_plot(
                "release bound vs crack length (log-log)",
                "log H1",
                "log energy",
                &[
                    ("bound", certs.iter().map(|c| (c.h1.ln(), c.bound.bound.ln())).collect()),
                    ("release", certs.iter().map(|c| (c.h1.ln(), c.release.ln())).collect()),
                ],
            ),
        )?;
        self.say(format!(
            "dual-bound: {held}/{} cracks certified, exponent {}",
            certs.len(),
            alpha.map_or("n/a".into(), |a| format!("{a:.3}"))
        ));
        Ok(())
    }

    fn release_curve(&mut self) -> Result<()> {
        let rc = self.section(&self.cfg.release_curve, "release_curve")?.clone();
        let problem = self.cfg.problem()?;
        let family = self.cfg.family(problem.grid())?;
        let budgets = budget_ladder(rc.l_max, rc.rungs);
        let curve = release_curve(&problem, &family, &budgets, self.cfg.toughness)?;
        self.csv("curve.csv", "l,W,rate,argmin_id,total_energy", &curve.csv_rows())?;
        let rates = curve.rates();
        self.svg(
            "curve.svg",
            svg_line_plot(
                "release rate (W(0) - W(l)) / l",
                "log l",
                "rate",
                &[("rate", budgets.iter().zip(&rates).map(|(l, r)| (l.ln(), *r)).collect())],
            ),
        )?;
        if let Some(loc) = &rc.localization {
            let x = Point::new(loc.point[0], loc.point[1]);
            let report = localization_check(problem.domain(), &curve, x, &loc.radii)?;
            let mut rows = Vec::new();
            for e in &report.entries {
                for (l, meets) in budgets.iter().zip(&e.meets) {
                    rows.push(format!("{},{},{}", fmt_f64(e.radius), fmt_f64(*l), *meets as u8));
                }
            }
            self.csv("localization.csv", "radius,l,meets", &rows)?;
        }
        let monotone = if rates.windows(2).all(|w| w[1] <= w[0]) {
            "non-increasing towards small l"
        } else if rates.windows(2).all(|w| w[1] >= w[0]) {
            "non-decreasing towards small l"
        } else {
            "not monotone"
        };
        self.say(format!(
            "release-curve: {} cracks, {} budgets, rates {monotone}, smallest-budget rate {:.4e}",
            family.len(),
            budgets.len(),
            rates.last().copied().unwrap_or(f64::NAN)
        ));
        Ok(())
    }

    fn classify(&mut self) -> Result<()> {
        let cc = self.section(&self.cfg.classify, "classify")?.clone();
        let problem = self.cfg.problem()?;
        let crack = self.cfg.crack(problem.grid())?;
        let (field, _) = solve(&problem, &crack)?;
        let mut probes: Vec<Point> = cc.probes.iter().map(|p| Point::new(p[0], p[1])).collect();
        let r = problem.domain().rect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        for _ in 0..cc.random_probes {
            let u: f64 = rng.random_range(0.25..0.75);
            let v: f64 = rng.random_range(0.25..0.75);
            probes.push(Point::new(r.x0 + u * r.width(), r.y0 + v * r.height()));
        }
        if probes.is_empty() {
            return Err(Error::Config { location: Some("classify.probes".into()), message: "no probes".into() });
        }
        let report = classify(&field, &probes, cc.margin)?;
        self.csv("singularity.csv", "x,y,alpha,C,class,delta", &report.csv_rows())?;
        let counts = ["weak", "critical", "strong"].map(|n| report.probes.iter().filter(|p| p.class.name() == n).count());
        self.say(format!(
            "classify: {} probes, {} weak, {} critical, {} strong",
            report.probes.len(),
            counts[0],
            counts[1],
            counts[2]
        ));
        Ok(())
    }

    fn evolve(&mut self) -> Result<()> {
        let ec = self.section(&self.cfg.evolve, "evolve")?.clone();
        let problem = self.cfg.problem()?;
        let family = self.cfg.family(problem.grid())?;
        let k = self.cfg.toughness;
        let horizon = match ec.horizon {
            Some(t) => t,
            None => load_horizon(&problem, k)?,
        };
        if ec.steps == 0 || !(horizon > 0.0) {
            return Err(Error::Config {
                location: Some("evolve".into()),
                message: "need steps > 0 and a positive horizon".into(),
            });
        }
        let traj = evolve(&problem, k, &family, &time_grid(horizon, ec.steps))?;
        self.csv("trajectory.csv", "t,h1,bulk,surface,total,work,balance_residual", &traj.csv_rows())?;
        self.svg(
            "trajectory.svg",
            svg_line_plot("crack length", "t", "H1", &[("H1", traj.steps.iter().map(|s| (s.t, s.h1)).collect())]),
        )?;
        let init = initiation_report(&traj);
        let speed = trajectory_speed(&traj, ec.margin).ok();
        let worst = traj.steps.iter().map(|s| s.balance_residual).fold(0.0, f64::max);
        let t_label = load_horizon(&problem, k).map_or("inf".to_string(), |t| format!("{t:.6}"));
        self.say(format!(
            "evolve: {} steps to t = {horizon:.6} (horizon {t_label}), initiation {} at t_i = {:.6} with jump {:.4e}, \
             speed exponent {}, max balance residual {worst:.3e}",
            ec.steps,
            init.class.name(),
            init.t_i,
            init.jump,
            speed.map_or("n/a".into(), |s| format!("{:.3}", s.exponent))
        ));
        Ok(())
    }

    fn poincare(&mut self) -> Result<()> {
        let pc = self.section(&self.cfg.poincare, "poincare")?.clone();
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for name in &pc.cases {
            let case = PoincareCase::parse(name).expect("validated with the config");
            let sweep = uniformity_sweep(pc.lipschitz, pc.height, pc.samples, case, pc.resolution, self.cfg.seed)?;
            rows.extend(sweep.csv_rows());
            lines.push(format!("{} max {:.6e}", case.name(), sweep.max_constant));
        }
        let tag = format!("{0}x{0}", pc.resolution);
        self.csv_tagged("poincare.csv", "case,L,M,profile_id,C,resolution", &rows, &tag)?;
        self.say(format!(
            "poincare: L = {}, M = {}, {} samples: {}",
            pc.lipschitz,
            pc.height,
            pc.samples,
            lines.join(", ")
        ));
        Ok(())
    }

    fn meyers_verify(&mut self) -> Result<()> {
        let mc = self.section(&self.cfg.meyers, "meyers")?.clone();
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for &k in &mc.k {
            if !(k >= 1.0) {
                return Err(Error::Config { location: Some("meyers.k".into()), message: format!("K = {k} is below 1") });
            }
            for o in [MeyersOrientation::RadialSoft, MeyersOrientation::RadialStiff] {
                let mut solving = Vec::new();
                let candidates: &[f64] = if k == 1.0 { &[1.0] } else { &[k, 1.0 / k] };
                for &gamma in candidates {
                    let res = meyers_equation_residual(k, o, gamma, mc.radius);
                    let solves = res < EQUATION_TOL;
                    let alpha = 2.0 * gamma;
                    let reference = meyers_reference(k, o, mc.radius);
                    rows.push(format!(
                        "{},{},{},{:e},{},{},{},{}",
                        fmt_f64(k),
                        o.name(),
                        fmt_f64(gamma),
                        res,
                        solves as u8,
                        fmt_f64(alpha),
                        classify_alpha(alpha, crate::singularity::DEFAULT_MARGIN).name(),
                        if solves { fmt_f64(reference.energy) } else { "nan".into() }
                    ));
                    if solves {
                        solving.push(gamma);
                    }
                }
                lines.push(format!("K={k} {}: gamma {:?}", o.name(), solving));
            }
        }
        self.csv("meyers.csv", "K,orientation,gamma,residual,solves,alpha,class,local_energy", &rows)?;
        self.say(format!("meyers-verify: {}", lines.join("; ")));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_trailer() {
        let t = csv_text("a,b", &["1,2".into()], "4x4", 9);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines[2], format!("# {VERSION},4x4,9"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(Command::parse(c.name()), Some(c));
        }
        assert_eq!(Command::parse("nope"), None);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_line_plot("t", "x", "y", &[("a", vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)])]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("NaN"));
    }
}
