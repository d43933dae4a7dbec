//! TOML experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::crack_search::{Anchors, CrackFamily, FamilySpec, LADDER_RUNGS};
use crate::elastic::{Datum, Problem, SolveOptions, LINEAR_TOL, NEWTON_TOL};
use crate::energy::{Integrand, MatrixCoefficient, MeyersOrientation, ScalarCoefficient};
use crate::error::{Error, Result};
use crate::geometry::{BoundarySegment, CrackSet, Domain, Grid, Orientation, Point, Rect, Side};
use crate::poincare::PoincareCase;
use crate::singularity::DEFAULT_MARGIN;

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { location: Some(field.to_string()), message: message.into() }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Toughness `k`.
    #[serde(default = "one")]
    pub toughness: f64,
    pub grid: GridConfig,
    #[serde(default)]
    pub domain: DomainConfig,
    pub integrand: IntegrandConfig,
    pub datum: DatumConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    pub crack: Option<CrackConfig>,
    pub family: Option<FamilyConfig>,
    pub dual_bound: Option<DualBoundConfig>,
    pub release_curve: Option<ReleaseCurveConfig>,
    pub classify: Option<ClassifyConfig>,
    pub evolve: Option<EvolveConfig>,
    pub poincare: Option<PoincareConfig>,
    pub meyers: Option<MeyersConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// `[x0, y0, x1, y1]`.
    #[serde(default = "unit_rect")]
    pub rect: [f64; 4],
    /// Whole sides, `"all"`, or `"side:start:end"` pieces.
    #[serde(default = "all_sides")]
    pub dirichlet: Vec<String>,
}

fn unit_rect() -> [f64; 4] {
    [0.0, 0.0, 1.0, 1.0]
}

fn all_sides() -> Vec<String> {
    vec!["all".into()]
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { rect: unit_rect(), dirichlet: all_sides() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrandConfig {
    /// `p_power` or `quadratic_matrix`.
    pub kind: String,
    pub p: f64,
    #[serde(default)]
    pub coefficient: CoefficientConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant { value: f64 },
    Checkerboard { low: f64, high: f64, period: f64 },
    Matrix { a: [f64; 3] },
    Meyers { k: f64, orientation: String, #[serde(default)] center: [f64; 2] },
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig::Constant { value: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumConfig {
    Constant { value: f64 },
    Linear { #[serde(default)] c0: f64, #[serde(default)] cx: f64, #[serde(default)] cy: f64 },
    /// `amplitude · r^gamma cos θ` about `center`.
    Power { #[serde(default = "one")] amplitude: f64, gamma: f64, #[serde(default)] center: [f64; 2] },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "linear_tol")]
    pub linear: f64,
    #[serde(default = "newton_tol")]
    pub newton: f64,
    #[serde(default = "max_newton")]
    pub max_newton: usize,
    #[serde(default = "admissibility")]
    pub admissibility: f64,
}

fn linear_tol() -> f64 {
    LINEAR_TOL
}
fn newton_tol() -> f64 {
    NEWTON_TOL
}
fn max_newton() -> usize {
    200
}
fn admissibility() -> f64 {
    crate::dual::ADMISSIBILITY_TOL
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            linear: linear_tol(),
            newton: newton_tol(),
            max_newton: max_newton(),
            admissibility: admissibility(),
        }
    }
}

/// One explicit crack: axis-aligned segments and/or a crack file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackConfig {
    #[serde(default)]
    pub segments: Vec<[f64; 4]>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "one_usize")]
    pub max_components: usize,
    #[serde(default)]
    pub segments: Vec<SegmentsConfig>,
    #[serde(default)]
    pub circles: Vec<CirclesConfig>,
    #[serde(default)]
    pub debond: Vec<DebondConfig>,
    /// Explicit cracks, each given like `[crack]`.
    #[serde(default)]
    pub cracks: Vec<CrackConfig>,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentsConfig {
    /// Lattice stride in grid nodes; ignored when `points` is given.
    #[serde(default = "one_usize")]
    pub stride: usize,
    /// Optional `[x0, y0, x1, y1]` restriction of lattice anchors.
    pub region: Option<[f64; 4]>,
    pub points: Option<Vec<[f64; 2]>>,
    pub lengths: Vec<usize>,
    #[serde(default = "both_orientations")]
    pub orientations: Vec<String>,
    #[serde(default)]
    pub centered: bool,
}

fn both_orientations() -> Vec<String> {
    vec!["horizontal".into(), "vertical".into()]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirclesConfig {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebondConfig {
    #[serde(default)]
    pub lengths: Vec<usize>,
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default)]
    pub full: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualBoundConfig {
    /// Components allowed per cover.
    #[serde(default = "one_usize")]
    pub m: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseCurveConfig {
    pub l_max: f64,
    #[serde(default = "ladder_rungs")]
    pub rungs: usize,
    pub localization: Option<LocalizationConfig>,
}

fn ladder_rungs() -> usize {
    LADDER_RUNGS
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationConfig {
    pub point: [f64; 2],
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    /// Extra probes drawn uniformly from the middle half of the domain.
    #[serde(default)]
    pub random_probes: usize,
    #[serde(default = "margin")]
    pub margin: f64,
}

fn margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// Final time; the closed-form load horizon when absent.
    pub horizon: Option<f64>,
    pub steps: usize,
    #[serde(default = "margin")]
    pub margin: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    #[serde(default = "all_cases")]
    pub cases: Vec<String>,
    pub lipschitz: f64,
    pub height: f64,
    pub samples: usize,
    pub resolution: usize,
}

fn all_cases() -> Vec<String> {
    PoincareCase::ALL.iter().map(|c| c.name().to_string()).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeyersConfig {
    pub k: Vec<f64>,
    /// Radius of the annulus where the equation residual is sampled.
    #[serde(default = "meyers_radius")]
    pub radius: f64,
}

fn meyers_radius() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: out_dir(), svg: true }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let location = e.span().map(|s| {
                let (l, c) = line_col(text, s.start);
                format!("line {l}, column {c}")
            });
            Error::Config { location, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { location: None, message: format!("{}: {e}", path.display()) })?;
        let mut cfg = Self::parse(&text)?;
        // Crack files are relative to the config.
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |c: &mut CrackConfig| {
            if let Some(f) = &c.file {
                if f.is_relative() {
                    c.file = Some(base.join(f));
                }
            }
        };
        if let Some(c) = cfg.crack.as_mut() {
            fix(c);
        }
        if let Some(f) = cfg.family.as_mut() {
            f.cracks.iter_mut().for_each(fix);
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.grid.nx == 0 || self.grid.ny == 0 {
            return Err(config_err("grid", "nx and ny must be positive"));
        }
        if !(self.toughness > 0.0) {
            return Err(config_err("toughness", "must be positive"));
        }
        let t = &self.tolerances;
        if !(t.linear > 0.0 && t.newton > 0.0 && t.admissibility > 0.0) || t.max_newton == 0 {
            return Err(config_err("tolerances", "tolerances must be positive"));
        }
        self.domain()?;
        self.integrand()?;
        if let Some(p) = &self.poincare {
            for c in &p.cases {
                PoincareCase::parse(c).ok_or_else(|| config_err("poincare.cases", format!("unknown case `{c}`")))?;
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        let [x0, y0, x1, y1] = self.domain.rect;
        let rect = Rect::new(x0, y0, x1, y1).map_err(|e| config_err("domain.rect", e.to_string()))?;
        let mut segs = Vec::new();
        for entry in &self.domain.dirichlet {
            let parts: Vec<&str> = entry.split(':').collect();
            if parts[0] == "all" && parts.len() == 1 {
                segs.extend(Side::ALL.map(|side| {
                    let (start, end) = rect.side_range(side);
                    BoundarySegment { side, start, end }
                }));
                continue;
            }
            let side = Side::parse(parts[0])
                .ok_or_else(|| config_err("domain.dirichlet", format!("unknown side `{}`", parts[0])))?;
            let (start, end) = match parts.len() {
                1 => rect.side_range(side),
                3 => {
                    let num = |s: &str| {
                        s.parse::<f64>()
                            .map_err(|_| config_err("domain.dirichlet", format!("bad number `{s}` in `{entry}`")))
                    };
                    (num(parts[1])?, num(parts[2])?)
                }
                _ => return Err(config_err("domain.dirichlet", format!("expected `side` or `side:start:end`, got `{entry}`"))),
            };
            segs.push(BoundarySegment { side, start, end });
        }
        Domain::new(rect, segs).map_err(|e| config_err("domain.dirichlet", e.to_string()))
    }

    pub fn integrand(&self) -> Result<Integrand> {
        let c = &self.integrand;
        match c.kind.as_str() {
            "p_power" => {
                if !(c.p > 1.0) {
                    return Err(config_err("integrand.p", "must exceed 1"));
                }
                let coef = match c.coefficient {
                    CoefficientConfig::Constant { value } => ScalarCoefficient::Constant(value),
                    CoefficientConfig::Checkerboard { low, high, period } => {
                        ScalarCoefficient::Checkerboard { low, high, period }
                    }
                    _ => return Err(config_err("integrand.coefficient", "p_power takes a constant or checkerboard coefficient")),
                };
                Integrand::p_power(c.p, coef).map_err(|e| config_err("integrand", e.to_string()))
            }
            "quadratic_matrix" => {
                if c.p != 2.0 {
                    return Err(config_err("integrand.p", "quadratic_matrix requires p = 2"));
                }
                let coef = match &c.coefficient {
                    CoefficientConfig::Constant { value } => MatrixCoefficient::Constant([*value, 0.0, *value]),
                    CoefficientConfig::Matrix { a } => MatrixCoefficient::Constant(*a),
                    CoefficientConfig::Meyers { k, orientation, center } => MatrixCoefficient::Meyers {
                        k: *k,
                        orientation: MeyersOrientation::parse(orientation).ok_or_else(|| {
                            config_err("integrand.coefficient.orientation", format!("unknown orientation `{orientation}`"))
                        })?,
                        center: Point::new(center[0], center[1]),
                    },
                    CoefficientConfig::Checkerboard { .. } => {
                        return Err(config_err("integrand.coefficient", "checkerboard needs kind = \"p_power\""))
                    }
                };
                Integrand::quadratic(coef).map_err(|e| config_err("integrand", e.to_string()))
            }
            other => Err(config_err("integrand.kind", format!("unknown kind `{other}` (p_power or quadratic_matrix)"))),
        }
    }

    pub fn datum(&self) -> Datum {
        match self.datum {
            DatumConfig::Constant { value } => Datum::Constant(value),
            DatumConfig::Linear { c0, cx, cy } => Datum::Linear { c0, cx, cy },
            DatumConfig::Power { amplitude, gamma, center } => {
                Datum::Power { amplitude, gamma, center: Point::new(center[0], center[1]) }
            }
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            linear_tol: self.tolerances.linear,
            newton_tol: self.tolerances.newton,
            max_newton: self.tolerances.max_newton,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::for_domain(&self.domain()?, self.grid.nx, self.grid.ny).map_err(|e| config_err("grid", e.to_string()))
    }

    pub fn problem(&self) -> Result<Arc<Problem>> {
        let domain = self.domain()?;
        let grid = self.grid()?;
        let p = Problem::new(domain, grid, self.integrand()?, self.datum())?;
        Ok(p.with_options(self.solve_options()))
    }

    /// The `[crack]` section as a crack set (empty when absent).
    pub fn crack(&self, grid: &Grid) -> Result<CrackSet> {
        match &self.crack {
            Some(c) => crack_from(c, grid, "crack"),
            None => Ok(CrackSet::empty(grid)),
        }
    }

    pub fn family_spec(&self) -> Result<FamilySpec> {
        let f = self.family.as_ref().ok_or_else(|| config_err("family", "section is required"))?;
        let mut parts = Vec::new();
        for (i, s) in f.segments.iter().enumerate() {
            let field = format!("family.segments[{i}]");
            let anchors = match &s.points {
                Some(pts) => Anchors::Points(pts.iter().map(|p| Point::new(p[0], p[1])).collect()),
                None => Anchors::Lattice {
                    stride: s.stride,
                    region: s
                        .region
                        .map(|r| Rect::new(r[0], r[1], r[2], r[3]))
                        .transpose()
                        .map_err(|e| config_err(&format!("{field}.region"), e.to_string()))?,
                },
            };
            let orientations = s
                .orientations
                .iter()
                .map(|o| match o.as_str() {
                    "horizontal" => Ok(Orientation::Horizontal),
                    "vertical" => Ok(Orientation::Vertical),
                    other => Err(config_err(&format!("{field}.orientations"), format!("unknown orientation `{other}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            parts.push(FamilySpec::Segments { anchors, lengths: s.lengths.clone(), orientations, centered: s.centered });
        }
        for c in &f.circles {
            parts.push(FamilySpec::Circles {
                centers: c.centers.iter().map(|p| Point::new(p[0], p[1])).collect(),
                radii: c.radii.clone(),
            });
        }
        for d in &f.debond {
            parts.push(FamilySpec::BoundaryDebond { lengths: d.lengths.clone(), stride: d.stride, full: d.full });
        }
        Ok(FamilySpec::Union(parts))
    }

    pub fn family(&self, grid: &Grid) -> Result<CrackFamily> {
        let spec = self.family_spec()?;
        let f = self.family.as_ref().expect("checked by family_spec");
        let domain = self.domain()?;
        let mut raw = Vec::new();
        if let FamilySpec::Union(parts) = &spec {
            if !parts.is_empty() {
                let generated = CrackFamily::build(&spec, &domain, grid, usize::MAX);
                match generated {
                    Ok(fam) => raw.extend(fam.members()[1..].iter().cloned()),
                    Err(Error::EmptyFamily) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        for (i, c) in f.cracks.iter().enumerate() {
            raw.push(crack_from(c, grid, &format!("family.cracks[{i}]"))?);
        }
        CrackFamily::from_cracks(grid, raw, f.max_components)
    }

    pub fn out_dir(&self) -> &Path {
        &self.output.dir
    }
}

fn crack_from(c: &CrackConfig, grid: &Grid, field: &str) -> Result<CrackSet> {
    let mut crack = match &c.file {
        Some(path) => CrackSet::read_file(grid, path).map_err(|e| config_err(&format!("{field}.file"), e.to_string()))?,
        None => CrackSet::empty(grid),
    };
    for s in &c.segments {
        crack
            .add_segment(Point::new(s[0], s[1]), Point::new(s[2], s[3]))
            .map_err(|e| config_err(&format!("{field}.segments"), e.to_string()))?;
    }
    Ok(crack)
}
