use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crackinit::config::ExperimentConfig;
use crackinit::dual;
use crackinit::elastic::{self, Datum};
use crackinit::energy::{Integrand, ScalarCoefficient};
use crackinit::geometry::{CrackSet, Domain, Grid, Point, Rect, Side};
use crackinit::poincare::{self, GraphDomain, PoincareCase};
use crackinit::quasistatic;
use crackinit::runner::{self, Command, RunOptions};

fn py_err(e: crackinit::Error) -> PyErr {
    match e {
        crackinit::Error::InvalidInput(_) | crackinit::Error::Config { .. } | crackinit::Error::NonConformingCrack(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Elastic problem: domain, grid, integrand and boundary datum.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: Arc<elastic::Problem>,
}

#[pymethods]
impl PyProblem {
    /// Unit square with `f = (c/p)|ξ|^p` and datum `c0 + cx x + cy y` on the given sides.
    #[new]
    #[pyo3(signature = (n, p = 2.0, c = 2.0, cx = 1.0, cy = 0.0, c0 = 0.0, dirichlet = vec!["left".to_string(), "right".to_string(), "top".to_string(), "bottom".to_string()]))]
    fn new(n: usize, p: f64, c: f64, cx: f64, cy: f64, c0: f64, dirichlet: Vec<String>) -> PyResult<Self> {
        let sides = dirichlet
            .iter()
            .map(|s| Side::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown side `{s}`"))))
            .collect::<PyResult<Vec<_>>>()?;
        let domain = Domain::with_dirichlet_sides(Rect::unit_square(), &sides);
        let grid = Grid::for_domain(&domain, n, n).map_err(py_err)?;
        let integrand = Integrand::p_power(p, ScalarCoefficient::Constant(c)).map_err(py_err)?;
        let inner = elastic::Problem::new(domain, grid, integrand, Datum::Linear { c0, cx, cy }).map_err(py_err)?;
        Ok(PyProblem { inner })
    }

    /// Build from the text of a TOML experiment config.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = ExperimentConfig::parse(text).map_err(py_err)?;
        Ok(PyProblem { inner: cfg.problem().map_err(py_err)? })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.grid().h()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.integrand().p()
    }

    /// Crack from axis-aligned segments `(x0, y0, x1, y1)` joining grid nodes.
    #[pyo3(signature = (segments = Vec::new()))]
    fn crack(&self, segments: Vec<(f64, f64, f64, f64)>) -> PyResult<PyCrack> {
        let mut c = CrackSet::empty(self.inner.grid());
        for (x0, y0, x1, y1) in segments {
            c.add_segment(Point::new(x0, y0), Point::new(x1, y1)).map_err(py_err)?;
        }
        Ok(PyCrack { inner: c })
    }

    fn solve(&self, crack: &PyCrack) -> PyResult<PyField> {
        let (field, rep) = elastic::solve(&self.inner, &crack.inner).map_err(py_err)?;
        Ok(PyField { inner: field, residual: rep.residual })
    }

    /// Dual release bound checked against the cracked solve.
    #[pyo3(signature = (crack, m = 1))]
    fn certify(&self, crack: &PyCrack, m: usize) -> PyResult<PyCertificate> {
        let c = dual::certify(&self.inner, &crack.inner, m).map_err(py_err)?;
        Ok(PyCertificate {
            h1: c.h1,
            bound: c.bound.bound,
            release: c.release,
            slack: c.slack,
            residual: c.bound.residual,
            holds: c.holds(),
        })
    }

    /// Time past which debonding the whole Dirichlet boundary beats the elastic state.
    fn load_horizon(&self, k: f64) -> PyResult<f64> {
        quasistatic::load_horizon(&self.inner, k).map_err(py_err)
    }
}

#[pyclass(name = "Crack", frozen)]
struct PyCrack {
    inner: CrackSet,
}

#[pymethods]
impl PyCrack {
    #[getter]
    fn h1(&self) -> f64 {
        self.inner.h1_measure()
    }

    #[getter]
    fn edges(&self) -> usize {
        self.inner.len()
    }

    fn components(&self) -> usize {
        self.inner.connected_components().len()
    }

    fn __repr__(&self) -> String {
        format!("Crack(edges={}, h1={})", self.inner.len(), self.inner.h1_measure())
    }
}

#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: elastic::ScalarField,
    #[pyo3(get)]
    residual: f64,
}

#[pymethods]
impl PyField {
    #[getter]
    fn bulk_energy(&self) -> f64 {
        self.inner.bulk_energy()
    }

    fn total_energy(&self, k: f64) -> f64 {
        self.inner.total_energy(k)
    }

    /// Values per degree of freedom (split nodes carry one value per side).
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }
}

#[pyclass(name = "Certificate", frozen, get_all)]
struct PyCertificate {
    h1: f64,
    bound: f64,
    release: f64,
    slack: f64,
    residual: f64,
    holds: bool,
}

#[pymethods]
impl PyCertificate {
    fn __repr__(&self) -> String {
        format!(
            "Certificate(h1={}, bound={:.4e}, release={:.4e}, holds={})",
            self.h1, self.bound, self.release, self.holds
        )
    }
}

/// Optimal Poincaré constant of case `i`..`iv` on the unit square at `resolution` cells per side.
#[pyfunction]
fn poincare_constant(case: &str, resolution: usize) -> PyResult<f64> {
    let case = PoincareCase::parse(case).ok_or_else(|| PyValueError::new_err(format!("unknown case `{case}`")))?;
    let r = poincare::optimal_constant(&GraphDomain::flat(resolution), case).map_err(py_err)?;
    Ok(r.constant)
}

/// Run one runner subcommand from a config file; returns the summary lines.
#[pyfunction]
#[pyo3(signature = (command, config, out = None, workers = None, seed = None))]
fn run(
    py: Python<'_>,
    command: &str,
    config: std::path::PathBuf,
    out: Option<std::path::PathBuf>,
    workers: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Vec<String>> {
    let cmd = Command::parse(command).ok_or_else(|| PyValueError::new_err(format!("unknown command `{command}`")))?;
    let cfg = ExperimentConfig::load(&config).map_err(py_err)?;
    let opts = RunOptions { workers, out, seed };
    let summary = py.detach(|| runner::run(cmd, &cfg, &opts)).map_err(py_err)?;
    Ok(summary.lines)
}

#[pymodule]
fn crackinit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyCrack>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(poincare_constant, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", runner::VERSION)?;
    Ok(())
}
