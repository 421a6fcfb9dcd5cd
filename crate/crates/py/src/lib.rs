//! Python bindings: meshes, the time stepper, run configurations and the
//! statistics CSV reader.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use urans::closures::{step_k_ode as core_step_k_ode, Closure, ClosureKind};
use urans::fem::Discretization;
use urans::mesh::{offset_circles, read_mesh, unit_square, write_mesh, TriMesh};
use urans::scenario::{self, ForcingSpec, RunConfig};
use urans::statistics::StatsRecord;
use urans::stepper::{Forcing, Stepper, StepperConfig};
use urans::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Solver { .. } | Error::NonFinite { .. } | Error::NumericalInput { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn closure_kind(name: &str) -> PyResult<ClosureKind> {
    name.parse().map_err(to_py)
}

fn record_dict<'py>(py: Python<'py>, r: &StatsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (name, v) in StatsRecord::COLUMNS.iter().zip(r.values()) {
        d.set_item(*name, v)?;
    }
    d.set_item("picard_iters", r.picard_iters)?;
    d.set_item("picard_converged", r.picard_converged)?;
    Ok(d)
}

/// Triangular mesh with tagged boundary edges.
#[pyclass(name = "Mesh", module = "pyurans", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: TriMesh,
}

#[pymethods]
impl PyMesh {
    /// Delaunay mesh of the disk of radius `r1` minus the disk of radius `r2` about `center`.
    #[staticmethod]
    #[pyo3(signature = (n_outer=40, n_inner=20, h_max=0.15, r1=1.0, r2=0.1, center=(0.5, 0.0)))]
    fn offset_circles(n_outer: usize, n_inner: usize, h_max: f64, r1: f64, r2: f64, center: (f64, f64)) -> PyResult<Self> {
        let inner = offset_circles(n_outer, n_inner, h_max, r1, r2, [center.0, center.1]).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn unit_square(n: usize) -> PyResult<Self> {
        Ok(PyMesh { inner: unit_square(n).map_err(to_py)? })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| to_py(Error::io(&path, e)))?;
        Ok(PyMesh { inner: read_mesh(BufReader::new(f)).map_err(to_py)? })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| to_py(Error::io(&path, e)))?;
        write_mesh(&self.inner, BufWriter::new(f)).map_err(|e| to_py(Error::io(&path, e)))
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    /// `(shortest, longest)` edge length.
    fn edge_length_range(&self) -> (f64, f64) {
        self.inner.edge_length_range()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, triangles={})", self.inner.n_vertices(), self.inner.n_triangles())
    }
}

/// Time stepper for one closure on one mesh.
#[pyclass(name = "Simulation", module = "pyurans", unsendable)]
struct PySimulation {
    stepper: Stepper,
    forcing: Box<dyn Forcing + Send + Sync>,
}

#[pymethods]
impl PySimulation {
    #[new]
    #[pyo3(signature = (mesh, closure="half-eq", forcing="offset-circles", dt=0.01, nu=1e-4, tau=0.1, mu=0.55, t_star=1.0, filter=false, picard_tol=1e-6, picard_max=1, anderson=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mesh: &PyMesh,
        closure: &str,
        forcing: &str,
        dt: f64,
        nu: f64,
        tau: f64,
        mu: f64,
        t_star: f64,
        filter: bool,
        picard_tol: f64,
        picard_max: usize,
        anderson: usize,
    ) -> PyResult<Self> {
        let mut c = Closure::new(closure_kind(closure)?);
        c.tau = tau;
        c.mu = mu;
        let forcing: ForcingSpec = forcing.parse().map_err(to_py)?;
        let config = StepperConfig {
            dt,
            nu,
            picard_tol,
            picard_max,
            anderson,
            filter,
            t_star,
            reynolds: c.length_scale / nu,
            convection: true,
        };
        let disc = Discretization::new(mesh.inner.clone()).map_err(to_py)?;
        let stepper = Stepper::new(disc, c, config).map_err(to_py)?;
        Ok(PySimulation { stepper, forcing: forcing.build(nu) })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.stepper.time()
    }

    #[getter]
    fn closure(&self) -> &'static str {
        self.stepper.closure().kind.as_str()
    }

    /// Advances one step and returns its statistics.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.stepper.advance(self.forcing.as_ref()).map_err(to_py)?;
        record_dict(py, &r)
    }

    /// Advances `n` steps and returns the statistics of each.
    fn advance<'py>(&mut self, py: Python<'py>, n: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
        (0..n).map(|_| self.step(py)).collect()
    }

    /// Velocity components at the P2 nodes.
    fn velocity(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.stepper.disc();
        let v = &self.stepper.state().flow.velocity;
        let n = d.dofs.n_nodes();
        (
            (0..n).map(|i| v[d.dofs.velocity_dof(i, 0)]).collect(),
            (0..n).map(|i| v[d.dofs.velocity_dof(i, 1)]).collect(),
        )
    }

    /// Volume average of k; 0 before the model is switched on.
    fn k_average(&self) -> f64 {
        self.stepper.state().turb.k_average(self.stepper.disc())
    }
}

/// Serialized benchmark configuration for a closure.
#[pyfunction]
#[pyo3(signature = (closure="half-eq"))]
fn benchmark_config(closure: &str) -> PyResult<String> {
    Ok(RunConfig::benchmark(closure_kind(closure)?).serialize())
}

/// Runs a configuration given as key = value text; returns the stats CSV path.
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn run(py: Python<'_>, config: &str, out: Option<PathBuf>) -> PyResult<PathBuf> {
    let mut cfg = RunConfig::parse(config).map_err(to_py)?;
    if let Some(o) = out {
        cfg.output.dir = o;
    }
    let outcome = py.detach(|| scenario::run(&cfg)).map_err(to_py)?;
    Ok(outcome.stats_path)
}

/// Reads a stats CSV into `(metadata, columns)` dictionaries.
#[pyfunction]
fn read_stats<'py>(py: Python<'py>, path: PathBuf) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let f = File::open(&path).map_err(|e| to_py(Error::io(&path, e)))?;
    let table = scenario::read_stats_csv(BufReader::new(f)).map_err(to_py)?;
    let meta = PyDict::new(py);
    for (k, v) in &table.metadata {
        meta.set_item(k, v)?;
    }
    let cols = PyDict::new(py);
    for (j, name) in StatsRecord::COLUMNS.iter().enumerate() {
        let values: Vec<Option<f64>> = table.records.iter().map(|r| r.values()[j]).collect();
        cols.set_item(*name, values)?;
    }
    Ok((meta, cols))
}

/// One backward Euler step of the scalar k equation.
#[pyfunction]
fn step_k_ode(k: f64, eps: f64, dt: f64, tau: f64) -> PyResult<f64> {
    core_step_k_ode(k, eps, dt, tau).map_err(to_py)
}

#[pymodule]
fn pyurans(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(benchmark_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(read_stats, m)?)?;
    m.add_function(wrap_pyfunction!(step_k_ode, m)?)?;
    m.add("CLOSURES", ClosureKind::ALL.iter().map(|k| k.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
