//! Python bindings: meshes, Fourier symbols, branch sweeps and the cyclone
//! benchmark.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use seaice_tri::benchmark::{self, Diagnostics as RsDiagnostics};
use seaice_tri::config::RunConfig;
use seaice_tri::eigen::{self, BranchClass, BranchTable as RsBranchTable, SweepParams};
use seaice_tri::mevp::{Domain, Scheme};
use seaice_tri::symbols;
use seaice_tri::{Error, GridKind, SymbolParams, TriMesh as RsMesh, Wavevector};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonFinite { .. } | Error::Cfl { .. } | Error::NonConvergence { .. } | Error::Classification(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn grid(name: &str, eps: f64) -> PyResult<GridKind> {
    GridKind::parse_with_eps(name, eps).map_err(to_py)
}

fn rows(m: &seaice_tri::eigen::CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect()).collect()
}

/// Equilateral triangular mesh.
#[pyclass(name = "TriMesh", frozen)]
struct PyTriMesh {
    inner: Arc<RsMesh>,
}

#[pymethods]
impl PyTriMesh {
    /// Doubly periodic mesh of `nx x ny` lattice periods with side `a`.
    #[staticmethod]
    fn periodic(nx: usize, ny: usize, a: f64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(seaice_tri::build_periodic_mesh(nx, ny, a).map_err(to_py)?) })
    }

    /// Same lattice folded into a rectangle (`ny` even).
    #[staticmethod]
    fn rectangular(nx: usize, ny: usize, a: f64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(seaice_tri::build_rectangular_mesh(nx, ny, a).map_err(to_py)?) })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    fn vertex_positions(&self) -> Vec<(f64, f64)> {
        self.inner.vertex_pos.iter().map(|p| (p[0], p[1])).collect()
    }

    fn cell_centroids(&self) -> Vec<(f64, f64)> {
        self.inner.cell_centroid.iter().map(|p| (p[0], p[1])).collect()
    }

    fn cell_vertices(&self) -> Vec<[usize; 3]> {
        self.inner.cell_vertices.clone()
    }

    fn is_commensurate(&self, k: f64, l: f64) -> bool {
        self.inner.is_commensurate(k, l)
    }

    /// Symbol measured by applying the operator to plane waves on this mesh.
    #[pyo3(signature = (grid_kind, k, l, eta=1.0, z=1.0, eps=1.0))]
    fn numeric_symbol(&self, grid_kind: &str, k: f64, l: f64, eta: f64, z: f64, eps: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let p = SymbolParams { a: self.inner.a, eta, z };
        let s = symbols::numeric_symbol(grid(grid_kind, eps)?, Wavevector::new(k, l), &self.inner, &p).map_err(to_py)?;
        Ok(rows(&s.matrix))
    }

    /// Grid-noise metric of a per-cell field on the fully periodic domain.
    fn noise_metric(&self, values: Vec<f64>) -> PyResult<f64> {
        if values.len() != self.inner.n_cells() {
            return Err(PyValueError::new_err(format!("expected {} cell values", self.inner.n_cells())));
        }
        let d = Domain::periodic(self.inner.clone(), Scheme::A);
        Ok(benchmark::noise_metric(&values, &d))
    }

    fn __repr__(&self) -> String {
        format!("TriMesh(nx={}, ny={}, a={}, layout={:?})", self.inner.nx, self.inner.ny, self.inner.a, self.inner.layout)
    }
}

/// Closed-form symbol matrix of `grid_kind` at wavevector `(k, l)`.
#[pyfunction]
#[pyo3(signature = (grid_kind, k, l, a=1.0, eta=1.0, z=1.0, eps=1.0))]
fn symbol(grid_kind: &str, k: f64, l: f64, a: f64, eta: f64, z: f64, eps: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let s = symbols::analytic_symbol(grid(grid_kind, eps)?, Wavevector::new(k, l), &SymbolParams { a, eta, z })
        .map_err(to_py)?;
    Ok(rows(&s.matrix))
}

/// Eigenvalues of the symbol, ascending by real part.
#[pyfunction]
#[pyo3(signature = (grid_kind, k, l, a=1.0, eta=1.0, z=1.0, eps=1.0))]
fn eigenvalues(grid_kind: &str, k: f64, l: f64, a: f64, eta: f64, z: f64, eps: f64) -> PyResult<Vec<Complex64>> {
    let s = symbols::analytic_symbol(grid(grid_kind, eps)?, Wavevector::new(k, l), &SymbolParams { a, eta, z })
        .map_err(to_py)?;
    s.eigenvalues().map_err(to_py)
}

/// `(-eta |k|^2, -(eta + zeta) |k|^2)`
#[pyfunction]
fn continuous_eigenvalues(k: f64, l: f64, eta: f64, zeta: f64) -> (f64, f64) {
    let [x, y] = symbols::continuous_eigenvalues(Wavevector::new(k, l), eta, zeta);
    (x, y)
}

/// Largest `|lambda| / eta` over a `n x n` reciprocal-cell sample.
#[pyfunction]
#[pyo3(signature = (grid_kind, a=1.0, z=1.0, eps=1.0, n=64))]
fn max_lambda2(py: Python<'_>, grid_kind: &str, a: f64, z: f64, eps: f64, n: usize) -> PyResult<f64> {
    let kind = grid(grid_kind, eps)?;
    let p = SymbolParams { a, eta: 1.0, z };
    py.detach(|| eigen::max_lambda2(kind, &p, n)).map(|r| r.lambda2).map_err(to_py)
}

/// Eigenvalue branches along one direction.
#[pyclass(name = "BranchTable", frozen)]
struct PyBranchTable {
    inner: RsBranchTable,
}

#[pymethods]
impl PyBranchTable {
    #[getter]
    fn grid(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn direction(&self) -> f64 {
        self.inner.direction
    }

    /// `|k| a` of every sample.
    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples.clone()
    }

    #[getter]
    fn crossings(&self) -> usize {
        self.inner.crossings
    }

    /// `(id, class, values)` per branch; values are `a^2 lambda / eta`.
    fn branches(&self) -> Vec<(usize, &'static str, Vec<Complex64>)> {
        self.inner.branches.iter().map(|b| (b.id, b.class.as_str(), b.values.clone())).collect()
    }

    /// Number of branches of class `physical`, `spurious` or `kernel`.
    fn count(&self, class: &str) -> PyResult<usize> {
        let c = match class {
            "physical" => BranchClass::Physical,
            "spurious" => BranchClass::Spurious,
            "kernel" => BranchClass::Kernel,
            other => return Err(PyValueError::new_err(format!("unknown branch class {other:?}"))),
        };
        Ok(self.inner.count(c))
    }

    fn zero_branches(&self) -> usize {
        self.inner.zero_branches()
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

#[pyfunction]
#[pyo3(signature = (grid_kind, direction, samples=200, z=1.0, eps=1.0, ka_max=None))]
fn sweep_branches(
    py: Python<'_>,
    grid_kind: &str,
    direction: f64,
    samples: usize,
    z: f64,
    eps: f64,
    ka_max: Option<f64>,
) -> PyResult<PyBranchTable> {
    let kind = grid(grid_kind, eps)?;
    let sp = SweepParams { symbol: SymbolParams { a: 1.0, eta: 1.0, z }, direction, n_samples: samples, ka_max };
    let inner = py.detach(|| eigen::sweep_branches(kind, &sp)).map_err(to_py)?;
    Ok(PyBranchTable { inner })
}

/// Run configuration in the `key = value` format.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text=""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: RunConfig::parse_str(text).map_err(to_py)? })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn n_steps(&self) -> usize {
        self.inner.bench.n_steps()
    }

    fn __repr__(&self) -> String {
        let b = &self.inner.bench;
        format!("Config(grid={}, dt_s={}, alpha={}, beta={})", b.scheme.name(), b.mevp.dt, b.mevp.alpha, b.mevp.beta)
    }
}

/// Diagnostics of one benchmark run.
#[pyclass(name = "Diagnostics", frozen)]
struct PyDiagnostics {
    inner: RsDiagnostics,
}

#[pymethods]
impl PyDiagnostics {
    #[getter]
    fn time_s(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.time).collect()
    }

    #[getter]
    fn kinetic_energy(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.kinetic_energy).collect()
    }

    #[getter]
    fn noise_metric(&self) -> Vec<f64> {
        self.inner.noise_history()
    }

    #[getter]
    fn stability_margin(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.stability_margin).collect()
    }

    #[getter]
    fn max_speed(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.max_speed).collect()
    }

    /// Margin after every external step.
    #[getter]
    fn margins(&self) -> Vec<f64> {
        self.inner.margins.clone()
    }

    #[getter]
    fn shear(&self) -> Vec<f64> {
        self.inner.shear.clone()
    }

    #[getter]
    fn concentration(&self) -> Vec<f64> {
        self.inner.concentration.clone()
    }

    /// `None` for completed runs, else the abort reason.
    #[getter]
    fn abort(&self) -> Option<String> {
        self.inner.abort.as_ref().map(|a| format!("step {}: {}", a.step, a.reason))
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

#[pyfunction]
fn run_benchmark(py: Python<'_>, config: &PyConfig) -> PyResult<PyDiagnostics> {
    let cfg = config.inner.bench.clone();
    let inner = py.detach(|| benchmark::run_benchmark(&cfg)).map_err(to_py)?;
    Ok(PyDiagnostics { inner })
}

/// `((air_u, air_v), (ocean_u, ocean_v))` at `(x, y)` and time `t`.
#[pyfunction]
fn cyclone_forcing(x: f64, y: f64, t: f64, config: &PyConfig) -> ((f64, f64), (f64, f64)) {
    let (air, ocean) = benchmark::cyclone_forcing([x, y], t, &config.inner.bench);
    ((air[0], air[1]), (ocean[0], ocean[1]))
}

#[pymodule]
fn seaice_tri_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTriMesh>()?;
    m.add_class::<PyBranchTable>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyDiagnostics>()?;
    m.add_function(wrap_pyfunction!(symbol, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(continuous_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(max_lambda2, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_branches, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(cyclone_forcing, m)?)?;
    Ok(())
}
