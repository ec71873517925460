//! Python bindings. Fields cross the boundary as numpy arrays of shape
//! `(nx, ny, nz)` for scalars and `(3, nx, ny, nz)` for vectors, in the same
//! row-major order the solver uses.

use std::path::PathBuf;

use metacont::diffops;
use metacont::dynamics::{self, DtSpec, FluidState, MediumParams, StepControl, System};
use metacont::emlaws;
use metacont::fields::{GridSpec, ScalarField, VectorField};
use metacont::runner::{self, RunConfig};
use metacont::scenarios::{self, ScenarioSpec};
use metacont::verify::{self, Level, Tamper};
use num_complex::Complex64;
use numpy::{
    IntoPyArray, PyArray1, PyArrayDyn, PyArrayMethods, PyReadonlyArray1, PyReadonlyArrayDyn, PyUntypedArrayMethods,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py_err(e: metacont::Error) -> PyErr {
    let msg = runner::error_json(&e).to_string();
    match e {
        metacont::Error::NonFinite { .. }
        | metacont::Error::Divergence { .. }
        | metacont::Error::DensityNotPositive { .. }
        | metacont::Error::Fit(_)
        | metacont::Error::Io { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn to_py_json<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_system(name: &str) -> PyResult<System> {
    System::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown system `{name}`")))
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid {
    inner: GridSpec,
}

#[pymethods]
impl PyGrid {
    /// `lengths` defaults to 2 pi on every axis.
    #[new]
    #[pyo3(signature = (dims, lengths=None))]
    fn new(dims: [usize; 3], lengths: Option<[f64; 3]>) -> PyResult<Self> {
        let lengths = lengths.unwrap_or([2.0 * std::f64::consts::PI; 3]);
        Ok(PyGrid {
            inner: GridSpec::new(dims, lengths).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.inner.dims()
    }

    #[getter]
    fn lengths(&self) -> [f64; 3] {
        self.inner.lengths()
    }

    #[getter]
    fn spacing(&self) -> [f64; 3] {
        self.inner.spacing()
    }

    fn __repr__(&self) -> String {
        format!("Grid(dims={:?}, lengths={:?})", self.inner.dims(), self.inner.lengths())
    }
}

#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyParams {
    inner: MediumParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (mu=1.0, eta=1.0, lam=0.0, kappa=0.0, nu=0.0, tau=None, zeta=None))]
    fn new(mu: f64, eta: f64, lam: f64, kappa: f64, nu: f64, tau: Option<f64>, zeta: Option<f64>) -> PyResult<Self> {
        let inner = MediumParams {
            mu,
            eta,
            lambda: lam,
            kappa,
            nu,
            tau,
            zeta,
        };
        inner.validate().map_err(to_py_err)?;
        Ok(PyParams { inner })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    /// Shear wave speed.
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }

    /// Compressional wave speed.
    #[getter]
    fn c_s(&self) -> f64 {
        self.inner.c_s()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Params(mu={}, eta={}, lam={}, kappa={})", p.mu, p.eta, p.lambda, p.kappa)
    }
}

fn scalar_to_py<'py>(py: Python<'py>, f: &ScalarField) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let d = f.grid().dims();
    Ok(f.values().to_vec().into_pyarray(py).reshape(vec![d[0], d[1], d[2]])?.to_dyn().clone())
}

fn vector_to_py<'py>(py: Python<'py>, v: &VectorField) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let d = v.grid().dims();
    let mut all = Vec::with_capacity(3 * v.grid().len());
    for a in 0..3 {
        all.extend_from_slice(v.comp(a).values());
    }
    Ok(all.into_pyarray(py).reshape(vec![3, d[0], d[1], d[2]])?.to_dyn().clone())
}

fn scalar_from_py(grid: GridSpec, a: &PyReadonlyArrayDyn<'_, f64>) -> PyResult<ScalarField> {
    let d = grid.dims();
    if a.shape() != [d[0], d[1], d[2]] {
        return Err(PyValueError::new_err(format!("expected shape {:?}, got {:?}", d, a.shape())));
    }
    Ok(ScalarField::from_values(grid, a.as_array().iter().copied().collect()))
}

fn vector_from_py(grid: GridSpec, a: &PyReadonlyArrayDyn<'_, f64>) -> PyResult<VectorField> {
    let d = grid.dims();
    if a.shape() != [3, d[0], d[1], d[2]] {
        return Err(PyValueError::new_err(format!(
            "expected shape (3, {}, {}, {}), got {:?}",
            d[0],
            d[1],
            d[2],
            a.shape()
        )));
    }
    let flat: Vec<f64> = a.as_array().iter().copied().collect();
    let n = grid.len();
    let comp = |i: usize| ScalarField::from_values(grid, flat[i * n..(i + 1) * n].to_vec());
    Ok(VectorField::new(comp(0), comp(1), comp(2)))
}

/// Evolving state of one of the governing systems.
#[pyclass(name = "State", frozen)]
struct PyState {
    inner: FluidState,
    system: System,
}

#[pymethods]
impl PyState {
    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    #[getter]
    fn system(&self) -> &'static str {
        self.system.name()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: *self.inner.grid(),
        }
    }

    #[getter]
    fn v<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
        vector_to_py(py, &self.inner.v)
    }

    #[getter]
    fn e<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
        vector_to_py(py, &self.inner.e)
    }

    #[getter]
    fn p<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
        scalar_to_py(py, &self.inner.p)
    }

    #[getter]
    fn u<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyArrayDyn<f64>>>> {
        self.inner.u.as_ref().map(|f| vector_to_py(py, f)).transpose()
    }

    #[getter]
    fn v_t<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyArrayDyn<f64>>>> {
        self.inner.v_t.as_ref().map(|f| vector_to_py(py, f)).transpose()
    }

    #[getter]
    fn b<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyArrayDyn<f64>>>> {
        self.inner.b.as_ref().map(|f| vector_to_py(py, f)).transpose()
    }

    #[getter]
    fn mu_field<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyArrayDyn<f64>>>> {
        self.inner.mu_field.as_ref().map(|f| scalar_to_py(py, f)).transpose()
    }

    /// Advances to `t_end`; `dt=None` uses the CFL-limited step.
    #[pyo3(signature = (params, t_end, dt=None, cfl=0.4))]
    fn integrate(&self, py: Python<'_>, params: &PyParams, t_end: f64, dt: Option<f64>, cfl: f64) -> PyResult<PyState> {
        let control = StepControl {
            dt: dt.map_or(DtSpec::AUTO, DtSpec::Fixed),
            cfl,
            t_end,
        };
        let start = self.inner.clone();
        let system = self.system;
        let p = params.inner;
        let end = py
            .detach(|| dynamics::integrate(start, &p, system, &control, |_, _| Ok(())))
            .map_err(to_py_err)?;
        Ok(PyState { inner: end, system })
    }

    /// Residual norms of every registered law at this state, as a dict.
    fn law_report<'py>(&self, py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyAny>> {
        let r = emlaws::report_for(self.system, &self.inner, &params.inner).map_err(to_py_err)?;
        to_py_json(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("State(system={}, time={})", self.system.name(), self.inner.time)
    }
}

/// Initial state for a scenario given as a dict-like JSON string or a dict.
#[pyfunction]
fn generate(py: Python<'_>, scenario: &Bound<'_, PyAny>, grid: &PyGrid, params: &PyParams, system: &str) -> PyResult<PyState> {
    let text: String = if let Ok(s) = scenario.extract::<String>() {
        s
    } else {
        py.import("json")?.call_method1("dumps", (scenario,))?.extract()?
    };
    let spec: ScenarioSpec = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let system = parse_system(system)?;
    let inner = scenarios::generate(&spec, grid.inner, &params.inner, system).map_err(to_py_err)?;
    Ok(PyState { inner, system })
}

#[pyfunction]
fn grad<'py>(py: Python<'py>, grid: &PyGrid, f: PyReadonlyArrayDyn<'py, f64>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    vector_to_py(py, &diffops::grad(&scalar_from_py(grid.inner, &f)?))
}

#[pyfunction]
fn div<'py>(py: Python<'py>, grid: &PyGrid, v: PyReadonlyArrayDyn<'py, f64>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    scalar_to_py(py, &diffops::div(&vector_from_py(grid.inner, &v)?))
}

#[pyfunction]
fn curl<'py>(py: Python<'py>, grid: &PyGrid, v: PyReadonlyArrayDyn<'py, f64>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    vector_to_py(py, &diffops::curl(&vector_from_py(grid.inner, &v)?))
}

#[pyfunction]
fn laplacian<'py>(py: Python<'py>, grid: &PyGrid, f: PyReadonlyArrayDyn<'py, f64>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    scalar_to_py(py, &diffops::laplacian(&scalar_from_py(grid.inner, &f)?))
}

/// Returns `(solenoidal, potential)` with `v = solenoidal + grad(potential)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn leray_project<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    v: PyReadonlyArrayDyn<'py, f64>,
) -> PyResult<(Bound<'py, PyArrayDyn<f64>>, Bound<'py, PyArrayDyn<f64>>)> {
    let r = diffops::leray_project(&vector_from_py(grid.inner, &v)?);
    Ok((vector_to_py(py, &r.solenoidal)?, scalar_to_py(py, &r.potential)?))
}

/// Shear roots `w` of the damped dispersion relation for `exp(i (k x - w t))`.
#[pyfunction]
fn dispersion_shear(k: f64, params: &PyParams) -> (Complex64, Complex64) {
    let r = scenarios::dispersion_shear(k, &params.inner);
    (r.roots[0], r.roots[1])
}

/// Damped-oscillation fit of a complex mode amplitude series.
#[pyfunction]
fn measure_wave<'py>(
    py: Python<'py>,
    times: PyReadonlyArray1<'py, f64>,
    series: PyReadonlyArray1<'py, Complex64>,
    k: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let m = scenarios::measure_wave(times.as_slice()?, series.as_slice()?, k).map_err(to_py_err)?;
    to_py_json(py, &m)
}

/// Tracked mode amplitude of a scenario at `state`, or None.
#[pyfunction]
fn probe(py: Python<'_>, scenario: &Bound<'_, PyAny>, state: &PyState) -> PyResult<Option<Complex64>> {
    let text: String = py.import("json")?.call_method1("dumps", (scenario,))?.extract()?;
    let spec: ScenarioSpec = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(spec.probe(&state.inner, state.system))
}

/// Runs a JSON configuration and writes its artifacts; returns the summary.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn run<'py>(py: Python<'py>, config: &str, out_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig::from_json(config.as_bytes()).map_err(to_py_err)?;
    let outcome = py
        .detach(|| runner::run(&cfg, config.as_bytes(), out_dir.as_deref()))
        .map_err(to_py_err)?;
    to_py_json(py, &outcome.summary)
}

/// Runs the verification suite; returns the suite report.
#[pyfunction(name = "verify")]
#[pyo3(signature = (level="quick", tamper=None))]
fn verify_py<'py>(py: Python<'py>, level: &str, tamper: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let level: Level = level.parse().map_err(to_py_err)?;
    let tamper: Option<Tamper> = tamper.map(str::parse).transpose().map_err(to_py_err)?;
    let report = py.detach(|| verify::verify(level, tamper));
    to_py_json(py, &report)
}

#[pyfunction]
fn law_names() -> Vec<&'static str> {
    emlaws::LAWS.to_vec()
}

#[pyfunction]
fn coords<'py>(py: Python<'py>, grid: &PyGrid, axis: usize) -> PyResult<Bound<'py, PyArray1<f64>>> {
    if axis > 2 {
        return Err(PyValueError::new_err("axis must be 0, 1 or 2"));
    }
    let g = grid.inner;
    let h = g.spacing()[axis];
    Ok((0..g.dims()[axis]).map(|i| i as f64 * h).collect::<Vec<_>>().into_pyarray(py))
}

#[pymodule]
fn metacont_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(grad, m)?)?;
    m.add_function(wrap_pyfunction!(div, m)?)?;
    m.add_function(wrap_pyfunction!(curl, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(leray_project, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion_shear, m)?)?;
    m.add_function(wrap_pyfunction!(measure_wave, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify_py, m)?)?;
    m.add_function(wrap_pyfunction!(law_names, m)?)?;
    m.add_function(wrap_pyfunction!(coords, m)?)?;
    Ok(())
}
