//! Python bindings for `nldiff`.
//!
//! Fields cross the boundary as flat row-major lists of floats.

use nldiff::metrics;
use nldiff::operators::{
    op_fft, op_ptw, op_rr, FftConfig, KernelLevels, OperatorBackend, RrConfig,
};
use nldiff::solver::check_stability;
use nldiff::{
    box_stencil, gaussian_stencil, Exp1Reaction, GaussianProductDatum, RangeKernel, Reaction,
    SolverConfig, SourceIntegral, StencilSpec,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(nldiff_py, BlowUpError, PyRuntimeError);

fn to_py(e: nldiff::Error) -> PyErr {
    if e.is_blow_up() {
        BlowUpError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn range_kernel(p: Option<f64>) -> PyResult<RangeKernel> {
    match p {
        None => Ok(RangeKernel::Identity),
        Some(p) => RangeKernel::power(p).map_err(to_py),
    }
}

#[pyclass(name = "Mesh", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyMesh(nldiff::Mesh2);

#[pymethods]
impl PyMesh {
    #[new]
    #[pyo3(signature = (cells, side = 1.0))]
    fn new(cells: usize, side: f64) -> PyResult<Self> {
        nldiff::Mesh2::new(side, cells).map(Self).map_err(to_py)
    }

    #[getter]
    fn cells(&self) -> usize {
        self.0.cells()
    }

    #[getter]
    fn side(&self) -> f64 {
        self.0.side()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(cells={}, side={})", self.0.cells(), self.0.side())
    }
}

#[pyclass(name = "Field", frozen, from_py_object)]
#[derive(Clone)]
struct PyField(nldiff::Field2);

#[pymethods]
impl PyField {
    #[new]
    fn new(mesh: PyMesh, values: Vec<f64>) -> PyResult<Self> {
        nldiff::Field2::new(mesh.0, values).map(Self).map_err(to_py)
    }

    /// Two-bump Gaussian datum sampled at cell centres.
    #[staticmethod]
    fn gaussians(mesh: PyMesh) -> Self {
        Self(GaussianProductDatum::default().sample(mesh.0))
    }

    #[staticmethod]
    fn constant(mesh: PyMesh, value: f64) -> Self {
        Self(nldiff::Field2::constant(mesh.0, value))
    }

    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh(*self.0.mesh())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.0.cells();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!(
                "index ({i}, {j}) outside {n}x{n} grid"
            )));
        }
        Ok(self.0.get(i, j))
    }

    fn mass(&self) -> f64 {
        metrics::mass(&self.0)
    }

    fn max_abs(&self) -> f64 {
        metrics::max_abs(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!("Field(cells={})", self.0.cells())
    }
}

#[pyclass(name = "Stencil", frozen, from_py_object)]
#[derive(Clone)]
struct PyStencil(nldiff::Stencil);

#[pymethods]
impl PyStencil {
    #[staticmethod]
    #[pyo3(name = "box")]
    fn box_(radius: f64, mesh: PyMesh) -> PyResult<Self> {
        box_stencil(radius, &mesh.0).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn gaussian(sigma: f64, mesh: PyMesh) -> PyResult<Self> {
        gaussian_stencil(sigma, &mesh.0).map(Self).map_err(to_py)
    }

    #[getter]
    fn radius(&self) -> usize {
        self.0.radius()
    }

    /// `h² Σ w`.
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }
}

#[pyclass(name = "RunResult", frozen)]
struct PyRunResult {
    #[pyo3(get)]
    final_field: PyField,
    #[pyo3(get)]
    wall_time_s: f64,
    #[pyo3(get)]
    steps: usize,
    #[pyo3(get)]
    mass_trace: Option<Vec<f64>>,
    #[pyo3(get)]
    stable: bool,
    #[pyo3(get)]
    step_bound: f64,
    #[pyo3(get)]
    kernel_levels: Option<usize>,
}

/// Pointwise nonlocal operator.
#[pyfunction]
#[pyo3(signature = (u, w, p = None))]
fn ptw(u: &PyField, w: &PyStencil, p: Option<f64>) -> PyResult<PyField> {
    op_ptw(&u.0, &w.0, range_kernel(p)?)
        .map(PyField)
        .map_err(to_py)
}

/// Rearrangement operator with `levels` value steps; `kernel_levels=None` picks them automatically.
#[pyfunction]
#[pyo3(signature = (u, w, p = None, levels = 500, kernel_levels = None))]
fn rr(
    u: &PyField,
    w: &PyStencil,
    p: Option<f64>,
    levels: usize,
    kernel_levels: Option<usize>,
) -> PyResult<PyField> {
    let cfg = RrConfig {
        levels,
        kernel_levels: kernel_levels.map_or(KernelLevels::Auto, KernelLevels::Fixed),
        requantize: true,
    };
    op_rr(&u.0, &w.0, range_kernel(p)?, &cfg)
        .map(PyField)
        .map_err(to_py)
}

/// Fourier-slice operator (periodic).
#[pyfunction]
#[pyo3(signature = (u, w, p = None, levels = 10, interpolate = true, pad_pow2 = false))]
fn fft(
    u: &PyField,
    w: &PyStencil,
    p: Option<f64>,
    levels: usize,
    interpolate: bool,
    pad_pow2: bool,
) -> PyResult<PyField> {
    let cfg = FftConfig {
        levels,
        interpolate,
        pad_pow2,
        requantize: true,
    };
    op_fft(&u.0, &w.0, range_kernel(p)?, &cfg)
        .map(PyField)
        .map_err(to_py)
}

/// Explicit Euler integration to `final_time`.
///
/// `method` is one of ptw, rr, fft, ffto; `kernel` is box or gaussian with
/// width `param`. Passing `lam` adds the manufactured source whose exact
/// solution is `exp(-lam t) u0` (box kernel, identity range kernel).
#[pyfunction]
#[pyo3(signature = (
    u0, final_time, tau, method = "ptw", kernel = "box", param = 0.1, p = None,
    levels = None, lam = None, parallel = false, record_mass = false
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    u0: &PyField,
    final_time: f64,
    tau: f64,
    method: &str,
    kernel: &str,
    param: f64,
    p: Option<f64>,
    levels: Option<usize>,
    lam: Option<f64>,
    parallel: bool,
    record_mass: bool,
) -> PyResult<PyRunResult> {
    let backend = match method {
        "ptw" => OperatorBackend::Ptw,
        "rr" => OperatorBackend::Rr(RrConfig {
            levels: levels.unwrap_or(500),
            ..RrConfig::default()
        }),
        "fft" | "ffto" => OperatorBackend::Fft(FftConfig {
            levels: levels.unwrap_or(10),
            pad_pow2: method == "ffto",
            ..FftConfig::default()
        }),
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let stencil = match kernel {
        "box" => StencilSpec::Box { radius: param },
        "gaussian" => StencilSpec::Gaussian { sigma: param },
        other => return Err(PyValueError::new_err(format!("unknown kernel '{other}'"))),
    };
    let mut cfg = SolverConfig::new(final_time, tau, backend, stencil);
    cfg.kernel = range_kernel(p)?;
    cfg.parallel = parallel;
    cfg.record_mass = record_mass;
    if let Some(lambda) = lam {
        cfg.reaction =
            Reaction::Exp1(Exp1Reaction::new(lambda, param).with_integral(SourceIntegral::Scheme));
    }
    let field = u0.0.clone();
    let res = py.detach(|| nldiff::run(&cfg, &field)).map_err(to_py)?;
    Ok(PyRunResult {
        final_field: PyField(res.final_field),
        wall_time_s: res.wall_time_s,
        steps: res.steps,
        mass_trace: res.mass_trace,
        stable: res.advisory.is_satisfied(),
        step_bound: res.advisory.bound(),
        kernel_levels: res.kernel_levels,
    })
}

/// `‖approx - reference‖₂ / ‖reference‖₂`.
#[pyfunction]
fn relative_error(approx: &PyField, reference: &PyField) -> PyResult<f64> {
    metrics::relative_error(&approx.0, &reference.0).map_err(to_py)
}

/// Largest stable step for range exponent `p` (None = linear) and sup bound `m`.
#[pyfunction]
#[pyo3(signature = (p, m))]
fn step_bound(p: Option<f64>, m: f64) -> PyResult<f64> {
    Ok(check_stability(0.0, range_kernel(p)?, &Reaction::Zero, m).bound())
}

/// Runs the built-in oracle checks; returns `(name, passed, detail)` tuples.
#[pyfunction]
fn verify(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(nldiff::verify::run_all)
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn nldiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyStencil>()?;
    m.add_class::<PyRunResult>()?;
    m.add("BlowUpError", m.py().get_type::<BlowUpError>())?;
    m.add_function(wrap_pyfunction!(ptw, m)?)?;
    m.add_function(wrap_pyfunction!(rr, m)?)?;
    m.add_function(wrap_pyfunction!(fft, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(step_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
