//! Python bindings: grids, grid functions, kernels, the coagulation and
//! linearised operators, the profile solver, boundary-layer data and the
//! batch driver.
//!
//! Long computations release the GIL.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use selfsim::boundary_layer::{bl_residual as core_bl_residual, compute_bl_data};
use selfsim::coag::{b2_apply as core_b2, bw_apply as core_bw, coag_rhs as core_rhs};
use selfsim::kernels::{KernelSpec, Perturbation};
use selfsim::linop;
use selfsim::profile::{diagnostics, solve_profile as core_solve, ProfileSolution, Renormalization, SolverOptions};
use selfsim::space::{moment, weighted_norm as core_norm, Grid, GridFunction, WeightParams};

create_exception!(selfsim, SelfsimError, PyValueError);

fn err(e: selfsim::Error) -> PyErr {
    match e {
        selfsim::Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => SelfsimError::new_err(e.to_string()),
    }
}

/// Logarithmic grid on `[x_min, x_max]` with `n` nodes.
#[pyclass(name = "Grid", module = "selfsim", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (x_min = 1e-5, x_max = 40.0, n = 1024))]
    fn new(x_min: f64, x_max: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: Grid::new(x_min, x_max, n).map_err(err)? })
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.inner.x_min()
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.inner.x_max()
    }

    #[getter]
    fn log_step(&self) -> f64 {
        self.inner.log_step()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(x_min={}, x_max={}, n={})", self.inner.x_min(), self.inner.x_max(), self.inner.len())
    }
}

/// Node values on a grid together with their tail models.
#[pyclass(name = "GridFunction", module = "selfsim", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridFunction {
    inner: GridFunction,
}

impl PyGridFunction {
    fn wrap(inner: GridFunction) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyGridFunction {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self::wrap(GridFunction::from_values(&grid.inner, values).map_err(err)?))
    }

    /// Samples the Python callable `f` at every node.
    #[staticmethod]
    fn from_callable(grid: &PyGrid, f: &Bound<'_, PyAny>) -> PyResult<Self> {
        let values =
            grid.inner.nodes().iter().map(|&x| f.call1((x,))?.extract::<f64>()).collect::<PyResult<Vec<f64>>>()?;
        Self::new(grid, values)
    }

    /// `c·e^{-x/b}`.
    #[staticmethod]
    #[pyo3(signature = (grid, c = 1.0, b = 1.0))]
    fn exponential(grid: &PyGrid, c: f64, b: f64) -> PyResult<Self> {
        Ok(Self::wrap(GridFunction::from_fn(&grid.inner, |x| c * (-x / b).exp()).map_err(err)?))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid().clone() }
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn left_tail_exponent(&self) -> f64 {
        self.inner.left_tail_exponent()
    }

    #[getter]
    fn right_tail_rate(&self) -> f64 {
        self.inner.right_tail_rate()
    }

    /// Interpolated value, using the tail models outside the grid.
    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    /// `∫ x^s f`.
    fn moment(&self, s: f64) -> PyResult<f64> {
        moment(&self.inner, s).map_err(err)
    }

    /// `‖f‖` in the weighted space with exponents `a` below 1 and `b` above.
    fn weighted_norm(&self, a: f64, b: f64) -> PyResult<f64> {
        core_norm(&self.inner, WeightParams::new(a, b)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __add__(&self, other: &PyGridFunction) -> PyResult<Self> {
        Ok(Self::wrap(self.inner.add(&other.inner).map_err(err)?))
    }

    fn __sub__(&self, other: &PyGridFunction) -> PyResult<Self> {
        Ok(Self::wrap(self.inner.sub(&other.inner).map_err(err)?))
    }

    fn __mul__(&self, c: f64) -> Self {
        Self::wrap(self.inner.scaled(c))
    }

    fn __rmul__(&self, c: f64) -> Self {
        self.__mul__(c)
    }

    fn __neg__(&self) -> Self {
        self.__mul__(-1.0)
    }

    fn __repr__(&self) -> String {
        format!("GridFunction(n={}, left_tail_exponent={})", self.inner.len(), self.inner.left_tail_exponent())
    }
}

/// `K = 2 + εW` with `W` of power-symmetric or bounded form.
#[pyclass(name = "Kernel", module = "selfsim", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernel {
    /// `form` is `"power_symmetric"` or `"bounded_custom"`.
    #[new]
    #[pyo3(signature = (epsilon, alpha, c_star = 1.0, form = "power_symmetric"))]
    fn new(epsilon: f64, alpha: f64, c_star: f64, form: &str) -> PyResult<Self> {
        let form = match form {
            "power_symmetric" => Perturbation::PowerSymmetric,
            "bounded_custom" => Perturbation::BoundedCustom(None),
            other => return Err(SelfsimError::new_err(format!("unknown kernel form {other:?}"))),
        };
        Ok(Self { inner: KernelSpec::new(epsilon, alpha, form, c_star).map_err(err)? })
    }

    /// The constant kernel `K = 2`; `alpha` only selects the norm.
    #[staticmethod]
    fn constant(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: KernelSpec::constant(alpha).map_err(err)? })
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn c_star(&self) -> f64 {
        self.inner.c_star
    }

    #[getter]
    fn form(&self) -> &'static str {
        self.inner.form.name()
    }

    fn w(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.perturbation(x, y).map_err(err)
    }

    fn k(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.kernel(x, y).map_err(err)
    }

    fn __repr__(&self) -> String {
        let k = &self.inner;
        format!("Kernel(epsilon={}, alpha={}, c_star={}, form={:?})", k.epsilon, k.alpha, k.c_star, k.form.name())
    }
}

fn solver_options(
    tol: f64,
    max_iter: usize,
    damping: f64,
    renormalization: &str,
    beta: Option<f64>,
) -> PyResult<SolverOptions> {
    let (renormalize, renormalization) = match renormalization {
        "dilation" => (true, Renormalization::Dilation),
        "scaling" => (true, Renormalization::Scaling),
        "none" => (false, Renormalization::Dilation),
        other => return Err(SelfsimError::new_err(format!("unknown renormalization {other:?}"))),
    };
    let opts = SolverOptions { damping, tol, max_iter, renormalize, renormalization, beta };
    opts.validate().map_err(err)?;
    Ok(opts)
}

/// A solved profile and its convergence record.
#[pyclass(name = "ProfileSolution", module = "selfsim", frozen)]
struct PySolution {
    inner: ProfileSolution,
    opts: SolverOptions,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn profile(&self) -> PyGridFunction {
        PyGridFunction::wrap(self.inner.profile.clone())
    }

    #[getter]
    fn kernel(&self) -> PyKernel {
        PyKernel { inner: self.inner.spec.clone() }
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn last_change(&self) -> f64 {
        self.inner.last_change
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.final_residual
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    /// Named scalar diagnostics, in the order of `diagnostics.csv`.
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = py.detach(|| diagnostics(&self.inner, &self.opts)).map_err(err)?;
        let d = PyDict::new(py);
        for (name, v) in report.entries {
            d.set_item(name, v)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "ProfileSolution(converged={}, iterations={}, residual={:e})",
            self.inner.converged, self.inner.iterations, self.inner.final_residual
        )
    }
}

/// Iterates the fixed-point map from `init` until the relative change drops
/// below `tol`. `renormalization` is `"dilation"`, `"scaling"` or `"none"`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (kernel, init, tol = 1e-10, max_iter = 500, damping = 1.0, renormalization = "dilation", beta = None))]
fn solve_profile(
    py: Python<'_>,
    kernel: &PyKernel,
    init: &PyGridFunction,
    tol: f64,
    max_iter: usize,
    damping: f64,
    renormalization: &str,
    beta: Option<f64>,
) -> PyResult<PySolution> {
    let opts = solver_options(tol, max_iter, damping, renormalization, beta)?;
    let sol = py.detach(|| core_solve(&kernel.inner, &opts, &init.inner)).map_err(err)?;
    Ok(PySolution { inner: sol, opts })
}

/// `B₂[g, h]`.
#[pyfunction]
fn b2_apply(py: Python<'_>, g: &PyGridFunction, h: &PyGridFunction) -> PyResult<PyGridFunction> {
    py.detach(|| core_b2(&g.inner, &h.inner)).map(PyGridFunction::wrap).map_err(err)
}

/// `B_W[g, h]`.
#[pyfunction]
fn bw_apply(py: Python<'_>, g: &PyGridFunction, h: &PyGridFunction, kernel: &PyKernel) -> PyResult<PyGridFunction> {
    py.detach(|| core_bw(&g.inner, &h.inner, &kernel.inner)).map(PyGridFunction::wrap).map_err(err)
}

/// `B₂[p, p] + εB_W[p, p]`.
#[pyfunction]
fn coag_rhs(py: Python<'_>, p: &PyGridFunction, kernel: &PyKernel) -> PyResult<PyGridFunction> {
    py.detach(|| core_rhs(&p.inner, &kernel.inner)).map(PyGridFunction::wrap).map_err(err)
}

/// The linearisation `𝓛[h]` around `e^{-x}`.
#[pyfunction]
fn linearized_apply(py: Python<'_>, h: &PyGridFunction) -> PyResult<PyGridFunction> {
    py.detach(|| linop::linearized_apply(&h.inner)).map(PyGridFunction::wrap).map_err(err)
}

/// `A₀[g]`, the explicit inverse of `𝓛` with vanishing first moment.
#[pyfunction]
fn inverse_apply(py: Python<'_>, g: &PyGridFunction) -> PyResult<PyGridFunction> {
    py.detach(|| linop::inverse_apply(&g.inner)).map(PyGridFunction::wrap).map_err(err)
}

/// `∫ (1 - e^{-qx}) f(x) dx`.
#[pyfunction]
fn desing_laplace(f: &PyGridFunction, q: f64) -> PyResult<f64> {
    linop::desing_laplace(&f.inner, q).map_err(err)
}

/// `m₁(x) = (1 - x)e^{-x}`.
#[pyfunction]
fn m1(x: f64) -> f64 {
    linop::m1(x)
}

/// `m₂(x)`, switching to the stable form for large `x`.
#[pyfunction]
fn m2(x: f64) -> PyResult<f64> {
    linop::m2_eval(x).map_err(err)
}

/// `β₂`, `κ`, `β_W` and `Φ` of a profile, as a dict.
#[pyfunction]
fn boundary_layer_data<'py>(py: Python<'py>, p: &PyGridFunction, kernel: &PyKernel) -> PyResult<Bound<'py, PyDict>> {
    let data = py.detach(|| compute_bl_data(&p.inner, &kernel.inner)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("beta2", data.beta2)?;
    d.set_item("kappa", data.kappa)?;
    d.set_item("beta_w", PyGridFunction::wrap(data.beta_w))?;
    d.set_item("phi", PyGridFunction::wrap(data.phi))?;
    Ok(d)
}

/// Relative residual of the boundary-layer form of the profile equation.
#[pyfunction]
fn bl_residual(py: Python<'_>, p: &PyGridFunction, kernel: &PyKernel) -> PyResult<f64> {
    py.detach(|| core_bl_residual(&p.inner, &kernel.inner)).map_err(err)
}

/// Runs the `selfsim` command line with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("selfsim".to_string()).chain(args).collect();
    py.detach(|| selfsim::cli::run(argv))
}

#[pymodule]
#[pyo3(name = "selfsim")]
fn selfsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SelfsimError", m.py().get_type::<SelfsimError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyGridFunction>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_profile, m)?)?;
    m.add_function(wrap_pyfunction!(b2_apply, m)?)?;
    m.add_function(wrap_pyfunction!(bw_apply, m)?)?;
    m.add_function(wrap_pyfunction!(coag_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(linearized_apply, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_apply, m)?)?;
    m.add_function(wrap_pyfunction!(desing_laplace, m)?)?;
    m.add_function(wrap_pyfunction!(m1, m)?)?;
    m.add_function(wrap_pyfunction!(m2, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_layer_data, m)?)?;
    m.add_function(wrap_pyfunction!(bl_residual, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
