//! Python bindings: knot vectors, spline evaluation, the Fourier-side
//! identities, Monte Carlo estimators and the experiment harness.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spline_llt::harness::{self, ExperimentConfig, Overrides};
use spline_llt::seminorm::{self, GridSpec, SeminormResult};
use spline_llt::{charprob, montecarlo, specfun, splinecore, Error, Family};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::PrecisionLoss { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::QuadratureNotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_family(name: &str) -> PyResult<Family> {
    name.parse().map_err(to_py)
}

/// Strictly increasing knots normalized to zero mean and unit sum of squares.
#[pyclass(
    name = "KnotVector",
    module = "spline_llt",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyKnotVector {
    inner: spline_llt::KnotVector,
}

#[pymethods]
impl PyKnotVector {
    /// Normalizes arbitrary distinct reals.
    #[new]
    fn new(raw: Vec<f64>) -> PyResult<Self> {
        Ok(PyKnotVector {
            inner: spline_llt::normalize(&raw).map_err(to_py)?,
        })
    }

    /// One of `equispaced`, `chebyshev`, `uniform_random`, `clustered`.
    #[staticmethod]
    #[pyo3(signature = (name, n, seed = 0))]
    fn family(name: &str, n: usize, seed: u64) -> PyResult<Self> {
        Ok(PyKnotVector {
            inner: spline_llt::family(parse_family(name)?, n, seed).map_err(to_py)?,
        })
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.xs().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn m3(&self) -> f64 {
        spline_llt::m3(&self.inner)
    }

    fn x_l3_cubed(&self) -> f64 {
        spline_llt::x_l3_cubed(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("KnotVector(n={}, xs={:?})", self.inner.n(), self.inner.xs())
    }
}

/// Reduced sum `sum_k (x_k - t)_+^{n-2-r} / W'(x_k)`; `r = 0` is `B(t)`.
#[pyfunction]
#[pyo3(signature = (kv, t, r = 0))]
fn bspline(kv: &PyKnotVector, t: f64, r: usize) -> PyResult<f64> {
    splinecore::bspline_reduced(&kv.inner, t, r).map_err(to_py)
}

/// Extended-precision oracle for [`bspline`], `n <= 24`.
#[pyfunction]
#[pyo3(signature = (kv, t, r = 0))]
fn bspline_naive(kv: &PyKnotVector, t: f64, r: usize) -> PyResult<f64> {
    splinecore::bspline_naive(&kv.inner, t, r).map_err(to_py)
}

#[pyfunction]
fn bspline_derivative(kv: &PyKnotVector, t: f64, q: usize) -> PyResult<f64> {
    splinecore::bspline_derivative(&kv.inner, t, q).map_err(to_py)
}

/// `(n-1) * integral of B`, which is 1.
#[pyfunction]
#[pyo3(signature = (kv, tol = 1e-10))]
fn bspline_mass(kv: &PyKnotVector, tol: f64) -> PyResult<f64> {
    splinecore::bspline_mass(&kv.inner, tol).map_err(to_py)
}

#[pyfunction]
fn hermite(r: usize, t: f64) -> f64 {
    specfun::hermite(r, t)
}

/// `He_r(t)` times the standard normal density.
#[pyfunction]
fn hermite_function(r: usize, t: f64) -> f64 {
    specfun::hermite_function(r, t)
}

#[pyfunction]
fn laguerre(r: usize, alpha: f64, x: f64) -> f64 {
    specfun::laguerre(r, alpha, x)
}

/// Laguerre-sum form of `(-1)^r` times the `r`-th derivative of the Fourier
/// transform of `B(t/n)` at `xi`.
#[pyfunction]
#[pyo3(signature = (kv, xi, r = 0))]
fn corollary3_sum(kv: &PyKnotVector, xi: f64, r: usize) -> PyResult<Complex64> {
    specfun::corollary3_sum(&kv.inner, r, xi).map_err(to_py)
}

/// Same quantity by double-double quadrature of the spline.
#[pyfunction]
#[pyo3(signature = (kv, xi, r = 0))]
fn fourier_quadrature(kv: &PyKnotVector, xi: f64, r: usize) -> PyResult<Complex64> {
    charprob::fourier_moment_quadrature(&kv.inner, xi, r).map_err(to_py)
}

/// Characteristic function of `Q` at `(xi1, xi2)`.
#[pyfunction]
fn phi_q(kv: &PyKnotVector, xi1: f64, xi2: f64) -> Complex64 {
    charprob::phi_q(&kv.inner, [xi1, xi2])
}

/// `F`, `G`, `H` and the projections `t_k` at `(xi1, xi2)`.
#[pyfunction]
fn char_state<'py>(
    py: Python<'py>,
    kv: &PyKnotVector,
    xi1: f64,
    xi2: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let st = charprob::eval_char_state(&kv.inner, [xi1, xi2]);
    let d = PyDict::new(py);
    d.set_item("t", st.t)?;
    d.set_item("f", st.f)?;
    d.set_item("g", st.g)?;
    d.set_item("h", st.h)?;
    Ok(d)
}

/// Density of `Q` by Fourier inversion, `4 <= n <= 64`.
#[pyfunction]
fn pdf_q_inversion(kv: &PyKnotVector, s1: f64, s2: f64) -> PyResult<f64> {
    charprob::pdf_q_inversion(&kv.inner, [s1, s2]).map_err(to_py)
}

/// `integral |e^{F+iG} - e^H| |xi|^ell dxi` over the plane.
#[pyfunction]
#[pyo3(signature = (kv, ell = 0))]
fn char_diff_integral(kv: &PyKnotVector, ell: usize) -> PyResult<f64> {
    charprob::char_diff_integral(&kv.inner, ell).map_err(to_py)
}

fn seminorm_dict<'py>(py: Python<'py>, s: SeminormResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", s.value)?;
    d.set_item("argmax_t", s.argmax_t)?;
    d.set_item("inner_max", s.inner_max)?;
    d.set_item("outer_max", s.outer_max)?;
    d.set_item("noise_floor", s.noise_floor)?;
    d.set_item("p", s.p)?;
    d.set_item("q", s.q)?;
    d.set_item("r", s.r)?;
    Ok(d)
}

fn grid(n: usize, t_max: Option<f64>, h: f64) -> PyResult<GridSpec> {
    match t_max {
        Some(t) => GridSpec::new(t, h),
        None => GridSpec::for_n(n, h),
    }
    .map_err(to_py)
}

/// Weighted sup distance between `B(t/n)` and the standard normal density.
#[pyfunction]
#[pyo3(signature = (kv, p = 0, q = 0, h = 0.05, t_max = None))]
fn theorem1_error<'py>(
    py: Python<'py>,
    kv: &PyKnotVector,
    p: usize,
    q: usize,
    h: f64,
    t_max: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid(kv.inner.n(), t_max, h)?;
    seminorm_dict(
        py,
        seminorm::theorem1_error(&kv.inner, p, q, g).map_err(to_py)?,
    )
}

/// Reduced-exponent version against `He_r phi`; `normalized` applies the
/// factor `(n-2)! / ((n-2-r)! n^r)`.
#[pyfunction]
#[pyo3(signature = (kv, r, p = 0, q = 0, h = 0.05, t_max = None, normalized = false))]
#[allow(clippy::too_many_arguments)]
fn corollary2_error<'py>(
    py: Python<'py>,
    kv: &PyKnotVector,
    r: usize,
    p: usize,
    q: usize,
    h: f64,
    t_max: Option<f64>,
    normalized: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid(kv.inner.n(), t_max, h)?;
    let res = if normalized {
        seminorm::corollary2_error_normalized(&kv.inner, p, q, r, g)
    } else {
        seminorm::corollary2_error(&kv.inner, p, q, r, g)
    };
    seminorm_dict(py, res.map_err(to_py)?)
}

/// `((E cos, SE), (E sin, SE))` of `n xi <x, s>` for uniform `s` on the simplex.
#[pyfunction]
#[pyo3(signature = (kv, xi, n_samples = 1_000_000, seed = 1))]
fn mc_char_simplex(
    py: Python<'_>,
    kv: &PyKnotVector,
    xi: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<((f64, f64), (f64, f64))> {
    let inner = kv.inner.clone();
    let (c, s) = py
        .detach(move || montecarlo::mc_char_simplex(&inner, xi, n_samples, seed))
        .map_err(to_py)?;
    Ok(((c.mean, c.std_error), (s.mean, s.std_error)))
}

/// Hermite-Genocchi estimate of `exp[x_1, ..., x_n]`, as `(mean, SE)`.
#[pyfunction]
#[pyo3(signature = (kv, n_samples = 1_000_000, seed = 1))]
fn mc_divided_difference_exp(
    py: Python<'_>,
    kv: &PyKnotVector,
    n_samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let inner = kv.inner.clone();
    let e = py
        .detach(move || montecarlo::mc_divided_difference(&inner, f64::exp, n_samples, seed))
        .map_err(to_py)?;
    Ok((e.mean, e.std_error))
}

/// Runs a harness experiment. Keyword arguments mirror the CLI flags
/// (`family`, `n`, `p`, `q`, `r`, `n_mc`, `seed`, `grid_t`, `grid_h`).
/// Returns `(csv_text, summary_json)`.
#[pyfunction]
#[pyo3(signature = (experiment, family = None, n = None, p = None, q = None, r = None, n_mc = None, seed = None, grid_t = None, grid_h = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    experiment: &str,
    family: Option<String>,
    n: Option<String>,
    p: Option<usize>,
    q: Option<usize>,
    r: Option<usize>,
    n_mc: Option<usize>,
    seed: Option<u64>,
    grid_t: Option<f64>,
    grid_h: Option<f64>,
) -> PyResult<(String, String)> {
    let o = Overrides {
        experiment: Some(experiment.to_string()),
        family,
        n,
        p,
        q,
        r,
        n_mc,
        seed,
        grid_t,
        grid_h,
        out: None,
    };
    let cfg = ExperimentConfig::resolve(o).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = py
        .detach(move || harness::run(&cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let mut csv = Vec::new();
    harness::write_csv(&mut csv, &out.records)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary =
        serde_json::to_string(&out.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((String::from_utf8_lossy(&csv).into_owned(), summary))
}

#[pymodule]
#[pyo3(name = "spline_llt")]
fn spline_llt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKnotVector>()?;
    m.add_function(wrap_pyfunction!(bspline, m)?)?;
    m.add_function(wrap_pyfunction!(bspline_naive, m)?)?;
    m.add_function(wrap_pyfunction!(bspline_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(bspline_mass, m)?)?;
    m.add_function(wrap_pyfunction!(hermite, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_function, m)?)?;
    m.add_function(wrap_pyfunction!(laguerre, m)?)?;
    m.add_function(wrap_pyfunction!(corollary3_sum, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(phi_q, m)?)?;
    m.add_function(wrap_pyfunction!(char_state, m)?)?;
    m.add_function(wrap_pyfunction!(pdf_q_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(char_diff_integral, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_error, m)?)?;
    m.add_function(wrap_pyfunction!(corollary2_error, m)?)?;
    m.add_function(wrap_pyfunction!(mc_char_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(mc_divided_difference_exp, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
