//! Python bindings for `smoothdiv`.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use smoothdiv::divergences::{self as dv, Metric, Normalisation, RenyiKind, SmoothingSpec};
use smoothdiv::matcore::{CMat, Ensemble};
use smoothdiv::sdpsolve::{self, Variant};
use smoothdiv::verify::{self, QuadSpec, RunConfig, Suite};
use smoothdiv::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::Numerical(_) | Error::ConvergenceFailure => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn parsed<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// A density operator.
#[pyclass(name = "State", module = "smoothdiv_py", frozen)]
struct PyState {
    inner: smoothdiv::matcore::State,
}

#[pymethods]
impl PyState {
    /// Builds a state from a square nested list of complex numbers.
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let m = CMat::from_fn(n, n, |i, j| rows[i][j]);
        let inner = smoothdiv::matcore::State::from_matrix(m).map_err(err)?;
        Ok(PyState { inner })
    }

    /// Diagonal state from a probability vector.
    #[staticmethod]
    fn classical(p: Vec<f64>) -> PyResult<Self> {
        Ok(PyState { inner: smoothdiv::matcore::State::classical(&p).map_err(err)? })
    }

    /// Parses the JSON state-file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyState { inner: smoothdiv::io::parse_state(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyState { inner: smoothdiv::io::read_state(path).map_err(err)? })
    }

    fn to_json(&self) -> String {
        smoothdiv::io::state_to_string(&self.inner, None)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.op().matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        self.inner.op().eigenvalues().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("State(dim={})", self.inner.dim())
    }
}

/// Samples `(rho, sigma)` from `haar_pure`, `hs_mixed` or `classical_dirichlet`.
#[pyfunction]
fn sample_pair(ensemble: &str, dim: usize, seed: u64) -> PyResult<(PyState, PyState)> {
    let kind: Ensemble = parsed(ensemble)?;
    let (r, s) = smoothdiv::matcore::sample_pair(kind, dim, seed).map_err(err)?;
    Ok((PyState { inner: r }, PyState { inner: s }))
}

#[pyfunction]
fn umegaki(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    Ok(dv::umegaki(&rho.inner, &sigma.inner).map_err(err)?.value())
}

#[pyfunction]
fn dmax(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    Ok(dv::dmax(&rho.inner, &sigma.inner).map_err(err)?.value())
}

#[pyfunction]
fn dtilde_max(rho: &PyState, sigma: &PyState, eps: f64) -> PyResult<f64> {
    Ok(dv::dtilde_max(&rho.inner, &sigma.inner, eps).map_err(err)?.value())
}

#[pyfunction]
fn dtilde_max_dual(rho: &PyState, sigma: &PyState, eps: f64) -> PyResult<f64> {
    Ok(dv::dtilde_max_dual(&rho.inner, &sigma.inner, eps).map_err(err)?.value())
}

/// Hypothesis-testing divergence with type-I error `eps`.
#[pyfunction]
fn dh(rho: &PyState, sigma: &PyState, eps: f64) -> PyResult<f64> {
    Ok(dv::dh(&rho.inner, &sigma.inner, eps).map_err(err)?.value())
}

#[pyfunction]
fn dh_sdp(rho: &PyState, sigma: &PyState, eps: f64) -> PyResult<f64> {
    Ok(sdpsolve::dh_sdp(&rho.inner, &sigma.inner, eps).map_err(err)?.value())
}

#[pyfunction]
fn dspec(rho: &PyState, sigma: &PyState, eps: f64) -> PyResult<f64> {
    Ok(dv::dspec(&rho.inner, &sigma.inner, eps).map_err(err)?.value())
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, alpha, kind = "sandwiched"))]
fn renyi(rho: &PyState, sigma: &PyState, alpha: f64, kind: &str) -> PyResult<f64> {
    let kind = match kind {
        "petz" => RenyiKind::Petz,
        "sandwiched" => RenyiKind::Sandwiched,
        _ => return Err(PyValueError::new_err(format!("unknown Renyi family '{kind}'"))),
    };
    Ok(dv::renyi(&rho.inner, &sigma.inner, alpha, kind).map_err(err)?.value())
}

#[pyfunction]
fn hockey_stick(rho: &PyState, sigma: &PyState, lam: f64) -> PyResult<f64> {
    dv::hockey_stick(&rho.inner, &sigma.inner, lam).map_err(err)
}

#[pyfunction]
fn hilbert_metric(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    Ok(dv::hilbert_metric(&rho.inner, &sigma.inner).map_err(err)?.value())
}

#[pyfunction]
fn dobs(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    Ok(dv::dobs(&rho.inner, &sigma.inner).map_err(err)?.value())
}

/// Smoothed max-divergence over a trace or purified ball.
#[pyfunction]
#[pyo3(signature = (rho, sigma, eps, metric = "purified", normalisation = "normalised"))]
fn smooth_dmax(rho: &PyState, sigma: &PyState, eps: f64, metric: &str, normalisation: &str) -> PyResult<f64> {
    let spec = SmoothingSpec::new(parsed::<Metric>(metric)?, parsed::<Normalisation>(normalisation)?, eps).map_err(err)?;
    Ok(sdpsolve::smooth_dmax(&rho.inner, &sigma.inner, spec).map_err(err)?.value())
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, eps, variant = "pos"))]
fn smooth_dmax_variant(rho: &PyState, sigma: &PyState, eps: f64, variant: &str) -> PyResult<f64> {
    let v: Variant = parsed(variant)?;
    Ok(sdpsolve::smooth_dmax_variants(&rho.inner, &sigma.inner, eps, v).map_err(err)?.value())
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, eps, metric = "purified"))]
fn smooth_hilbert(rho: &PyState, sigma: &PyState, eps: f64, metric: &str) -> PyResult<f64> {
    let spec = SmoothingSpec::new(parsed::<Metric>(metric)?, Normalisation::Normalised, eps).map_err(err)?;
    Ok(sdpsolve::smooth_hilbert(&rho.inner, &sigma.inner, spec).map_err(err)?.value())
}

/// Closed forms for two pure states with overlap `f`: `(dtilde_max, dh)`.
#[pyfunction]
fn pure_closed_forms(f: f64, eps: f64) -> PyResult<(f64, f64)> {
    let c = dv::pure_closed_forms(f, eps).map_err(err)?;
    Ok((c.dtilde_max.value(), c.dh.value()))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Runs a verification suite; `config` is a dict in the report's `config` format.
#[pyfunction]
#[pyo3(signature = (suite, config = None, rho = None, sigma = None))]
fn run_suite<'py>(
    py: Python<'py>,
    suite: &str,
    config: Option<&Bound<'py, PyDict>>,
    rho: Option<&PyState>,
    sigma: Option<&PyState>,
) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = parsed(suite)?;
    let cfg: RunConfig = match config {
        Some(d) => {
            let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("config: {e}")))?
        }
        None => RunConfig::default(),
    };
    let rep = py
        .detach(|| match (rho, sigma) {
            (Some(r), Some(s)) => verify::run_suite_on(suite, &r.inner, &s.inner, &cfg),
            (None, None) => verify::run_suite(suite, &cfg),
            _ => Err(Error::Parse("rho and sigma must be given together".into())),
        })
        .map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, tol = 1e-4))]
fn check_frenkel<'py>(py: Python<'py>, rho: &PyState, sigma: &PyState, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let rep = verify::check_frenkel(&rho.inner, &sigma.inner, QuadSpec { tol }).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, rate, n_max = 8))]
fn estimate_exponents<'py>(py: Python<'py>, rho: &PyState, sigma: &PyState, rate: f64, n_max: u32) -> PyResult<Bound<'py, PyAny>> {
    let rep = verify::estimate_exponents(&rho.inner, &sigma.inner, rate, n_max, &Default::default()).map_err(err)?;
    to_py(py, &rep)
}

#[pymodule]
fn smoothdiv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(sample_pair, m)?)?;
    m.add_function(wrap_pyfunction!(umegaki, m)?)?;
    m.add_function(wrap_pyfunction!(dmax, m)?)?;
    m.add_function(wrap_pyfunction!(dtilde_max, m)?)?;
    m.add_function(wrap_pyfunction!(dtilde_max_dual, m)?)?;
    m.add_function(wrap_pyfunction!(dh, m)?)?;
    m.add_function(wrap_pyfunction!(dh_sdp, m)?)?;
    m.add_function(wrap_pyfunction!(dspec, m)?)?;
    m.add_function(wrap_pyfunction!(renyi, m)?)?;
    m.add_function(wrap_pyfunction!(hockey_stick, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_metric, m)?)?;
    m.add_function(wrap_pyfunction!(dobs, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_dmax, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_dmax_variant, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_hilbert, m)?)?;
    m.add_function(wrap_pyfunction!(pure_closed_forms, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(check_frenkel, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_exponents, m)?)?;
    Ok(())
}
