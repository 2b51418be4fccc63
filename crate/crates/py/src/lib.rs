//! Python bindings: bases, symbols, operator matrices and the experiment
//! runner. Complex numbers cross the boundary as Python `complex`; symbols
//! and records as JSON strings using the same schema as the config files.

use std::sync::Arc;

use fockbench::approximation::{self, WienerSearch};
use fockbench::experiments::{self, ExperimentConfig, Suite};
use fockbench::fock::{self, Exponent, FockParams, MultiIndexBasis, OperatorMatrix, TruncatedVector};
use fockbench::operators::{self, heat_kernel_symbol};
use fockbench::symbols::{self, SymbolSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: fockbench::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn exponent(p: &str) -> PyResult<Exponent> {
    Exponent::parse(p).map_err(err)
}

#[pyclass(name = "Basis", frozen)]
#[derive(Clone)]
struct PyBasis {
    inner: Arc<MultiIndexBasis>,
}

#[pymethods]
impl PyBasis {
    #[new]
    #[pyo3(signature = (t, degree, n = 1))]
    fn new(t: f64, degree: usize, n: usize) -> PyResult<Self> {
        let params = FockParams::hilbert(t, n).map_err(err)?;
        Ok(PyBasis { inner: MultiIndexBasis::new(params, degree).map_err(err)? })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn indices(&self) -> Vec<Vec<u32>> {
        self.inner.indices().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Basis(t={}, degree={}, n={})", self.inner.t(), self.inner.max_degree(), self.inner.n())
    }
}

#[pyclass(name = "Symbol", frozen)]
#[derive(Clone)]
struct PySymbol {
    inner: SymbolSpec,
}

#[pymethods]
impl PySymbol {
    /// Parses the JSON form, e.g. '{"family": "gaussian", "width": 1.0}'.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: SymbolSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PySymbol { inner })
    }

    #[staticmethod]
    fn constant(value: C64) -> Self {
        PySymbol { inner: SymbolSpec::constant(value) }
    }

    #[staticmethod]
    #[pyo3(signature = (width, center = None))]
    fn gaussian(width: f64, center: Option<Vec<C64>>) -> PyResult<Self> {
        let inner = SymbolSpec::gaussian(width, center.unwrap_or_default());
        inner.validate().map_err(err)?;
        Ok(PySymbol { inner })
    }

    #[staticmethod]
    fn oscillatory(a: f64) -> Self {
        PySymbol { inner: SymbolSpec::oscillatory(a) }
    }

    #[staticmethod]
    #[pyo3(signature = (modes, r0 = 1.0))]
    fn angular(modes: Vec<(i64, C64)>, r0: f64) -> PyResult<Self> {
        let inner = SymbolSpec::angular(&modes, r0);
        inner.validate().map_err(err)?;
        Ok(PySymbol { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("symbols serialize")
    }

    fn eval(&self, z: Vec<C64>) -> PyResult<C64> {
        self.inner.try_eval(&z).map_err(err)
    }

    /// (g_s * f)(z)
    fn heat(&self, s: f64, z: Vec<C64>) -> PyResult<C64> {
        Ok(symbols::heat_transform(&self.inner, s, &z).map_err(err)?.value)
    }

    fn translate(&self, z: Vec<C64>) -> Self {
        PySymbol { inner: symbols::translate(&self.inner, &z) }
    }

    fn dilate(&self, lam: f64) -> Self {
        PySymbol { inner: symbols::dilate(&self.inner, lam) }
    }

    fn tags(&self) -> Vec<String> {
        self.inner.tags().into_iter().map(|t| serde_json::to_value(t).unwrap().as_str().unwrap().to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Symbol({})", self.to_json())
    }
}

#[pyclass(name = "Operator", frozen)]
#[derive(Clone)]
struct PyOperator {
    inner: OperatorMatrix,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn from_entries(basis: &PyBasis, rows: Vec<Vec<C64>>) -> PyResult<Self> {
        let dim = basis.inner.dim();
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err(format!("expected a {dim} x {dim} matrix")));
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
        Ok(PyOperator { inner: OperatorMatrix::new(basis.inner.clone(), m).map_err(err)? })
    }

    #[staticmethod]
    fn identity(basis: &PyBasis) -> Self {
        PyOperator { inner: OperatorMatrix::identity(basis.inner.clone()) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn basis(&self) -> PyBasis {
        PyBasis { inner: self.inner.basis().clone() }
    }

    fn entries(&self) -> Vec<Vec<C64>> {
        let e = self.inner.entries();
        (0..e.nrows()).map(|i| (0..e.ncols()).map(|j| e[(i, j)]).collect()).collect()
    }

    fn entry(&self, row: usize, col: usize) -> PyResult<C64> {
        let e = self.inner.entries();
        if row >= e.nrows() || col >= e.ncols() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(e[(row, col)])
    }

    fn trace(&self) -> C64 {
        self.inner.trace()
    }

    fn adjoint(&self) -> Self {
        PyOperator { inner: self.inner.adjoint() }
    }

    fn compose(&self, other: &PyOperator) -> PyResult<Self> {
        Ok(PyOperator { inner: self.inner.compose(&other.inner).map_err(err)? })
    }

    fn __add__(&self, other: &PyOperator) -> PyResult<Self> {
        Ok(PyOperator { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn __sub__(&self, other: &PyOperator) -> PyResult<Self> {
        Ok(PyOperator { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn scale(&self, c: C64) -> Self {
        PyOperator { inner: self.inner.scale(c) }
    }

    fn truncate(&self, degree: usize) -> PyResult<Self> {
        Ok(PyOperator { inner: self.inner.truncate(degree).map_err(err)? })
    }

    fn berezin(&self, z: Vec<C64>) -> PyResult<C64> {
        Ok(operators::berezin(&self.inner, &z).map_err(err)?.value)
    }

    /// alpha_z(A) = W_z A W_{-z}
    fn shift(&self, z: Vec<C64>) -> PyResult<Self> {
        Ok(PyOperator { inner: operators::shift(&self.inner, &z).map_err(err)? })
    }

    /// (lower, upper) bounds of the operator norm on F^p; p in {"1", "2", "inf"}.
    #[pyo3(signature = (p = "2", seed = 0))]
    fn norm(&self, p: &str, seed: u64) -> PyResult<(f64, f64)> {
        let e = operators::norm_estimate(&self.inner, exponent(p)?, seed).map_err(err)?;
        Ok((e.lower, e.upper))
    }

    fn singular_values(&self) -> Vec<f64> {
        operators::singular_values(self.inner.entries())
    }

    /// Spectral norm of the difference on the degree <= d block.
    fn block_distance(&self, other: &PyOperator, degree: usize) -> PyResult<f64> {
        operators::block_distance(&self.inner, &other.inner, degree).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Operator(dim={}, t={})", self.inner.dim(), self.inner.basis().t())
    }
}

#[pyfunction]
#[pyo3(signature = (k, p, t = 1.0))]
fn basis_norm(k: Vec<i64>, p: &str, t: f64) -> PyResult<f64> {
    let params = FockParams::new(t, k.len(), exponent(p)?).map_err(err)?;
    fock::basis_norm(&params, &k).map_err(err)
}

/// F^p norm of sum_k coeffs[k] e_k by quadrature (n = 1).
#[pyfunction]
fn fp_norm(basis: &PyBasis, coeffs: Vec<C64>, p: &str) -> PyResult<f64> {
    let v = TruncatedVector::new(basis.inner.clone(), DVector::from_vec(coeffs)).map_err(err)?;
    Ok(fock::fp_norm(&v, exponent(p)?).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (z, w, t = 1.0, normalized = false))]
fn kernel_eval(z: Vec<C64>, w: Vec<C64>, t: f64, normalized: bool) -> PyResult<C64> {
    let params = FockParams::hilbert(t, z.len()).map_err(err)?;
    Ok(fock::kernel_eval(&params, &z, &w, normalized))
}

#[pyfunction]
fn weyl(basis: &PyBasis, z: Vec<C64>) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: fock::weyl_matrix(&basis.inner, &z).map_err(err)? })
}

#[pyfunction]
fn toeplitz(symbol: &PySymbol, basis: &PyBasis) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: operators::toeplitz(&symbol.inner, &basis.inner).map_err(err)? })
}

/// g_s * A for the normalized heat kernel g_s.
#[pyfunction]
fn heat_convolve(op: &PyOperator, s: f64) -> PyResult<PyOperator> {
    let n = op.inner.basis().n();
    let m = operators::module_conv(&heat_kernel_symbol(s, n), &op.inner).map_err(err)?;
    Ok(PyOperator { inner: m.matrix })
}

#[pyfunction]
fn dilation_conjugate(op: &PyOperator, lam: f64) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: operators::dilation_conjugate(&op.inner, lam).map_err(err)? })
}

#[pyfunction]
fn k_s(basis: &PyBasis, s: f64) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: operators::k_s_matrix(&basis.inner, s).map_err(err)? })
}

/// Wiener approximant as JSON: terms, certified l1_error, success flag.
#[pyfunction]
#[pyo3(signature = (level, t = 1.0))]
fn wiener_coefficients(level: usize, t: f64) -> PyResult<String> {
    let w = approximation::wiener_coefficients(t, level, 1, &WienerSearch::default()).map_err(err)?;
    serde_json::to_string(&w).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// (lhs, rhs, gap) of the trace identity for g_s * f at z.
#[pyfunction]
fn trace_heat_identity(symbol: &PySymbol, s: f64, z: Vec<C64>, basis: &PyBasis) -> PyResult<(C64, C64, f64)> {
    let r = approximation::trace_heat_identity(&symbol.inner, s, &z, &basis.inner).map_err(err)?;
    Ok((r.lhs, r.rhs, r.gap))
}

/// Forward (s < t/2) or reverse (t/2 < s < 2t) Berger-Coburn ratio.
#[pyfunction]
#[pyo3(signature = (symbol, s, basis, reverse = false))]
fn berger_coburn_ratio(symbol: &PySymbol, s: f64, basis: &PyBasis, reverse: bool) -> PyResult<f64> {
    let r = if reverse {
        approximation::berger_coburn_reverse(&symbol.inner, s, &basis.inner, 0)
    } else {
        approximation::berger_coburn_forward(&symbol.inner, s, &basis.inner, 0)
    };
    Ok(r.map_err(err)?.ratio)
}

#[pyfunction]
fn list_suites() -> Vec<(String, Vec<String>)> {
    experiments::list_suites()
        .into_iter()
        .map(|(s, a)| (s.name().to_string(), a.iter().map(|x| x.to_string()).collect()))
        .collect()
}

/// Runs one suite with default settings (or a TOML config) and returns the
/// report as JSON. Tables are written only when `out` is given.
#[pyfunction]
#[pyo3(signature = (suite = None, config = None, seed = None, out = None))]
fn run_suite(
    py: Python<'_>,
    suite: Option<&str>,
    config: Option<&str>,
    seed: Option<u64>,
    out: Option<std::path::PathBuf>,
) -> PyResult<String> {
    let mut cfg = match (config, suite) {
        (Some(text), _) => ExperimentConfig::from_toml(text).map_err(err)?,
        (None, Some(name)) => ExperimentConfig::for_suite(Suite::parse(name).map_err(err)?),
        (None, None) => return Err(PyValueError::new_err("pass a suite name or a config")),
    };
    if let (Some(_), Some(name)) = (config, suite) {
        cfg.suite = Suite::parse(name).map_err(err)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let res = py.allow_threads(|| experiments::run(&cfg)).map_err(err)?;
    if let Some(dir) = out {
        res.write(&dir).map_err(err)?;
    }
    res.report.to_json().map_err(err)
}

#[pymodule]
fn fockbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PySymbol>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(basis_norm, m)?)?;
    m.add_function(wrap_pyfunction!(fp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(weyl, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz, m)?)?;
    m.add_function(wrap_pyfunction!(heat_convolve, m)?)?;
    m.add_function(wrap_pyfunction!(dilation_conjugate, m)?)?;
    m.add_function(wrap_pyfunction!(k_s, m)?)?;
    m.add_function(wrap_pyfunction!(wiener_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(trace_heat_identity, m)?)?;
    m.add_function(wrap_pyfunction!(berger_coburn_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(list_suites, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
