//! Python module `polylab`.
//!
//! Reports come back as plain dicts built from their JSON form; exact rationals
//! are strings such as `"3259/1048576"`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use polylab::diagrams::{eval_diagram as eval_diagram_rs, DiagramSpec};
use polylab::enumerate::{Enumerator, Model};
use polylab::fields::{Geometry, LatticeField};
use polylab::greens::{self, Walk};
use polylab::rational::parse_rational;
use polylab::{profile, torus, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(polylab, BudgetExceeded, PyRuntimeError);

fn err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn model(name: &str) -> PyResult<Model> {
    name.parse().map_err(err)
}

fn kernel(d: usize, range: u32) -> PyResult<polylab::StepKernel> {
    polylab::StepKernel::new(d, range).map_err(err)
}

#[pyclass(name = "StepKernel", frozen)]
pub struct PyStepKernel {
    inner: polylab::StepKernel,
}

#[pymethods]
impl PyStepKernel {
    #[new]
    fn new(d: usize, range: u32) -> PyResult<Self> {
        Ok(Self { inner: kernel(d, range)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn range(&self) -> u32 {
        self.inner.range()
    }

    #[getter]
    fn omega(&self) -> u64 {
        self.inner.omega()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2()
    }

    fn weight(&self, x: Vec<i64>) -> f64 {
        self.inner.weight(&x)
    }

    fn d_hat(&self, k: Vec<f64>) -> PyResult<f64> {
        if k.len() != self.inner.dim() {
            return Err(PyValueError::new_err("k must have one entry per dimension"));
        }
        Ok(self.inner.d_hat(&k))
    }

    fn tilted_mass_sum(&self, m: f64) -> f64 {
        self.inner.tilted_mass_sum(m)
    }

    fn __repr__(&self) -> String {
        format!("StepKernel(d={}, L={})", self.inner.dim(), self.inner.range())
    }
}

#[pyclass(name = "LatticeField", from_py_object)]
#[derive(Clone)]
pub struct PyLatticeField {
    inner: LatticeField,
}

#[pymethods]
impl PyLatticeField {
    /// A field on the box `[-radius, radius]^dim` with values in row-major order.
    #[staticmethod]
    fn on_box(dim: usize, radius: usize, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: LatticeField::new(Geometry::Box { dim, radius }, values).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `("box", radius)` or `("torus", period)`.
    #[getter]
    fn geometry(&self) -> (&'static str, usize) {
        match self.inner.geometry() {
            Geometry::Box { radius, .. } => ("box", radius),
            Geometry::Torus { period, .. } => ("torus", period),
        }
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn get(&self, x: Vec<i64>) -> f64 {
        self.inner.get(&x)
    }

    fn sum(&self) -> f64 {
        self.inner.sum()
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn to_box(&self, radius: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.to_box(radius).map_err(err)? })
    }

    #[pyo3(signature = (other, radius=None))]
    fn zd_convolve(&self, other: &Self, radius: Option<usize>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.zd_convolve(&other.inner, radius).map_err(err)? })
    }

    fn torus_convolve(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.torus_convolve(&other.inner).map_err(err)? })
    }

    fn wrap_sum(&self, period: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.wrap_sum(period).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }
}

#[pyfunction]
fn so_mass(py: Python<'_>, d: usize, range: u32, z: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &greens::so_mass(&kernel(d, range)?, z).map_err(err)?)
}

#[pyfunction]
fn nn_mass(py: Python<'_>, mu: f64, d: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &greens::nn_mass(mu, d).map_err(err)?)
}

/// `S_z` on the period-`n` torus.
#[pyfunction]
fn green_field(d: usize, range: u32, z: f64, n: usize) -> PyResult<PyLatticeField> {
    let field = greens::green_field(&Walk::SpreadOut(kernel(d, range)?), z, n).map_err(err)?;
    Ok(PyLatticeField { inner: field })
}

#[pyfunction]
fn decomposition_params(py: Python<'_>, d: usize, range: u32, z: f64) -> PyResult<Py<PyAny>> {
    let p = greens::decomposition_params(&kernel(d, range)?, z).map_err(err)?;
    to_py(py, &serde_json::json!({ "lambda": p.lambda, "mu": p.mu, "moment0": p.moment0, "moment2": p.moment2 }))
}

#[pyfunction]
fn verify_decay_bound(py: Python<'_>, d: usize, range: u32, z: f64, n: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &greens::verify_decay_bound(&kernel(d, range)?, z, n).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (d, range, n_max, model="tree", budget=None))]
fn enumerate_counts(
    py: Python<'_>,
    d: usize,
    range: u32,
    n_max: usize,
    model: &str,
    budget: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let mut e = Enumerator::new(&kernel(d, range)?, self::model(model)?, n_max);
    if let Some(b) = budget {
        e = e.budget(b);
    }
    let counts = py.detach(|| e.counts()).map_err(err)?;
    to_py(py, &counts)
}

/// Coefficients `c_n(x)` for `n = 0..=n_max`.
#[pyfunction]
#[pyo3(signature = (d, range, n_max, x, model="tree"))]
fn two_point_series(py: Python<'_>, d: usize, range: u32, n_max: usize, x: Vec<i64>, model: &str) -> PyResult<Vec<BigInt>> {
    let k = kernel(d, range)?;
    let m = self::model(model)?;
    let series = py.detach(|| polylab::enumerate::two_point_series(&k, n_max, m, &x)).map_err(err)?;
    Ok(series.coeffs)
}

#[pyfunction]
#[pyo3(signature = (d, range, n_max, model="tree"))]
fn susceptibility_series(py: Python<'_>, d: usize, range: u32, n_max: usize, model: &str) -> PyResult<Vec<BigInt>> {
    let k = kernel(d, range)?;
    let m = self::model(model)?;
    let series = py.detach(|| polylab::enumerate::susceptibility_series(&k, n_max, m)).map_err(err)?;
    Ok(series.coeffs)
}

#[pyfunction]
#[pyo3(signature = (d, range, n_max, p, lam, x, model="tree"))]
#[allow(clippy::too_many_arguments)]
fn simon_lieb_check(
    py: Python<'_>,
    d: usize,
    range: u32,
    n_max: usize,
    p: &str,
    lam: Vec<Vec<i64>>,
    x: Vec<i64>,
    model: &str,
) -> PyResult<Py<PyAny>> {
    let (k, m, p) = (kernel(d, range)?, self::model(model)?, parse_rational(p).map_err(err)?);
    let rep = py.detach(|| polylab::enumerate::simon_lieb_check(&k, n_max, m, &p, &lam, &x)).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (d, range, r, n_max, x, p, model="tree"))]
#[allow(clippy::too_many_arguments)]
fn sandwich_check(
    py: Python<'_>,
    d: usize,
    range: u32,
    r: usize,
    n_max: usize,
    x: Vec<i64>,
    p: &str,
    model: &str,
) -> PyResult<Py<PyAny>> {
    let (k, m, p) = (kernel(d, range)?, self::model(model)?, parse_rational(p).map_err(err)?);
    let rep = py.detach(|| torus::sandwich_check(&k, r, n_max, m, &x, &p)).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (d, range, r, n_max, model="tree"))]
fn lift_audit(py: Python<'_>, d: usize, range: u32, r: usize, n_max: usize, model: &str) -> PyResult<Py<PyAny>> {
    let (k, m) = (kernel(d, range)?, self::model(model)?);
    let rep = py.detach(|| torus::lift_audit(&k, r, n_max, m)).map_err(err)?;
    let mut value = serde_json::to_value(&rep).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value["passed"] = rep.passed().into();
    to_py(py, &value)
}

#[pyfunction]
fn wrap_identity_check(py: Python<'_>, d: usize, range: u32, z: f64, r: usize, k: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &torus::wrap_identity_check(&kernel(d, range)?, z, r, k).map_err(err)?)
}

/// Evaluate a diagram given as JSON (or a dict) on named box fields.
#[pyfunction]
fn eval_diagram(
    py: Python<'_>,
    spec: &Bound<'_, PyAny>,
    fields: BTreeMap<String, PyLatticeField>,
    p: f64,
) -> PyResult<Py<PyAny>> {
    let text: String = match spec.extract::<String>() {
        Ok(s) => s,
        Err(_) => py.import("json")?.call_method1("dumps", (spec,))?.extract()?,
    };
    let spec: DiagramSpec = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let fields: BTreeMap<String, LatticeField> = fields.into_iter().map(|(k, v)| (k, v.inner)).collect();
    to_py(py, &eval_diagram_rs(&spec, &fields, p).map_err(err)?)
}

#[pyfunction]
fn faxen_i0(py: Python<'_>, s: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &profile::faxen_i0(s).map_err(err)?)
}

#[pyfunction]
fn faxen_general(alpha: f64, beta: f64, y: f64) -> PyResult<f64> {
    profile::faxen_general(alpha, beta, y).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (d, r, gamma="1/2", dc=8))]
fn window_prediction(py: Python<'_>, d: u32, r: u64, gamma: &str, dc: i64) -> PyResult<Py<PyAny>> {
    let gamma = gamma.parse().map_err(|_| PyValueError::new_err(format!("gamma '{gamma}' is not a rational a/b")))?;
    to_py(py, &profile::window_prediction(d, r, gamma, dc).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "polylab")]
fn polylab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_class::<PyStepKernel>()?;
    m.add_class::<PyLatticeField>()?;
    m.add_function(wrap_pyfunction!(so_mass, m)?)?;
    m.add_function(wrap_pyfunction!(nn_mass, m)?)?;
    m.add_function(wrap_pyfunction!(green_field, m)?)?;
    m.add_function(wrap_pyfunction!(decomposition_params, m)?)?;
    m.add_function(wrap_pyfunction!(verify_decay_bound, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_series, m)?)?;
    m.add_function(wrap_pyfunction!(susceptibility_series, m)?)?;
    m.add_function(wrap_pyfunction!(simon_lieb_check, m)?)?;
    m.add_function(wrap_pyfunction!(sandwich_check, m)?)?;
    m.add_function(wrap_pyfunction!(lift_audit, m)?)?;
    m.add_function(wrap_pyfunction!(wrap_identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(eval_diagram, m)?)?;
    m.add_function(wrap_pyfunction!(faxen_i0, m)?)?;
    m.add_function(wrap_pyfunction!(faxen_general, m)?)?;
    m.add_function(wrap_pyfunction!(window_prediction, m)?)?;
    Ok(())
}
