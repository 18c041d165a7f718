//! Python bindings: `import pyellint`.

use ellint::engine::{
    anomaly_check as anomaly, graph_integral as integral, modularity_check as modularity, Method,
    QuadratureControl, SelfLoopMode,
};
use ellint::graph::DecoratedGraph;
use ellint::modular::{self, ModularGroupElement, ModularPoint, SumControl};
use ellint::polynomials::{self, SchwingerVector};
use ellint::propagator::{self, RegularizationWindow};
use ellint::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn err(e: Error) -> PyErr {
    if e.is_numeric() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn point(tau: Complex64) -> PyResult<ModularPoint> {
    ModularPoint::from_complex(tau).map_err(err)
}

/// JSON value to Python objects; {"re", "im"} objects become complex numbers.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<PyObject> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(a) => {
            let items: Vec<PyObject> = a.iter().map(|x| to_py(py, x)).collect::<PyResult<_>>()?;
            PyList::new_bound(py, items).into_py(py)
        }
        Value::Object(m) => {
            if m.len() == 2 {
                if let (Some(re), Some(im)) = (m.get("re").and_then(Value::as_f64), m.get("im").and_then(Value::as_f64)) {
                    return Ok(Complex64::new(re, im).into_py(py));
                }
            }
            let d = PyDict::new_bound(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_py(py)
        }
    })
}

fn as_py<T: serde::Serialize>(py: Python<'_>, x: &T) -> PyResult<PyObject> {
    let v = serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

#[allow(clippy::too_many_arguments)]
fn control(
    eps_schedule: Option<Vec<f64>>,
    l: Option<f64>,
    grid: Option<usize>,
    excision: Option<f64>,
    tol: Option<f64>,
    richardson_order: Option<usize>,
    method: Option<&str>,
    regulated_loops: bool,
) -> PyResult<QuadratureControl> {
    let mut c = QuadratureControl::default();
    if let Some(e) = eps_schedule {
        c.richardson_order = c.richardson_order.min(e.len().saturating_sub(1));
        c.eps_schedule = e;
    }
    if let Some(l) = l {
        c.l = l;
    }
    if let Some(n) = grid {
        c.grid_per_dim = n;
    }
    if let Some(r) = excision {
        c.excision_radius = r;
    }
    if let Some(t) = tol {
        c.tol = t;
    }
    if let Some(k) = richardson_order {
        c.richardson_order = k;
    }
    c.method = match method.unwrap_or("regulated") {
        "regulated" | "regulated-extrapolated" => Method::RegulatedExtrapolated,
        "excised" | "excised-direct" => Method::ExcisedDirect,
        m => return Err(PyValueError::new_err(format!("unknown method `{m}`"))),
    };
    if regulated_loops {
        c.self_loops = SelfLoopMode::Regulated;
    }
    c.validate().map_err(err)?;
    Ok(c)
}

/// Decorated directed multigraph.
#[pyclass(name = "Graph", module = "pyellint")]
#[derive(Clone)]
struct PyGraph {
    inner: DecoratedGraph,
}

#[pymethods]
impl PyGraph {
    /// Graph(vertices, edges) with edges as (head, tail, n).
    #[new]
    fn new(vertices: Vec<String>, edges: Vec<(String, String, i64)>) -> PyResult<Self> {
        let e: Vec<(&str, &str, i64)> = edges.iter().map(|(h, t, n)| (h.as_str(), t.as_str(), *n)).collect();
        let v: Vec<&str> = vertices.iter().map(|s| s.as_str()).collect();
        Ok(PyGraph { inner: ellint::graph::build_graph(&v, &e).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: DecoratedGraph::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn vertices(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    /// Edges as (head index, tail index, n).
    #[getter]
    fn edges(&self) -> Vec<(usize, usize, u32)> {
        self.inner.edges().iter().map(|e| (e.head, e.tail, e.n)).collect()
    }

    #[getter]
    fn weight(&self) -> u32 {
        self.inner.weight()
    }

    fn contract_edge(&self, e: usize) -> PyResult<Self> {
        Ok(PyGraph { inner: self.inner.contract_edge(e).map_err(err)? })
    }

    fn delete_edge(&self, e: usize) -> PyResult<Self> {
        Ok(PyGraph { inner: self.inner.delete_edge(e).map_err(err)? })
    }

    fn reverse_edge(&self, e: usize) -> PyResult<Self> {
        Ok(PyGraph { inner: self.inner.reverse_edge(e).map_err(err)? })
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn __repr__(&self) -> String {
        format!("Graph({} vertices, {} edges)", self.inner.n_vertices(), self.inner.n_edges())
    }
}

/// W of the graph at tau; returns {"value", "err", "method", "params"}.
#[pyfunction]
#[pyo3(signature = (graph, tau, eps_schedule=None, L=None, grid=None, excision=None, tol=None, richardson_order=None, method=None, regulated_loops=false))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn graph_integral(
    py: Python<'_>,
    graph: &PyGraph,
    tau: Complex64,
    eps_schedule: Option<Vec<f64>>,
    L: Option<f64>,
    grid: Option<usize>,
    excision: Option<f64>,
    tol: Option<f64>,
    richardson_order: Option<usize>,
    method: Option<&str>,
    regulated_loops: bool,
) -> PyResult<PyObject> {
    let c = control(eps_schedule, L, grid, excision, tol, richardson_order, method, regulated_loops)?;
    let t = point(tau)?;
    let g = graph.inner.clone();
    let r = py.allow_threads(|| integral(&g, t, &c)).map_err(err)?;
    as_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (graph, tau, gamma, eps_schedule=None, L=None, grid=None, tol=None))]
#[allow(non_snake_case)]
fn modularity_check(
    py: Python<'_>,
    graph: &PyGraph,
    tau: Complex64,
    gamma: (i64, i64, i64, i64),
    eps_schedule: Option<Vec<f64>>,
    L: Option<f64>,
    grid: Option<usize>,
    tol: Option<f64>,
) -> PyResult<PyObject> {
    let c = control(eps_schedule, L, grid, None, tol, None, None, false)?;
    let gm = ModularGroupElement::new(gamma.0, gamma.1, gamma.2, gamma.3).map_err(err)?;
    let t = point(tau)?;
    let g = graph.inner.clone();
    let r = py.allow_threads(|| modularity(&g, t, gm, &c)).map_err(err)?;
    as_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (graph, tau, h=1e-3, eps_schedule=None, L=None, grid=None, tol=None))]
#[allow(non_snake_case)]
fn anomaly_check(
    py: Python<'_>,
    graph: &PyGraph,
    tau: Complex64,
    h: f64,
    eps_schedule: Option<Vec<f64>>,
    L: Option<f64>,
    grid: Option<usize>,
    tol: Option<f64>,
) -> PyResult<PyObject> {
    let c = control(eps_schedule, L, grid, None, tol, None, None, false)?;
    let t = point(tau)?;
    let g = graph.inner.clone();
    let r = py.allow_threads(|| anomaly(&g, t, &c, h)).map_err(err)?;
    as_py(py, &r)
}

#[pyfunction]
fn self_loop_value(n: u32, tau: Complex64) -> PyResult<Complex64> {
    Ok(propagator::self_loop_value(n, point(tau)?, &SumControl::default()))
}

/// A(n0; ns) as the string "p/q".
#[pyfunction]
#[pyo3(signature = (n0, ns=Vec::new()))]
fn a_constant(n0: u32, ns: Vec<u32>) -> PyResult<String> {
    Ok(polynomials::a_constant(n0, &ns).map_err(err)?.to_string())
}

#[pyfunction]
#[pyo3(signature = (z, tau, deriv=0))]
fn weierstrass_p(z: Complex64, tau: Complex64, deriv: u32) -> PyResult<Complex64> {
    modular::weierstrass_p(z, point(tau)?, deriv, &SumControl::default()).map_err(err)
}

#[pyfunction]
fn eisenstein(k: i64, tau: Complex64) -> PyResult<Complex64> {
    modular::eisenstein(k, point(tau)?, &SumControl::default()).map_err(err)
}

#[pyfunction]
fn e2_star(tau: Complex64) -> PyResult<Complex64> {
    Ok(modular::e2_star(point(tau)?, &SumControl::default()))
}

/// d^m P_{eps,L}(z) on the torus with modulus tau.
#[pyfunction]
#[pyo3(signature = (z, tau, eps, L, m=0))]
#[allow(non_snake_case)]
fn bcov_propagator(z: Complex64, tau: Complex64, eps: f64, L: f64, m: u32) -> PyResult<Complex64> {
    let w = RegularizationWindow::new(eps, L).map_err(err)?;
    Ok(propagator::bcov_propagator(z, point(tau)?, w, m, &SumControl::default()))
}

#[pyfunction]
#[pyo3(signature = (graph, t, base=None))]
fn kirchhoff_det(graph: &PyGraph, t: Vec<f64>, base: Option<usize>) -> PyResult<f64> {
    let t = SchwingerVector::new(t).map_err(err)?;
    let b = base.unwrap_or(graph.inner.n_vertices().saturating_sub(1));
    polynomials::kirchhoff_det(&graph.inner, &t, b).map_err(err)
}

#[pyfunction]
fn tree_polynomial(graph: &PyGraph, t: Vec<f64>) -> PyResult<f64> {
    let t = SchwingerVector::new(t).map_err(err)?;
    polynomials::tree_polynomial(&graph.inner, &t).map_err(err)
}

#[pyfunction]
fn spanning_trees(graph: &PyGraph) -> PyResult<Vec<Vec<usize>>> {
    polynomials::spanning_trees(&graph.inner).map_err(err)
}

/// Cut sets as (edges, side1, side2).
#[pyfunction]
fn cuts(graph: &PyGraph, seeds1: Vec<usize>, seeds2: Vec<usize>) -> PyResult<Vec<(Vec<usize>, Vec<usize>, Vec<usize>)>> {
    Ok(polynomials::cuts(&graph.inner, &seeds1, &seeds2)
        .map_err(err)?
        .into_iter()
        .map(|c| (c.edges, c.side1, c.side2))
        .collect())
}

#[pymodule]
fn pyellint(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(graph_integral, m)?)?;
    m.add_function(wrap_pyfunction!(modularity_check, m)?)?;
    m.add_function(wrap_pyfunction!(anomaly_check, m)?)?;
    m.add_function(wrap_pyfunction!(self_loop_value, m)?)?;
    m.add_function(wrap_pyfunction!(a_constant, m)?)?;
    m.add_function(wrap_pyfunction!(weierstrass_p, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein, m)?)?;
    m.add_function(wrap_pyfunction!(e2_star, m)?)?;
    m.add_function(wrap_pyfunction!(bcov_propagator, m)?)?;
    m.add_function(wrap_pyfunction!(kirchhoff_det, m)?)?;
    m.add_function(wrap_pyfunction!(tree_polynomial, m)?)?;
    m.add_function(wrap_pyfunction!(spanning_trees, m)?)?;
    m.add_function(wrap_pyfunction!(cuts, m)?)?;
    m.add("E2STAR_COEFF", propagator::E2STAR_COEFF)?;
    Ok(())
}
