//! Python bindings for `dkstar`.

use dkstar::dislocation::{dislocation_report, kappa_counting, kappa_integral};
use dkstar::graph::{
    load_config, Angle, EdgeSpec, ExtReal, MatchingCondition, PotentialSample, StarGraph,
};
use dkstar::oracle::{discretize, oracle_spectrum};
use dkstar::propagator::propagate;
use dkstar::spectrum::{
    check_interlacing, count, d_r, edge_eigenvalues, robin_spectrum, Spectrum as CoreSpectrum,
};
use dkstar::weyl;
use dkstar::C64 as Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: dkstar::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse_angle(alpha: &Bound<'_, PyAny>) -> PyResult<Angle> {
    if let Ok(s) = alpha.extract::<String>() {
        return Angle::parse_token(&s).map_err(to_py);
    }
    Ok(Angle::Value(alpha.extract::<f64>()?))
}

fn parse_tau(tau: &Bound<'_, PyAny>) -> PyResult<ExtReal> {
    if let Ok(s) = tau.extract::<String>() {
        return ExtReal::parse(&s).map_err(to_py);
    }
    let t: f64 = tau.extract()?;
    if t.is_infinite() {
        Ok(ExtReal::Infinity)
    } else if t.is_nan() {
        Err(PyValueError::new_err("tau must not be NaN"))
    } else {
        Ok(ExtReal::Finite(t))
    }
}

/// One edge of a star graph.
#[pyclass(name = "Edge", from_py_object)]
#[derive(Clone)]
struct PyEdge {
    inner: EdgeSpec,
}

#[pymethods]
impl PyEdge {
    /// `alpha` is a float or a token such as `"pi/2"`; `potential` is a list
    /// of `(x, p, q)` knots of a piecewise-linear potential.
    #[new]
    #[pyo3(signature = (length, alpha, potential = None))]
    fn new(
        length: f64,
        alpha: &Bound<'_, PyAny>,
        potential: Option<Vec<(f64, f64, f64)>>,
    ) -> PyResult<Self> {
        let potential = potential
            .unwrap_or_default()
            .into_iter()
            .map(|(x, p, q)| PotentialSample { x, p, q })
            .collect();
        let inner = EdgeSpec::new(length, parse_angle(alpha)?, potential).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha_rad()
    }

    fn eigenvalues(&self, a: f64, b: f64) -> PyResult<Vec<f64>> {
        edge_eigenvalues(&self.inner, (a, b)).map_err(to_py)
    }

    /// Weyl function at a non-real `z`.
    fn m(&self, z: Complex64) -> PyResult<Complex64> {
        weyl::m(&self.inner, z).map_err(to_py)
    }

    /// Transfer matrix `Y(x, z)` as nested lists.
    fn propagator(&self, x: f64, z: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        let y = propagate(&self.inner, x, z).map_err(to_py)?.y;
        Ok((0..2)
            .map(|i| (0..2).map(|j| y[(i, j)]).collect())
            .collect())
    }

    fn kappa(&self) -> PyResult<i64> {
        kappa_counting(&self.inner).map_err(to_py)
    }

    fn kappa_integral(&self, omega: f64) -> PyResult<i64> {
        kappa_integral(&self.inner, omega)
            .map(|k| k.kappa)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Edge(length={}, alpha={}, knots={})",
            self.inner.length,
            self.inner.alpha_rad(),
            self.inner.potential.len()
        )
    }
}

/// Spectrum of a star graph in a window.
#[pyclass(name = "Spectrum")]
struct PySpectrum {
    inner: CoreSpectrum,
}

#[pymethods]
impl PySpectrum {
    /// `(lambda, multiplicity, tag)` triples in increasing order.
    fn entries(&self) -> Vec<(f64, usize, &'static str)> {
        self.inner
            .entries
            .iter()
            .map(|e| (e.lambda, e.multiplicity, e.tag.as_str()))
            .collect()
    }

    /// Eigenvalues repeated by multiplicity.
    fn multiset(&self) -> Vec<f64> {
        self.inner.multiset()
    }

    #[getter]
    fn poles(&self) -> Vec<f64> {
        self.inner.poles.clone()
    }

    fn count(&self, a: f64, b: f64) -> PyResult<usize> {
        count(&self.inner, a, b).map_err(to_py)
    }

    fn d_r(&self, r: f64) -> PyResult<i64> {
        d_r(&self.inner, r).map_err(to_py)
    }

    fn interlaces(&self, other: &PySpectrum) -> PyResult<bool> {
        check_interlacing(&self.inner, &other.inner)
            .map(|r| r.passed)
            .map_err(to_py)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.entries.len()
    }
}

/// Compact star graph with Robin coupling at the centre.
#[pyclass(name = "StarGraph")]
struct PyStarGraph {
    inner: StarGraph,
}

#[pymethods]
impl PyStarGraph {
    #[new]
    fn new(edges: Vec<PyEdge>) -> PyResult<Self> {
        let inner = StarGraph::new(edges.into_iter().map(|e| e.inner).collect()).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Builds the graph from a JSON configuration string.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_config(text).map_err(to_py)?.graph,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edges(&self) -> Vec<PyEdge> {
        self.inner
            .edges
            .iter()
            .cloned()
            .map(|inner| PyEdge { inner })
            .collect()
    }

    fn spectrum(&self, tau: &Bound<'_, PyAny>, a: f64, b: f64) -> PyResult<PySpectrum> {
        let inner = robin_spectrum(&self.inner, parse_tau(tau)?, (a, b)).map_err(to_py)?;
        Ok(PySpectrum { inner })
    }

    fn m_tau(&self, tau: &Bound<'_, PyAny>, z: Complex64) -> PyResult<Complex64> {
        weyl::m_tau(&self.inner, parse_tau(tau)?, z).map_err(to_py)
    }

    /// Finite-difference reference spectrum as `(lambda, multiplicity)` pairs.
    #[pyo3(signature = (tau, a, b, m = 64))]
    fn oracle(
        &self,
        tau: &Bound<'_, PyAny>,
        a: f64,
        b: f64,
        m: usize,
    ) -> PyResult<Vec<(f64, usize)>> {
        let op = discretize(&self.inner, &MatchingCondition::Robin(parse_tau(tau)?), m)
            .map_err(to_py)?;
        let cl = oracle_spectrum(&op, (a, b)).map_err(to_py)?;
        Ok(cl.into_iter().map(|c| (c.lambda, c.multiplicity)).collect())
    }

    fn dislocation<'py>(
        &self,
        py: Python<'py>,
        tau: &Bound<'py, PyAny>,
        radii: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let rep = dislocation_report(&self.inner, parse_tau(tau)?, &radii).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item(
            "kappa",
            rep.edges.iter().map(|e| e.kappa).collect::<Vec<_>>(),
        )?;
        d.set_item("kappa0", rep.kappa0)?;
        d.set_item("n_ge", rep.n_ge)?;
        d.set_item("n_le", rep.n_le)?;
        d.set_item(
            "samples",
            rep.samples
                .iter()
                .map(|s| (s.r, s.d_r, s.within_bound))
                .collect::<Vec<_>>(),
        )?;
        d.set_item("passed", rep.passed)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("StarGraph(n={})", self.inner.n())
    }
}

#[pymodule]
fn pydkstar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEdge>()?;
    m.add_class::<PyStarGraph>()?;
    m.add_class::<PySpectrum>()?;
    Ok(())
}
