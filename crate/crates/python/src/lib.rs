//! Python bindings.
//!
//! ```python
//! import hyperqif as hq
//! env = hq.Hyper(["x1", "x2"], [0.5, 0.5], [[1, 0], [0, 1]])
//! hq.decompose_security(env)  # {"perceived": 0.5, "by_aggregation": 0.5, "by_strategy": 1.0, ...}
//! ```
//!
//! Measures are passed as `"bayes"`, `"identity"` or a `GainFunction`.

use ndarray::Array2;
use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hyperqif_core as core;
use hyperqif_core::json::{HigherJson, HyperJson};
use hyperqif_core::{QifError, SecretSpace, VulnerabilityMeasure};

fn err(e: QifError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Array2::from_shape_vec((rows.len(), ncols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

#[pyclass(name = "Distribution", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistribution(core::Distribution);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(labels: Vec<String>, probs: Vec<f64>) -> PyResult<Self> {
        let space = SecretSpace::new(labels).map_err(err)?;
        Ok(PyDistribution(
            core::Distribution::new(space, probs).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn point(labels: Vec<String>, label: &str) -> PyResult<Self> {
        let space = SecretSpace::new(labels).map_err(err)?;
        Ok(PyDistribution(
            core::point_distribution(space, label).map_err(err)?,
        ))
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.space().labels().to_vec()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Distribution({:?}, {:?})",
            self.0.space().labels(),
            self.0.probs()
        )
    }
}

#[pyclass(name = "GainFunction", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGainFunction(core::GainFunction);

#[pymethods]
impl PyGainFunction {
    #[new]
    fn new(guesses: Vec<String>, secrets: Vec<String>, gain: Vec<Vec<f64>>) -> PyResult<Self> {
        let g = core::GainFunction::new(
            SecretSpace::new(guesses).map_err(err)?,
            SecretSpace::new(secrets).map_err(err)?,
            matrix(gain)?,
        )
        .map_err(err)?;
        Ok(PyGainFunction(g))
    }

    #[getter]
    fn gain(&self) -> Vec<Vec<f64>> {
        rows(self.0.gain())
    }
}

#[pyclass(name = "Hyper", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHyper(core::Hyper);

#[pymethods]
impl PyHyper {
    #[new]
    fn new(secrets: Vec<String>, outer: Vec<f64>, inners: Vec<Vec<f64>>) -> PyResult<Self> {
        let j = HyperJson {
            secrets,
            outer,
            inners,
        };
        Ok(PyHyper(core::Hyper::try_from(j).map_err(err)?))
    }

    /// Hyper JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let j: HyperJson = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyHyper(core::Hyper::try_from(j).map_err(err)?))
    }

    #[staticmethod]
    fn point(prior: &PyDistribution) -> Self {
        PyHyper(core::point_hyper(prior.0.clone()))
    }

    /// Hyper from a joint matrix with rows indexed by secrets.
    #[staticmethod]
    fn from_joint(secrets: Vec<String>, joint: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = matrix(joint)?;
        let cols = SecretSpace::indexed("y", m.ncols().max(1)).map_err(err)?;
        let j =
            core::JointDistribution::new(SecretSpace::new(secrets).map_err(err)?, cols, m).map_err(err)?;
        Ok(PyHyper(core::from_joint(&j)))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&HyperJson::from(&self.0)).expect("serializable")
    }

    #[getter]
    fn secrets(&self) -> Vec<String> {
        self.0.space().labels().to_vec()
    }

    #[getter]
    fn outer(&self) -> Vec<f64> {
        self.0.outer().to_vec()
    }

    #[getter]
    fn inners(&self) -> Vec<Vec<f64>> {
        self.0.inners().iter().map(|d| d.probs().to_vec()).collect()
    }

    fn prior(&self) -> PyDistribution {
        PyDistribution(self.0.prior())
    }

    fn joint_matrix(&self) -> Vec<Vec<f64>> {
        rows(self.0.joint_matrix().matrix())
    }

    /// `(prior, delta)` with `[[H]] = diag(prior) . delta`.
    fn decompose(&self) -> (PyDistribution, Vec<Vec<f64>>) {
        let (p, delta) = self.0.decompose();
        (PyDistribution(p), rows(delta.matrix()))
    }

    fn reduce(&self) -> Self {
        PyHyper(self.0.reduce())
    }

    #[pyo3(signature = (other, tol = 1e-9))]
    fn approx_eq(&self, other: &PyHyper, tol: f64) -> bool {
        self.0.approx_eq(&other.0, tol)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Hyper(outer={:?}, inners={:?})", self.0.outer(), self.inners())
    }
}

#[pyclass(name = "AggregationMatrix", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAggregationMatrix(core::AggregationMatrix);

#[pymethods]
impl PyAggregationMatrix {
    #[new]
    fn new(matrix_rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyAggregationMatrix(
            core::AggregationMatrix::from_matrix(matrix(matrix_rows)?).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn deterministic(assignment: Vec<usize>, columns: usize) -> PyResult<Self> {
        Ok(PyAggregationMatrix(
            core::AggregationMatrix::deterministic(&assignment, columns).map_err(err)?,
        ))
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.0.matrix())
    }
}

fn measure_of(measure: &Bound<'_, PyAny>, space: &SecretSpace) -> PyResult<VulnerabilityMeasure> {
    if let Ok(name) = measure.extract::<String>() {
        return VulnerabilityMeasure::builtin(&name, space)
            .ok_or_else(|| PyValueError::new_err(format!("unknown measure `{name}`")));
    }
    if let Ok(g) = measure.extract::<PyRef<'_, PyGainFunction>>() {
        return Ok(VulnerabilityMeasure::Gain(g.0.clone()));
    }
    Err(PyTypeError::new_err(
        "measure must be \"bayes\", \"identity\" or a GainFunction",
    ))
}

#[pyfunction]
#[pyo3(signature = (dist, measure = None))]
fn vulnerability(dist: &PyDistribution, measure: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let m = match measure {
        Some(m) => measure_of(m, dist.0.space())?,
        None => VulnerabilityMeasure::Bayes,
    };
    m.vulnerability(&dist.0).map_err(err)
}

#[pyfunction]
fn bayes_vulnerability(dist: &PyDistribution) -> f64 {
    core::bayes_vulnerability(&dist.0)
}

#[pyfunction]
fn g_vulnerability(gain: &PyGainFunction, dist: &PyDistribution) -> PyResult<f64> {
    core::g_vulnerability(&gain.0, &dist.0).map_err(err)
}

macro_rules! hyper_measure_fn {
    ($name:ident, $core:path) => {
        #[pyfunction]
        #[pyo3(signature = (hyper, measure = None))]
        fn $name(hyper: &PyHyper, measure: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
            let m = match measure {
                Some(m) => measure_of(m, hyper.0.space())?,
                None => VulnerabilityMeasure::Bayes,
            };
            $core(&m, &hyper.0).map_err(err)
        }
    };
}

hyper_measure_fn!(hyper_vulnerability, core::hyper_vulnerability);
hyper_measure_fn!(environmental_vulnerability, core::environmental_vulnerability);
hyper_measure_fn!(strategy_vulnerability, core::strategy_vulnerability);

/// Lower bound on strategy vulnerability that holds for every non-negative
/// gain function.
#[pyfunction]
fn capacity_lower_bound(env: &PyHyper) -> f64 {
    core::capacity_lower_bound(&env.0)
}

fn measure_or_bayes(
    measure: Option<&Bound<'_, PyAny>>,
    space: &SecretSpace,
) -> PyResult<VulnerabilityMeasure> {
    match measure {
        Some(m) => measure_of(m, space),
        None => Ok(VulnerabilityMeasure::Bayes),
    }
}

#[pyfunction]
#[pyo3(signature = (env, measure = None))]
fn decompose_security<'py>(
    py: Python<'py>,
    env: &PyHyper,
    measure: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = measure_or_bayes(measure, env.0.space())?;
    let d = core::decompose_security(&m, &env.0).map_err(err)?;
    let b = d.bits();
    let out = PyDict::new(py);
    out.set_item("perceived", d.perceived)?;
    out.set_item("by_aggregation", d.by_aggregation)?;
    out.set_item("by_strategy", d.by_strategy)?;
    let bits = PyDict::new(py);
    bits.set_item("perceived", b.perceived)?;
    bits.set_item("by_aggregation", b.by_aggregation)?;
    bits.set_item("by_strategy", b.by_strategy)?;
    out.set_item("bits", bits)?;
    Ok(out)
}

#[pyfunction]
fn apply_aggregation(env: &PyHyper, a: &PyAggregationMatrix) -> PyResult<PyHyper> {
    Ok(PyHyper(core::apply_aggregation(&env.0, &a.0).map_err(err)?))
}

/// `(holds, residual, witness or None)`.
#[pyfunction]
fn check_abstracts(model: &PyHyper, env: &PyHyper) -> PyResult<(bool, f64, Option<PyAggregationMatrix>)> {
    let w = core::check_abstracts(&model.0, &env.0).map_err(err)?;
    Ok((w.holds, w.residual, w.matrix.map(PyAggregationMatrix)))
}

#[pyfunction]
#[pyo3(signature = (env, a, measure = None))]
fn model_vulnerability(
    env: &PyHyper,
    a: &PyAggregationMatrix,
    measure: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let m = measure_or_bayes(measure, env.0.space())?;
    core::model_vulnerability(&m, &env.0, &a.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (env, model, measure = None))]
fn strategy_vulnerability_given(
    env: &PyHyper,
    model: &PyHyper,
    measure: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let m = measure_or_bayes(measure, env.0.space())?;
    core::strategy_vulnerability_given(&m, &env.0, &model.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (env, model, coarser, measure = None))]
fn refinement_ratio(
    env: &PyHyper,
    model: &PyHyper,
    coarser: &PyHyper,
    measure: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let m = measure_or_bayes(measure, env.0.space())?;
    core::refinement_ratio(&m, &env.0, &model.0, &coarser.0).map_err(err)
}

fn higher_from_json(text: &str) -> PyResult<core::HigherHyper> {
    let j: HigherJson = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    core::HigherHyper::try_from(j).map_err(err)
}

/// Collapses higher-order hyper JSON to an ordinary hyper.
#[pyfunction]
fn collapse(higher_json: &str) -> PyResult<PyHyper> {
    Ok(PyHyper(
        core::collapse(&higher_from_json(higher_json)?).map_err(err)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (higher_json, measure = None))]
fn vulnerability_n(higher_json: &str, measure: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let h = higher_from_json(higher_json)?;
    let m = measure_or_bayes(measure, h.space())?;
    core::vulnerability_n(&m, &h).map_err(err)
}

#[pymodule]
#[pyo3(name = "hyperqif")]
fn hyperqif_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyGainFunction>()?;
    m.add_class::<PyHyper>()?;
    m.add_class::<PyAggregationMatrix>()?;
    m.add_function(wrap_pyfunction!(vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(g_vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(hyper_vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(environmental_vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(strategy_vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_security, m)?)?;
    m.add_function(wrap_pyfunction!(apply_aggregation, m)?)?;
    m.add_function(wrap_pyfunction!(check_abstracts, m)?)?;
    m.add_function(wrap_pyfunction!(model_vulnerability, m)?)?;
    m.add_function(wrap_pyfunction!(strategy_vulnerability_given, m)?)?;
    m.add_function(wrap_pyfunction!(refinement_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(collapse, m)?)?;
    m.add_function(wrap_pyfunction!(vulnerability_n, m)?)?;
    Ok(())
}
