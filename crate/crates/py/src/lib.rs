//! Python bindings. Every call copies its inputs into an engine-owned
//! [`Dataset`] and releases the interpreter lock while the engine runs.

use std::sync::Arc;

use datatailor_core::selection::{self, ScoredSample, SelectionConfig, Threads, DEFAULT_K, DEFAULT_LAMBDA};
use datatailor_core::{container, Dataset, Error, FeatureMatrix, PrincipleMetrics, Sample};
use pyo3::buffer::PyBuffer;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(
    datatailor,
    DataTailorError,
    PyValueError,
    "Raised for any engine error. The message starts with the error kind."
);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    if msg.starts_with(e.kind()) {
        DataTailorError::new_err(msg)
    } else {
        DataTailorError::new_err(format!("{}: {msg}", e.kind()))
    }
}

/// Immutable dataset owned by the engine.
#[pyclass(frozen, name = "Dataset", module = "datatailor")]
pub struct PyDataset {
    inner: Arc<Dataset>,
}

#[pymethods]
impl PyDataset {
    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(samples={}, tasks={:?})",
            self.inner.samples.len(),
            self.inner.tasks
        )
    }

    /// Sample ids in record order.
    #[getter]
    fn ids(&self) -> Vec<u64> {
        self.inner.samples.iter().map(|s| s.id).collect()
    }

    #[getter]
    fn tasks(&self) -> Vec<String> {
        self.inner.tasks.clone()
    }

    /// Writes the dataset as a DTLR container.
    fn save(&self, py: Python<'_>, path: std::path::PathBuf) -> PyResult<()> {
        let ds = Arc::clone(&self.inner);
        py.detach(move || container::write_container(&ds, path)).map_err(to_py)
    }
}

impl PyDataset {
    pub fn dataset(&self) -> &Dataset {
        &self.inner
    }
}

#[pyfunction]
pub fn load(py: Python<'_>, path: std::path::PathBuf) -> PyResult<PyDataset> {
    let ds = py.detach(move || container::load_container(path)).map_err(to_py)?;
    Ok(PyDataset { inner: Arc::new(ds) })
}

/// Builds a dataset from per-sample 2-D float arrays (anything exposing the
/// buffer protocol, or nested sequences), task names and round counts. Tasks
/// are numbered by first appearance; ids default to `0..n`.
#[pyfunction]
#[pyo3(signature = (matrices, tasks, rounds, ids=None))]
pub fn from_arrays(
    matrices: &Bound<'_, PyAny>,
    tasks: Vec<String>,
    rounds: Vec<u32>,
    ids: Option<Vec<u64>>,
) -> PyResult<PyDataset> {
    let matrices: Vec<FeatureMatrix> = matrices.try_iter()?.map(|m| matrix(&m?)).collect::<PyResult<_>>()?;
    let n = matrices.len();
    let ids = ids.unwrap_or_else(|| (0..n as u64).collect());
    if tasks.len() != n || rounds.len() != n || ids.len() != n {
        return Err(to_py(Error::DimensionMismatch(format!(
            "{n} matrices but {} tasks, {} rounds and {} ids",
            tasks.len(),
            rounds.len(),
            ids.len()
        ))));
    }

    let mut names: Vec<String> = Vec::new();
    let mut samples = Vec::with_capacity(n);
    for (((features, task), rounds), id) in matrices.into_iter().zip(tasks).zip(rounds).zip(ids) {
        let task_id = match names.iter().position(|t| *t == task) {
            Some(i) => i,
            None => {
                names.push(task);
                names.len() - 1
            }
        };
        samples.push(Sample {
            id,
            task_id: task_id as u32,
            rounds,
            features,
        });
    }
    let ds = Dataset::new(names, samples);
    ds.ensure_valid().map_err(to_py)?;
    Ok(PyDataset { inner: Arc::new(ds) })
}

fn matrix(obj: &Bound<'_, PyAny>) -> PyResult<FeatureMatrix> {
    let py = obj.py();
    if let Ok(buf) = PyBuffer::<f32>::get(obj) {
        return from_buffer(buf.shape(), buf.to_vec(py)?);
    }
    if let Ok(buf) = PyBuffer::<f64>::get(obj) {
        let data = buf.to_vec(py)?.into_iter().map(|x| x as f32).collect();
        return from_buffer(buf.shape(), data);
    }
    let rows: Vec<Vec<f32>> = obj
        .extract()
        .map_err(|e| DataTailorError::new_err(format!("dimension mismatch: expected a 2-D float array ({e})")))?;
    FeatureMatrix::from_rows(&rows).map_err(to_py)
}

fn from_buffer(shape: &[usize], data: Vec<f32>) -> PyResult<FeatureMatrix> {
    match *shape {
        [rows, cols] => FeatureMatrix::new(rows, cols, data).map_err(to_py),
        _ => Err(to_py(Error::DimensionMismatch(format!(
            "expected a 2-D array, got {} dimensions",
            shape.len()
        )))),
    }
}

fn config(k: f64, lambda: f64, options: Option<&Bound<'_, PyDict>>) -> PyResult<SelectionConfig> {
    let mut cfg = SelectionConfig {
        k,
        lambda,
        ..Default::default()
    };
    let bad = |key: &str, e: &dyn std::fmt::Display| to_py(Error::InvalidArgument(format!("option {key}: {e}")));
    for (key, value) in options.into_iter().flat_map(|d| d.iter()) {
        let key: String = key.extract()?;
        let value = if let Ok(n) = value.extract::<u64>() {
            serde_json::Value::from(n)
        } else if let Ok(s) = value.extract::<String>() {
            serde_json::Value::from(s)
        } else {
            return Err(bad(&key, &"expected a string or integer"));
        };
        match key.as_str() {
            "ward_variant" => cfg.ward_variant = serde_json::from_value(value).map_err(|e| bad(&key, &e))?,
            "uniqueness_aggregation" => {
                cfg.uniqueness_aggregation = serde_json::from_value(value).map_err(|e| bad(&key, &e))?
            }
            "threads" => cfg.threads = serde_json::from_value::<Threads>(value).map_err(|e| bad(&key, &e))?,
            _ => return Err(bad(&key, &"unknown option")),
        }
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Per-sample scores as columns, rows in ascending id order.
fn score_table<'py>(
    py: Python<'py>,
    ds: &Dataset,
    scored: &[ScoredSample],
    selected: Option<&[u64]>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rows: Vec<&ScoredSample> = scored.iter().collect();
    rows.sort_by_key(|s| s.id);
    let table = PyDict::new(py);
    table.set_item("sample_id", rows.iter().map(|s| s.id).collect::<Vec<_>>())?;
    table.set_item(
        "task",
        rows.iter()
            .map(|s| ds.tasks[s.task_id as usize].as_str())
            .collect::<Vec<_>>(),
    )?;
    table.set_item("rounds", rows.iter().map(|s| s.rounds).collect::<Vec<_>>())?;
    table.set_item("cluster_id", rows.iter().map(|s| s.cluster_id).collect::<Vec<_>>())?;
    table.set_item("v_inf_raw", rows.iter().map(|s| s.v_inf_raw).collect::<Vec<_>>())?;
    table.set_item("v_inf", rows.iter().map(|s| s.v_inf).collect::<Vec<_>>())?;
    table.set_item("v_uni", rows.iter().map(|s| s.v_uni).collect::<Vec<_>>())?;
    table.set_item("v_rep", rows.iter().map(|s| s.v_rep).collect::<Vec<_>>())?;
    table.set_item("v_synergy", rows.iter().map(|s| s.v_synergy).collect::<Vec<_>>())?;
    if let Some(sel) = selected {
        // `sel` is sorted ascending
        let flags: Vec<bool> = rows.iter().map(|s| sel.binary_search(&s.id).is_ok()).collect();
        table.set_item("selected", flags)?;
    }
    Ok(table)
}

fn metrics_dict<'py>(py: Python<'py>, size: usize, m: &PrincipleMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("size", size)?;
    d.set_item("mean_informativeness", m.mean_informativeness)?;
    d.set_item("uniqueness_proxy", m.uniqueness_proxy)?;
    d.set_item("representativeness_proxy", m.representativeness_proxy)?;
    d.set_item("cluster_coverage", m.cluster_coverage)?;
    Ok(d)
}

/// Runs the full selection. Returns `{"selected", "scores", "plan"}`.
#[pyfunction]
#[pyo3(signature = (dataset, k=DEFAULT_K, lambda_=DEFAULT_LAMBDA, options=None))]
pub fn select<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    k: f64,
    lambda_: f64,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(k, lambda_, options)?;
    let ds = Arc::clone(&dataset.inner);
    let result = py.detach(|| selection::select(&ds, &cfg)).map_err(to_py)?;

    let plan = PyList::empty(py);
    for t in &result.plan.tasks {
        let entry = PyDict::new(py);
        entry.set_item("task", &ds.tasks[t.task])?;
        entry.set_item("x_p", t.x_p)?;
        entry.set_item("size", t.size)?;
        entry.set_item("k_p", t.k_p)?;
        entry.set_item("count", t.count)?;
        plan.append(entry)?;
    }
    let out = PyDict::new(py);
    out.set_item("selected", &result.selected)?;
    out.set_item("scores", score_table(py, &ds, &result.scored, Some(&result.selected))?)?;
    out.set_item("plan", plan)?;
    Ok(out)
}

/// Scores every sample without selecting.
#[pyfunction]
#[pyo3(signature = (dataset, k=DEFAULT_K, lambda_=DEFAULT_LAMBDA, options=None))]
pub fn score<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    k: f64,
    lambda_: f64,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(k, lambda_, options)?;
    let ds = Arc::clone(&dataset.inner);
    let scores = py.detach(|| selection::score(&ds, &cfg)).map_err(to_py)?;
    score_table(py, &ds, &scores.scored, None)
}

/// Principle metrics of a subset given by sample id.
#[pyfunction]
#[pyo3(signature = (dataset, ids, lambda_=DEFAULT_LAMBDA, options=None))]
pub fn evaluate<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    ids: Vec<u64>,
    lambda_: f64,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(DEFAULT_K, lambda_, options)?;
    let ds = Arc::clone(&dataset.inner);
    let metrics = py
        .detach(|| {
            let scores = selection::score(&ds, &cfg)?;
            selection::evaluate_subset(&ds, &ids, &scores.clusters)
        })
        .map_err(to_py)?;
    let mut distinct = ids;
    distinct.sort_unstable();
    distinct.dedup();
    metrics_dict(py, distinct.len(), &metrics)
}

#[pymodule]
fn datatailor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DataTailorError", m.py().get_type::<DataTailorError>())?;
    m.add("DEFAULT_K", DEFAULT_K)?;
    m.add("DEFAULT_LAMBDA", DEFAULT_LAMBDA)?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(load, m)?)?;
    m.add_function(wrap_pyfunction!(from_arrays, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
