//! Python bindings. Structured results cross the boundary as JSON and are
//! decoded with the standard `json` module, so they arrive as plain dicts
//! and lists.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use sparql_session::analytics;
use sparql_session::hypergraph::{query_ged as ged_rs, GedOptions};
use sparql_session::intent::{HmmModel as Model, ObservationSymbol};
use sparql_session::reformulation::{diff_pair, pair_events as events_rs, ReformulationEvent};
use sparql_session::report::{run_pipeline as run_rs, PipelineConfig};
use sparql_session::sparql::{self, QueryAst};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse(q: &str) -> PyResult<QueryAst> {
    sparql::parse(q).map_err(value_err)
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn symbols(os: Vec<String>) -> PyResult<Vec<ObservationSymbol>> {
    os.iter().map(|s| s.parse().map_err(value_err)).collect()
}

/// Raises ValueError with the byte offset when the query does not parse.
#[pyfunction]
fn check_query(query: &str) -> PyResult<()> {
    parse(query).map(|_| ())
}

#[pyfunction]
fn operator_inventory(query: &str) -> PyResult<Vec<(String, usize)>> {
    let inv = sparql::operator_inventory(&parse(query)?);
    Ok(inv.into_iter().map(|(t, n)| (t.to_string(), n)).collect())
}

#[pyfunction]
fn query_template(query: &str) -> PyResult<String> {
    Ok(sparql::template_of(&parse(query)?).canonical_text)
}

#[pyfunction]
fn feature_vector(query: &str) -> PyResult<Vec<f64>> {
    Ok(analytics::feature_vector(&parse(query)?).0.to_vec())
}

/// Normalized GED between two queries and whether it is exact.
#[pyfunction]
#[pyo3(signature = (q1, q2, exact_size_limit = 8, time_budget_ms = 2000))]
fn query_ged(q1: &str, q2: &str, exact_size_limit: usize, time_budget_ms: u64) -> PyResult<(f64, bool)> {
    let opts = GedOptions {
        exact_size_limit,
        time_budget: Duration::from_millis(time_budget_ms),
    };
    let r = ged_rs(&parse(q1)?, &parse(q2)?, &opts);
    Ok((r.value, r.exact))
}

#[pyfunction]
fn cosine(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    analytics::cosine(&a, &b).map_err(value_err)
}

#[pyfunction]
fn kl_divergence(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    analytics::kl_divergence(&a, &b).map_err(value_err)
}

/// Reformulation events from `q1` to `q2`, as event dicts of pair 0.
#[pyfunction]
fn diff_queries<'py>(py: Python<'py>, q1: &str, q2: &str) -> PyResult<Bound<'py, PyAny>> {
    let events: Vec<ReformulationEvent> = diff_pair(&parse(q1)?, &parse(q2)?)
        .into_iter()
        .map(|change| ReformulationEvent {
            session: String::new(),
            pair: 0,
            change,
        })
        .collect();
    to_py(py, &events)
}

#[pyfunction]
fn pair_events<'py>(py: Python<'py>, session: &str, queries: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let asts = queries.iter().map(|q| parse(q)).collect::<PyResult<Vec<_>>>()?;
    to_py(py, &events_rs(session, &asts))
}

/// Runs every stage with a JSON configuration and returns the report.
#[pyfunction]
fn run_pipeline<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = PipelineConfig::from_json(config_json).map_err(value_err)?;
    let bundle = py.detach(|| run_rs(&cfg)).map_err(value_err)?;
    to_py(py, &bundle)
}

#[pyclass(frozen)]
struct HmmModel {
    inner: Model,
}

#[pymethods]
impl HmmModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Model::from_json(text)
            .map(|inner| HmmModel { inner })
            .map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn forward(&self, observations: Vec<String>) -> PyResult<f64> {
        self.inner.forward(&symbols(observations)?).map_err(value_err)
    }

    /// Viterbi path as -1/0/1 values, with its probability.
    fn decode(&self, observations: Vec<String>) -> PyResult<(Vec<i8>, f64)> {
        let d = self.inner.decode(&symbols(observations)?).map_err(value_err)?;
        Ok((d.path.iter().map(|s| s.value()).collect(), d.probability))
    }

    fn suggest(&self, observations: Vec<String>) -> PyResult<Vec<(String, f64)>> {
        let s = self.inner.suggest(&symbols(observations)?).map_err(value_err)?;
        Ok(s.into_iter().map(|x| (x.symbol.to_string(), x.score)).collect())
    }

    #[getter]
    fn symbols(&self) -> Vec<String> {
        self.inner.symbols.iter().map(|s| s.to_string()).collect()
    }
}

#[pymodule]
#[pyo3(name = "sparql_session")]
fn sparql_session_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check_query, m)?)?;
    m.add_function(wrap_pyfunction!(operator_inventory, m)?)?;
    m.add_function(wrap_pyfunction!(query_template, m)?)?;
    m.add_function(wrap_pyfunction!(feature_vector, m)?)?;
    m.add_function(wrap_pyfunction!(query_ged, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(diff_queries, m)?)?;
    m.add_function(wrap_pyfunction!(pair_events, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_class::<HmmModel>()?;
    Ok(())
}
