//! Python bindings: the `edurec` extension module.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use edurec_core::datagen::{generate_synthetic, GeneratorConfig};
use edurec_core::gnn::{self, build_view, Embeddings, FeatureConfig, GcnModel, Optimizer, TrainConfig};
use edurec_core::groups::{form_groups, group_report};
use edurec_core::io::{self, IngestError, IngestOptions};
use edurec_core::stats::{self, AssociationParams, IndicatorScenario, PreferenceDimension};
use edurec_core::{HeteroGraph, NodeKind};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ingest_err(e: IngestError) -> PyErr {
    match e {
        IngestError::FileNotFound(_) | IngestError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn gnn_err(e: gnn::GnnError) -> PyErr {
    match e {
        gnn::GnnError::UnknownNode(_) => PyKeyError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

/// A frozen student/course/teacher knowledge graph.
#[pyclass(name = "Graph", module = "edurec", frozen)]
struct PyGraph {
    inner: HeteroGraph,
}

#[pymethods]
impl PyGraph {
    /// Synthetic graph; keyword names follow the CLI flags.
    #[staticmethod]
    #[pyo3(signature = (
        students=1000, courses=None, teachers=None, schools=None, categories=32, majors=None,
        min_courses=20, max_courses=45, pref_strength=0.5, coupling=0.5, seed=0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        students: usize,
        courses: Option<usize>,
        teachers: Option<usize>,
        schools: Option<usize>,
        categories: usize,
        majors: Option<usize>,
        min_courses: usize,
        max_courses: usize,
        pref_strength: f64,
        coupling: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let d = GeneratorConfig::default();
        let scale = |x: usize| (x * students).div_ceil(d.n_students).max(1);
        let cfg = GeneratorConfig {
            n_students: students,
            n_courses: courses.unwrap_or_else(|| scale(d.n_courses)),
            n_teachers: teachers.unwrap_or_else(|| scale(d.n_teachers)),
            n_schools: schools.unwrap_or_else(|| scale(d.n_schools)),
            n_categories: categories,
            n_majors: majors.unwrap_or_else(|| scale(d.n_majors)),
            courses_per_student: (min_courses, max_courses),
            preference_strength: pref_strength,
            engagement_coupling: coupling,
            seed,
            ..d
        };
        Ok(PyGraph { inner: generate_synthetic(&cfg).map_err(value_err)? })
    }

    /// Loads a directory holding nodes.jsonl and edges.jsonl, or a .graphml file.
    #[staticmethod]
    #[pyo3(signature = (path, max_violations=0))]
    fn load(path: PathBuf, max_violations: usize) -> PyResult<Self> {
        let opts = IngestOptions { max_malformed: max_violations };
        let (graph, report) = if path.is_file() {
            io::read_graphml(&path, opts)
        } else {
            io::load_jsonl(&path.join("nodes.jsonl"), &path.join("edges.jsonl"), opts)
        }
        .map_err(ingest_err)?;
        let problems = report.malformed.len() + report.violations.len();
        if problems > max_violations {
            return Err(value_err(format!("{problems} schema problems exceed max_violations {max_violations}")));
        }
        Ok(PyGraph { inner: graph })
    }

    /// Writes nodes.jsonl and edges.jsonl into `dir`.
    fn save_jsonl(&self, dir: PathBuf) -> PyResult<()> {
        std::fs::create_dir_all(&dir)?;
        io::write_jsonl(&self.inner, &dir.join("nodes.jsonl"), &dir.join("edges.jsonl")).map_err(ingest_err)?;
        Ok(())
    }

    fn export_graphml(&self, path: PathBuf) -> PyResult<()> {
        io::export_graphml(&self.inner, &path).map_err(ingest_err)?;
        Ok(())
    }

    /// `{"nodes": {kind: n}, "edges": {kind: n}}`.
    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.counts_by_kind())
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// Ids of nodes of one kind, e.g. `"Student"`.
    fn ids(&self, kind: &str) -> PyResult<Vec<String>> {
        let kind: NodeKind = parse("kind", kind)?;
        Ok(self.inner.nodes_of_kind(kind).map(|n| n.id.clone()).collect())
    }

    /// One string per schema violation; empty for a clean graph.
    fn schema_validate(&self) -> Vec<String> {
        self.inner
            .schema_validate()
            .into_iter()
            .map(|v| format!("{:?} on {}: {}", v.rule, v.subject, v.detail))
            .collect()
    }

    #[pyo3(signature = (min_courses=stats::DEFAULT_MIN_COURSES))]
    fn eligible_students(&self, min_courses: usize) -> Vec<String> {
        stats::eligible_students(&self.inner, min_courses).into_iter().collect()
    }

    /// Terminal counts of one student along `dim` (category, school or teacher).
    fn preference_profile(&self, student: &str, dim: &str) -> PyResult<BTreeMap<String, usize>> {
        let dim: PreferenceDimension = parse("dim", dim)?;
        let profile = stats::preference_profile(&self.inner, student, dim).map_err(value_err)?;
        Ok(profile.counts)
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Trained two-layer GCN.
#[pyclass(name = "Model", module = "edurec", frozen)]
struct PyModel {
    inner: GcnModel,
    losses: Vec<f64>,
}

impl PyModel {
    fn with_embeddings<T>(&self, graph: &PyGraph, f: impl FnOnce(&Embeddings) -> PyResult<T>) -> PyResult<T> {
        let view = build_view(&graph.inner, self.inner.feature_config).map_err(gnn_err)?;
        let emb = Embeddings::new(&self.inner, &view).map_err(gnn_err)?;
        f(&emb)
    }
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (
        graph, epochs=200, lr=0.05, optimizer="adam", hidden=32, embed=16, random_dims=32, negatives=1, seed=0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        graph: &PyGraph,
        epochs: usize,
        lr: f64,
        optimizer: &str,
        hidden: usize,
        embed: usize,
        random_dims: usize,
        negatives: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let optimizer: Optimizer = parse("optimizer", optimizer)?;
        let config = TrainConfig {
            epochs,
            learning_rate: lr,
            optimizer,
            negatives,
            seed,
            hidden,
            embed,
        };
        config.validate().map_err(gnn_err)?;
        let features = FeatureConfig { random_dims, seed };
        let out = py
            .detach(|| {
                let view = build_view(&graph.inner, features)?;
                gnn::train(&view, &config)
            })
            .map_err(gnn_err)?;
        Ok(PyModel { inner: out.model, losses: out.losses })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = GcnModel::load(&path).map_err(gnn_err)?;
        Ok(PyModel { inner, losses: Vec::new() })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(gnn_err)
    }

    /// Mean training loss per epoch; empty for a loaded checkpoint.
    #[getter]
    fn losses(&self) -> Vec<f64> {
        self.losses.clone()
    }

    fn score(&self, graph: &PyGraph, student: &str, course: &str) -> PyResult<f64> {
        self.with_embeddings(graph, |e| e.score(student, course).map_err(gnn_err))
    }

    /// Top `top_n` unenrolled courses as `(course, score)` pairs.
    #[pyo3(signature = (graph, student, top_n=10))]
    fn recommend(&self, graph: &PyGraph, student: &str, top_n: usize) -> PyResult<Vec<(String, f64)>> {
        self.with_embeddings(graph, |e| {
            Ok(e.recommend(&graph.inner, student, top_n).map_err(gnn_err)?.ranked)
        })
    }

    #[pyo3(signature = (graph, kind="Student"))]
    fn embeddings(&self, graph: &PyGraph, kind: &str) -> PyResult<BTreeMap<String, Vec<f64>>> {
        let kind: NodeKind = parse("kind", kind)?;
        self.with_embeddings(graph, |e| Ok(e.by_kind(kind)))
    }

    /// Greedy study groups inside preference clusters of eligible students.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (graph, group_size=4, dim="category", k=3, min_courses=stats::DEFAULT_MIN_COURSES, seed=0))]
    fn groups<'py>(
        &self,
        py: Python<'py>,
        graph: &PyGraph,
        group_size: usize,
        dim: &str,
        k: usize,
        min_courses: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let dim: PreferenceDimension = parse("dim", dim)?;
        let eligible = stats::eligible_students(&graph.inner, min_courses);
        let (features, clusters) = stats::preference_clusters(&graph.inner, &eligible, dim, k, seed).map_err(value_err)?;
        let assignments: BTreeMap<String, usize> =
            features.students.iter().cloned().zip(clusters.assignments.iter().copied()).collect();
        let embeddings = self.with_embeddings(graph, |e| Ok(e.by_kind(NodeKind::Student)))?;
        let groups = form_groups(&assignments, &embeddings, group_size, seed).map_err(value_err)?;
        to_py(py, &group_report(&groups))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(in={}, hidden={}, embed={})",
            self.inner.in_dim(),
            self.inner.hidden_dim(),
            self.inner.embed_dim()
        )
    }
}

/// Preference/engagement association report for one dimension and scenario.
#[pyfunction]
#[pyo3(signature = (graph, dim="category", scenario="TT", k=3, seed=0, min_courses=stats::DEFAULT_MIN_COURSES, career=None))]
#[allow(clippy::too_many_arguments)]
fn associate<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    dim: &str,
    scenario: &str,
    k: usize,
    seed: u64,
    min_courses: usize,
    career: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let dim: PreferenceDimension = parse("dim", dim)?;
    let scenario: IndicatorScenario = parse("scenario", scenario)?;
    let params = AssociationParams { k, seed, min_courses };
    let a = match career {
        None => stats::preference_engagement_association(&graph.inner, dim, scenario, &params),
        Some(c) => stats::cohort_association(&graph.inner, c, dim, scenario, &params),
    }
    .map_err(value_err)?;
    let mut report = a.report();
    report.cohort = career.map(str::to_owned);
    to_py(py, &report)
}

/// Pearson chi-square test of independence on a contingency table.
#[pyfunction]
fn chi_square<'py>(py: Python<'py>, table: Vec<Vec<u64>>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &stats::chi_square_independence(&table).map_err(value_err)?)
}

#[pyfunction]
fn rand_index(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    stats::rand_index(&a, &b).map_err(value_err)
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::pearson(&x, &y).map_err(value_err)
}

/// k-means++ clustering; returns assignments, centroids, inertia and its trace.
#[pyfunction]
#[pyo3(signature = (points, k, seed=0))]
fn kmeans<'py>(py: Python<'py>, points: Vec<Vec<f64>>, k: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &stats::kmeans(&points, k, seed).map_err(value_err)?)
}

#[pymodule]
fn edurec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA_VERSION", edurec_core::SCHEMA_VERSION)?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(associate, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    Ok(())
}
