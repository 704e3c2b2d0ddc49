//! Python bindings: graph queries, cascade simulation, the embedding file
//! format and the synthetic corpus generator.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use amplifier_core::cascade::{self, EdgeProbabilityMap, ProbabilityMode};
use amplifier_core::dataio::synthetic::{generate_synthetic, SyntheticParams};
use amplifier_core::dataio::{self, EmbeddingTable};
use amplifier_core::graph::{SocialGraph, UserId};
use amplifier_core::{experiments, rng, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Follow graph over users `0..user_count`. Spread runs followee -> follower.
#[pyclass(frozen, name = "Graph")]
struct PyGraph {
    inner: SocialGraph,
}

impl PyGraph {
    fn probabilities(&self, p: Option<f64>, probabilities: Option<Vec<f64>>) -> PyResult<EdgeProbabilityMap> {
        match (p, probabilities) {
            (Some(_), Some(_)) => Err(PyValueError::new_err("give either p or probabilities, not both")),
            (Some(p), None) => EdgeProbabilityMap::fixed(&self.inner, p).map_err(to_py),
            (None, Some(v)) => EdgeProbabilityMap::new(ProbabilityMode::Learned, v).map_err(to_py),
            (None, None) => Ok(EdgeProbabilityMap::inverse_degree(&self.inner)),
        }
    }
}

#[pymethods]
impl PyGraph {
    /// `follows` holds `(follower, followee)` pairs; duplicates and self loops are dropped.
    #[new]
    fn new(follows: Vec<(UserId, UserId)>, user_count: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SocialGraph::build(&follows, user_count).map_err(to_py)?,
        })
    }

    #[getter]
    fn user_count(&self) -> usize {
        self.inner.user_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn followers(&self, user: UserId) -> PyResult<Vec<UserId>> {
        if !self.inner.contains(user) {
            return Err(to_py(Error::UnknownUser(user)));
        }
        Ok(self.inner.followers(user).to_vec())
    }

    /// `(source, target)` pairs in the order `probabilities` arguments use.
    fn spread_edges(&self) -> Vec<(UserId, UserId)> {
        self.inner.spread_edges().collect()
    }

    fn neighborhood(&self, user: UserId, hops: usize) -> PyResult<Vec<UserId>> {
        self.inner.neighborhood(user, hops).map_err(to_py)
    }

    fn importance_scores(&self, creator: UserId, hops: usize) -> PyResult<Vec<(UserId, f64)>> {
        Ok(self.inner.importance_scores(creator, hops).map_err(to_py)?.entries().to_vec())
    }

    #[pyo3(signature = (creator, hops, k, seed))]
    fn softmax_sample(&self, creator: UserId, hops: usize, k: usize, seed: u64) -> PyResult<Vec<UserId>> {
        let scores = self.inner.importance_scores(creator, hops).map_err(to_py)?;
        scores.softmax_sample(k, &mut rng::seeded(seed)).map_err(to_py)
    }

    /// Monte-Carlo spread from `source` as `(mean, standard_error)`.
    /// Without `p` or `probabilities` edges use inverse in-degree.
    #[pyo3(signature = (source, rounds=cascade::DEFAULT_ROUNDS, seed=0, p=None, probabilities=None))]
    fn influence_spread(
        &self,
        py: Python<'_>,
        source: UserId,
        rounds: usize,
        seed: u64,
        p: Option<f64>,
        probabilities: Option<Vec<f64>>,
    ) -> PyResult<(f64, f64)> {
        let probs = self.probabilities(p, probabilities)?;
        let result = py
            .detach(|| cascade::influence_spread(&self.inner, &probs, source, rounds, seed))
            .map_err(to_py)?;
        Ok((result.spread, result.standard_error()))
    }

    /// Expected spread by enumeration; only for small reachable edge sets.
    #[pyo3(signature = (source, p=None, probabilities=None))]
    fn exact_influence(&self, source: UserId, p: Option<f64>, probabilities: Option<Vec<f64>>) -> PyResult<f64> {
        let probs = self.probabilities(p, probabilities)?;
        cascade::exact_influence(&self.inner, &probs, source).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Graph(users={}, edges={})", self.inner.user_count(), self.inner.edge_count())
    }
}

/// Rows of an embedding file; `dim` rejects files of another width.
#[pyfunction]
#[pyo3(signature = (path, dim=None))]
fn read_embeddings(path: PathBuf, dim: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let table = dataio::read_embeddings_with_dim(&path, dim).map_err(to_py)?;
    Ok(table.rows().map(<[f64]>::to_vec).collect())
}

#[pyfunction]
fn write_embeddings(path: PathBuf, rows: Vec<Vec<f64>>) -> PyResult<()> {
    let dim = rows.first().map_or(0, Vec::len);
    let table = EmbeddingTable::from_rows(dim, &rows).map_err(to_py)?;
    dataio::write_embeddings(&path, &table).map_err(to_py)
}

/// Post texts of a `posts.tsv` table in post-id order.
#[pyfunction]
fn read_post_texts(path: PathBuf) -> PyResult<Vec<String>> {
    Ok(dataio::read_posts(&path).map_err(to_py)?.into_iter().map(|p| p.text).collect())
}

#[pyfunction]
fn relative_gain(old: f64, new: f64) -> f64 {
    experiments::relative_gain(old, new)
}

#[pyfunction]
fn format_gain(gain: f64) -> String {
    experiments::format_gain(gain)
}

/// Writes a synthetic corpus directory and returns `(users, edges, posts)`.
#[pyfunction]
#[pyo3(signature = (out, users=None, posts=None, seed=None))]
fn synth(py: Python<'_>, out: PathBuf, users: Option<usize>, posts: Option<usize>, seed: Option<u64>) -> PyResult<(usize, usize, usize)> {
    let defaults = SyntheticParams::default();
    let params = SyntheticParams {
        users: users.unwrap_or(defaults.users),
        posts: posts.unwrap_or(defaults.posts),
        seed: seed.unwrap_or(defaults.seed),
        ..defaults
    };
    py.detach(|| {
        let s = generate_synthetic(&params)?;
        s.save(&out)?;
        Ok((s.corpus.graph.user_count(), s.corpus.graph.edge_count(), s.corpus.posts.len()))
    })
    .map_err(to_py)
}

#[pymodule]
fn amplifier(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add("CONTENT_DIM", amplifier_core::estimator::CONTENT_DIM)?;
    m.add_function(wrap_pyfunction!(read_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(write_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(read_post_texts, m)?)?;
    m.add_function(wrap_pyfunction!(relative_gain, m)?)?;
    m.add_function(wrap_pyfunction!(format_gain, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    Ok(())
}
