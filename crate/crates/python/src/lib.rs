//! Python bindings for `occuprof`.
//!
//! Build with `cargo build --release -p occuprof-python --features extension-module`
//! and copy `target/release/liboccuprof_py.so` to `occuprof.so` on the
//! Python path; see `python/smoke_test.py`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;

use ::occuprof::classify::{
    ClassifierKind, ClassifierParams, ForestParams, Model as CoreModel, ModelFile,
};
use ::occuprof::corpus::{
    self, Label, TermCounts, TokenizedDocument, Vocabulary as CoreVocabulary,
};
use ::occuprof::docrep::{self, FeatureKind, FeatureVector, Values};
use ::occuprof::embeddings::{self, EmbeddingMatrix, TrainConfig};
use ::occuprof::error::Error;
use ::occuprof::eval::{self, ComparisonOptions, Configuration};
use ::occuprof::linker::{self, CandidateList, ProfileRecord};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::OutOfVocabulary(_) | Error::DanglingId(_) => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_label(s: &str) -> PyResult<Label> {
    match s {
        "IT" => Ok(Label::It),
        "NON_IT" => Ok(Label::NonIt),
        _ => Err(PyValueError::new_err(format!(
            "label must be IT or NON_IT, got {s:?}"
        ))),
    }
}

fn documents(docs: Vec<Vec<String>>) -> Vec<TokenizedDocument> {
    docs.into_iter()
        .enumerate()
        .map(|(i, tokens)| TokenizedDocument {
            user_id: i.to_string(),
            tokens,
            label: None,
        })
        .collect()
}

/// Lowercased terms of a tweet, with URLs dropped and mentions replaced.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

type TimelineRow = (String, Option<String>, Vec<String>);

/// Reads a timeline JSONL file into `(user_id, label, tokens)` triples.
#[pyfunction]
fn read_timelines(path: PathBuf) -> PyResult<Vec<TimelineRow>> {
    let docs = corpus::read_documents(&path).map_err(to_py)?;
    Ok(docs
        .into_iter()
        .map(|d| (d.user_id, d.label.map(|l| l.as_str().to_string()), d.tokens))
        .collect())
}

#[pyclass(frozen, module = "occuprof")]
struct Vocabulary {
    inner: CoreVocabulary,
}

#[pymethods]
impl Vocabulary {
    #[staticmethod]
    #[pyo3(signature = (docs, min_count = 1))]
    fn build(docs: Vec<Vec<String>>, min_count: u64) -> PyResult<Self> {
        let docs = documents(docs);
        let inner = TermCounts::from_docs(&docs)
            .into_vocabulary(min_count)
            .map_err(to_py)?;
        Ok(Vocabulary { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Vocabulary {
            inner: CoreVocabulary::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn top_k(&self, k: usize) -> Self {
        Vocabulary {
            inner: self.inner.top_k(k),
        }
    }

    fn terms(&self) -> Vec<(String, u64)> {
        self.inner.terms().to_vec()
    }

    fn ordinal(&self, term: &str) -> Option<usize> {
        self.inner.ordinal(term)
    }

    fn featurize(&self, tokens: Vec<String>) -> Vec<usize> {
        let doc = TokenizedDocument {
            user_id: String::new(),
            tokens,
            label: None,
        };
        match docrep::bow_featurize(&doc, &self.inner).values {
            Values::Sparse(ix) => ix,
            Values::Dense(_) => unreachable!("bag of words is sparse"),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Vocabulary({} terms)", self.inner.len())
    }
}

#[pyclass(frozen, module = "occuprof")]
struct Embeddings {
    inner: EmbeddingMatrix,
}

#[pymethods]
impl Embeddings {
    /// Trains skip-gram vectors with negative sampling on tokenized
    /// documents. `workers=1` is reproducible bit for bit.
    #[staticmethod]
    #[pyo3(signature = (
        docs, *, min_count = 5, dim = 200, window = 5, negatives = 5, epochs = 5,
        lr_start = 0.025, subsample_t = 1e-3, seed = 1, workers = 1
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        docs: Vec<Vec<String>>,
        min_count: u64,
        dim: usize,
        window: usize,
        negatives: usize,
        epochs: usize,
        lr_start: f64,
        subsample_t: f64,
        seed: u64,
        workers: usize,
    ) -> PyResult<Self> {
        let docs = documents(docs);
        let vocab = TermCounts::from_docs(&docs)
            .into_vocabulary(min_count)
            .map_err(to_py)?;
        let cfg = TrainConfig {
            dim,
            window,
            negatives,
            epochs,
            lr_start,
            lr_min: lr_start * 1e-4,
            subsample_t,
            seed,
            workers,
        };
        let inner = py
            .detach(|| embeddings::train(&docs, &vocab, &cfg))
            .map_err(to_py)?;
        Ok(Embeddings { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Embeddings {
            inner: EmbeddingMatrix::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn terms(&self) -> Vec<String> {
        self.inner
            .vocab()
            .terms()
            .iter()
            .map(|(t, _)| t.clone())
            .collect()
    }

    fn vector(&self, term: &str) -> PyResult<Vec<f64>> {
        self.inner
            .vector(term)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| to_py(Error::OutOfVocabulary(term.to_string())))
    }

    #[pyo3(signature = (term, k = 10))]
    fn nearest(&self, term: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        embeddings::nearest(term, &self.inner, k).map_err(to_py)
    }

    /// Terms closest to `b - a + c`.
    #[pyo3(signature = (a, b, c, k = 10))]
    fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        embeddings::analogy(a, b, c, &self.inner, k).map_err(to_py)
    }

    /// Mean of the in-vocabulary word vectors; `None` if every token is
    /// out of vocabulary.
    fn embed_mean(&self, tokens: Vec<String>) -> Option<Vec<f64>> {
        let doc = TokenizedDocument {
            user_id: String::new(),
            tokens,
            label: None,
        };
        let fv = docrep::embed_mean(&doc, &self.inner);
        (!fv.all_oov).then(|| fv.to_dense())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Embeddings({} terms, dim {})",
            self.inner.len(),
            self.inner.dim()
        )
    }
}

/// Lloyd's k-means with k-means++ seeding. Returns
/// `(centroids, inertia, inertia_history)`.
#[pyfunction]
#[pyo3(signature = (points, k, max_iters = 100, seed = 1))]
fn kmeans(
    py: Python<'_>,
    points: Vec<Vec<f64>>,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, f64, Vec<f64>)> {
    let cb = py
        .detach(|| docrep::kmeans_fit(&points, k, max_iters, seed))
        .map_err(to_py)?;
    Ok((cb.centroids, cb.inertia, cb.history))
}

/// A trained classifier. Dense rows feed the Gaussian naive Bayes and the
/// forest; Bernoulli naive Bayes takes lists of present feature indices and
/// needs `dim`.
#[pyclass(frozen, module = "occuprof")]
struct Model {
    inner: ModelFile,
}

fn dense_rows(rows: Vec<Vec<f64>>) -> Vec<FeatureVector> {
    rows.into_iter()
        .map(|r| FeatureVector {
            kind: FeatureKind::EmbMean,
            dim: r.len(),
            values: Values::Dense(r),
            all_oov: false,
        })
        .collect()
}

fn sparse_row(ix: Vec<usize>, dim: usize) -> FeatureVector {
    FeatureVector {
        kind: FeatureKind::BowBinary,
        dim,
        values: Values::Sparse(ix),
        all_oov: false,
    }
}

impl Model {
    fn row(&self, x: &Bound<'_, PyAny>) -> PyResult<FeatureVector> {
        match &self.inner.model {
            CoreModel::BernoulliNb(nb) => {
                let mut ix: Vec<usize> = x.extract()?;
                ix.sort_unstable();
                ix.dedup();
                Ok(sparse_row(ix, nb.dim()))
            }
            _ => Ok(dense_rows(vec![x.extract()?]).remove(0)),
        }
    }
}

#[pymethods]
impl Model {
    /// `kind` is `bnb`, `gnb` or `rf`; labels are `"IT"` / `"NON_IT"`.
    #[staticmethod]
    #[pyo3(signature = (
        kind, x, labels, *, dim = None, alpha = 1.0, var_floor = None, n_trees = 100,
        max_depth = None, min_leaf = 1, features_per_split = None, seed = 1
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        kind: &str,
        x: &Bound<'_, PyAny>,
        labels: Vec<String>,
        dim: Option<usize>,
        alpha: f64,
        var_floor: Option<f64>,
        n_trees: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
        features_per_split: Option<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let kind = ClassifierKind::parse(kind)
            .ok_or_else(|| PyValueError::new_err(format!("unknown classifier {kind:?}")))?;
        let y = labels
            .iter()
            .map(|s| parse_label(s))
            .collect::<PyResult<Vec<_>>>()?;
        let (rows, features) = if kind == ClassifierKind::BernoulliNb {
            let dim = dim.ok_or_else(|| PyValueError::new_err("bnb needs dim"))?;
            let sparse: Vec<Vec<usize>> = x.extract()?;
            let rows = sparse
                .into_iter()
                .map(|mut ix| {
                    ix.sort_unstable();
                    ix.dedup();
                    sparse_row(ix, dim)
                })
                .collect();
            (rows, FeatureKind::BowBinary)
        } else {
            (dense_rows(x.extract()?), FeatureKind::EmbMean)
        };
        let params = ClassifierParams {
            alpha,
            var_floor,
            forest: ForestParams {
                n_trees,
                max_depth,
                min_leaf,
                features_per_split,
            },
            seed,
        };
        let model = py
            .detach(|| CoreModel::train(kind, &rows, &y, &params))
            .map_err(to_py)?;
        Ok(Model {
            inner: ModelFile::new(model, Some(features)),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model {
            inner: ModelFile::load(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: ModelFile::from_json(text).map_err(PyValueError::new_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.model.kind().as_str()
    }

    /// Returns `(label, it_score)`.
    fn predict(&self, x: &Bound<'_, PyAny>) -> PyResult<(String, f64)> {
        let p = self.inner.model.predict(&self.row(x)?).map_err(to_py)?;
        Ok((p.label.as_str().to_string(), p.it_score))
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.kind())
    }
}

/// Confusion counts and precision / recall / F1 with `IT` as the positive
/// class.
#[pyfunction]
fn metrics(predicted: Vec<String>, gold: Vec<String>) -> PyResult<BTreeMap<&'static str, f64>> {
    let p = predicted
        .iter()
        .map(|s| parse_label(s))
        .collect::<PyResult<Vec<_>>>()?;
    let g = gold
        .iter()
        .map(|s| parse_label(s))
        .collect::<PyResult<Vec<_>>>()?;
    let m = eval::metrics(&p, &g).map_err(to_py)?;
    Ok(BTreeMap::from([
        ("tp", m.tp as f64),
        ("fp", m.fp as f64),
        ("fn", m.fn_ as f64),
        ("tn", m.tn as f64),
        ("precision", m.precision),
        ("recall", m.recall),
        ("f1", m.f1),
    ]))
}

/// Runs the representation / classifier comparison on a labeled timeline
/// file. Returns `(table, json)`.
#[pyfunction]
#[pyo3(signature = (
    path, embeddings = None, configs = None, *, train_fraction = 0.8, bow_k = 5000,
    cluster_k = 50, n_trees = 100, seed = 1
))]
#[allow(clippy::too_many_arguments)]
fn compare(
    py: Python<'_>,
    path: PathBuf,
    embeddings: Option<&Embeddings>,
    configs: Option<Vec<String>>,
    train_fraction: f64,
    bow_k: usize,
    cluster_k: usize,
    n_trees: usize,
    seed: u64,
) -> PyResult<(String, String)> {
    let docs = corpus::read_documents(&path).map_err(to_py)?;
    let configs = match configs {
        None => eval::standard_configurations(),
        Some(cs) => cs
            .iter()
            .map(|c| {
                Configuration::parse(c)
                    .ok_or_else(|| PyValueError::new_err(format!("bad configuration {c:?}")))
            })
            .collect::<PyResult<_>>()?,
    };
    let mut opts = ComparisonOptions {
        bow_k,
        cluster_k,
        seed,
        ..ComparisonOptions::default()
    };
    opts.split.train_fraction = train_fraction;
    opts.split.seed = seed;
    opts.classifier.forest.n_trees = n_trees;
    let m = embeddings.map(|e| &e.inner);
    let report = py
        .detach(|| eval::run_comparison(&docs, m, &configs, &opts))
        .map_err(to_py)?;
    Ok((report.to_table(), report.to_json()))
}

/// Token-set Jaccard similarity of two descriptions.
#[pyfunction]
fn jaccard(a: &str, b: &str) -> f64 {
    linker::jaccard(a, b)
}

/// Scores candidate pairs and accepts at most the best candidate per
/// professional profile. Profiles are `(record_id, description)` pairs;
/// candidates map professional ids to social ids. Returns
/// `(professional_id, social_id, score, accepted)` rows.
#[pyfunction]
#[pyo3(signature = (professional, social, candidates, threshold = linker::DEFAULT_THRESHOLD))]
fn match_profiles(
    professional: Vec<(String, String)>,
    social: Vec<(String, String)>,
    candidates: BTreeMap<String, Vec<String>>,
    threshold: f64,
) -> PyResult<Vec<(String, String, f64, bool)>> {
    let records = |v: Vec<(String, String)>| -> Vec<ProfileRecord> {
        v.into_iter()
            .map(|(record_id, description)| ProfileRecord {
                record_id,
                source: None,
                name: String::new(),
                description,
            })
            .collect()
    };
    let candidates: Vec<CandidateList> = candidates
        .into_iter()
        .map(|(professional_id, social_ids)| CandidateList {
            professional_id,
            social_ids,
        })
        .collect();
    let rows = linker::match_profiles(
        &records(professional),
        &records(social),
        &candidates,
        threshold,
    )
    .map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.professional_id, r.social_id, r.score, r.accepted))
        .collect())
}

#[pymodule]
fn occuprof(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Vocabulary>()?;
    m.add_class::<Embeddings>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(read_timelines, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard, m)?)?;
    m.add_function(wrap_pyfunction!(match_profiles, m)?)?;
    Ok(())
}
