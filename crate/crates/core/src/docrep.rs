//! Document representations: binary bag-of-words, mean word vector and a
//! normalized histogram of word-vector cluster assignments.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, TokenizedDocument, Vocabulary};
use crate::embeddings::{read_vectors, write_vectors, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "BOW_BINARY")]
    BowBinary,
    #[serde(rename = "EMB_MEAN")]
    EmbMean,
    #[serde(rename = "CLUSTER_HIST")]
    ClusterHist,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::BowBinary => "bow",
            FeatureKind::EmbMean => "emb_mean",
            FeatureKind::ClusterHist => "cluster_hist",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        match s.to_ascii_lowercase().as_str() {
            "bow" | "bow_binary" => Some(FeatureKind::BowBinary),
            "emb_mean" => Some(FeatureKind::EmbMean),
            "cluster_hist" => Some(FeatureKind::ClusterHist),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    /// Sorted indices whose value is 1.
    Sparse(Vec<usize>),
    Dense(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: Values,
    pub dim: usize,
    /// Set when no token of the document had a vector.
    pub all_oov: bool,
}

impl FeatureVector {
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.values {
            Values::Dense(v) => v.clone(),
            Values::Sparse(idx) => {
                let mut v = vec![0.0; self.dim];
                for &i in idx {
                    v[i] = 1.0;
                }
                v
            }
        }
    }

    pub fn sparse_indices(&self) -> Option<&[usize]> {
        match &self.values {
            Values::Sparse(idx) => Some(idx),
            Values::Dense(_) => None,
        }
    }

    pub fn dense(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Dense(v) => Some(v),
            Values::Sparse(_) => None,
        }
    }
}

/// Presence indicator for every feature term occurring in `doc`.
pub fn bow_featurize(doc: &TokenizedDocument, features: &Vocabulary) -> FeatureVector {
    let mut idx: Vec<usize> = doc
        .tokens
        .iter()
        .filter_map(|t| features.ordinal(t))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    FeatureVector {
        kind: FeatureKind::BowBinary,
        values: Values::Sparse(idx),
        dim: features.len(),
        all_oov: false,
    }
}

/// Mean of the input vectors of in-vocabulary tokens, counting repeats.
pub fn embed_mean(doc: &TokenizedDocument, m: &EmbeddingMatrix) -> FeatureVector {
    let mut sum = vec![0.0; m.dim()];
    let mut n = 0usize;
    for row in doc.tokens.iter().filter_map(|t| m.vector(t)) {
        for (s, x) in sum.iter_mut().zip(row) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        let n = n as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    FeatureVector {
        kind: FeatureKind::EmbMean,
        values: Values::Dense(sum),
        dim: m.dim(),
        all_oov: n == 0,
    }
}

/// KMeans centroids over an embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    /// Total squared distance of the points to their assigned centroids.
    pub inertia: f64,
    /// Inertia after every assignment step, starting with the seeding.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Codebook {
    /// Nearest centroid by Euclidean distance, ties to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(x, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let names: Vec<String> = (0..self.k).map(|i| format!("cluster{i}")).collect();
        write_vectors(
            &mut w,
            self.dim(),
            names.iter().map(String::as_str),
            self.centroids.iter().map(Vec::as_slice),
        )
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
    }

    /// Loads centroids; inertia is not part of the file and reads as 0.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let (_, centroids) = read_vectors(BufReader::new(file), path)?;
        if centroids.is_empty() {
            return Err(Error::parse(path, 1, "codebook has no centroids"));
        }
        Ok(Codebook {
            k: centroids.len(),
            centroids,
            inertia: 0.0,
            history: Vec::new(),
        })
    }
}

fn assign<P: AsRef<[f64]> + Sync>(points: &[P], cb: &Codebook) -> (Vec<usize>, Vec<f64>) {
    points.par_iter().map(|p| cb.nearest(p.as_ref())).unzip()
}

fn kmeans_pp<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].as_ref().to_vec()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p.as_ref(), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > r {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave r just above the final sum.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].as_ref().to_vec();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p.as_ref(), &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops at an assignment fixpoint or after `max_iters` update steps. A
/// cluster left empty by an update is moved onto the point farthest from its
/// own centroid.
pub fn kmeans_fit<P: AsRef<[f64]> + Sync>(
    points: &[P],
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Codebook> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            clusters: k,
        });
    }
    let dim = points[0].as_ref().len();
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.as_ref().len(),
        });
    }

    let mut rng = seed::rng(seed);
    let mut cb = Codebook {
        centroids: kmeans_pp(points, k, &mut rng),
        k,
        inertia: 0.0,
        history: Vec::new(),
    };
    let (mut labels, mut dists) = assign(points, &cb);
    cb.history.push(dists.iter().sum());

    for _ in 0..max_iters {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p.as_ref()) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                cb.centroids[j] = sums[j].iter().map(|s| s / n).collect();
            }
        }
        if counts.contains(&0) {
            for (i, p) in points.iter().enumerate() {
                dists[i] = sq_dist(p.as_ref(), &cb.centroids[labels[i]]);
            }
            for j in (0..k).filter(|&j| counts[j] == 0) {
                let (far, _) =
                    dists
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                            if d > best.1 {
                                (i, d)
                            } else {
                                best
                            }
                        });
                cb.centroids[j] = points[far].as_ref().to_vec();
                labels[far] = j;
                dists[far] = 0.0;
            }
        }

        let (next, next_d) = assign(points, &cb);
        let inertia: f64 = next_d.iter().sum();
        cb.history.push(inertia);
        let converged = next == labels;
        labels = next;
        if converged {
            break;
        }
    }
    cb.inertia = *cb.history.last().unwrap();
    Ok(cb)
}

/// Fits a codebook over every input vector of an embedding matrix.
pub fn fit_embedding_codebook(
    m: &EmbeddingMatrix,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Codebook> {
    let rows: Vec<&[f64]> = m.input_rows().collect();
    kmeans_fit(&rows, k, max_iters, seed)
}

/// Nearest-centroid index for each vocabulary ordinal.
pub fn assign_vocabulary(m: &EmbeddingMatrix, cb: &Codebook) -> Result<Vec<usize>> {
    if cb.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: cb.dim(),
        });
    }
    Ok(m.input_rows().map(|r| cb.nearest(r).0).collect())
}

fn histogram<I: Iterator<Item = usize>>(clusters: I, k: usize) -> FeatureVector {
    let mut hist = vec![0.0; k];
    let mut n = 0usize;
    for c in clusters {
        hist[c] += 1.0;
        n += 1;
    }
    if n > 0 {
        let n = n as f64;
        hist.iter_mut().for_each(|h| *h /= n);
    }
    FeatureVector {
        kind: FeatureKind::ClusterHist,
        values: Values::Dense(hist),
        dim: k,
        all_oov: n == 0,
    }
}

/// Normalized histogram of the nearest centroid of each in-vocabulary token.
pub fn cluster_histogram(
    doc: &TokenizedDocument,
    m: &EmbeddingMatrix,
    cb: &Codebook,
) -> FeatureVector {
    let mut cache: HashMap<usize, usize> = HashMap::new();
    let clusters = doc
        .tokens
        .iter()
        .filter_map(|t| m.vocab().ordinal(t))
        .map(|i| {
            *cache
                .entry(i)
                .or_insert_with(|| cb.nearest(m.input_row(i)).0)
        });
    histogram(clusters, cb.k)
}

/// [`cluster_histogram`] with word assignments precomputed by
/// [`assign_vocabulary`].
pub fn cluster_histogram_assigned(
    doc: &TokenizedDocument,
    vocab: &Vocabulary,
    assignments: &[usize],
    k: usize,
) -> FeatureVector {
    let clusters = doc
        .tokens
        .iter()
        .filter_map(|t| vocab.ordinal(t))
        .map(|i| assignments[i]);
    histogram(clusters, k)
}

/// Everything needed to featurize documents under one representation.
#[derive(Debug, Clone)]
pub enum Featurizer<'a> {
    Bow(Vocabulary),
    EmbMean(&'a EmbeddingMatrix),
    ClusterHist {
        embeddings: &'a EmbeddingMatrix,
        assignments: Vec<usize>,
        k: usize,
    },
}

impl<'a> Featurizer<'a> {
    pub fn cluster_hist(embeddings: &'a EmbeddingMatrix, cb: &Codebook) -> Result<Self> {
        Ok(Featurizer::ClusterHist {
            embeddings,
            assignments: assign_vocabulary(embeddings, cb)?,
            k: cb.k,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Featurizer::Bow(_) => FeatureKind::BowBinary,
            Featurizer::EmbMean(_) => FeatureKind::EmbMean,
            Featurizer::ClusterHist { .. } => FeatureKind::ClusterHist,
        }
    }

    pub fn featurize(&self, doc: &TokenizedDocument) -> FeatureVector {
        match self {
            Featurizer::Bow(v) => bow_featurize(doc, v),
            Featurizer::EmbMean(m) => embed_mean(doc, m),
            Featurizer::ClusterHist {
                embeddings,
                assignments,
                k,
            } => cluster_histogram_assigned(doc, embeddings.vocab(), assignments, *k),
        }
    }

    pub fn featurize_all(&self, docs: &[TokenizedDocument]) -> Vec<FeatureVector> {
        docs.par_iter().map(|d| self.featurize(d)).collect()
    }
}

/// One line of a feature JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub user_id: String,
    pub label: Option<Label>,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparse: Option<Vec<(usize, u8)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub all_oov: bool,
}

impl FeatureRecord {
    pub fn new(user_id: &str, label: Option<Label>, fv: &FeatureVector) -> Self {
        let (dense, sparse, dim) = match &fv.values {
            Values::Dense(v) => (Some(v.clone()), None, None),
            Values::Sparse(idx) => (
                None,
                Some(idx.iter().map(|&i| (i, 1)).collect()),
                Some(fv.dim),
            ),
        };
        FeatureRecord {
            user_id: user_id.to_string(),
            label,
            kind: fv.kind,
            dense,
            sparse,
            dim,
            all_oov: fv.all_oov,
        }
    }

    pub fn to_vector(&self) -> std::result::Result<FeatureVector, String> {
        match (&self.dense, &self.sparse) {
            (Some(d), None) => Ok(FeatureVector {
                kind: self.kind,
                dim: d.len(),
                values: Values::Dense(d.clone()),
                all_oov: self.all_oov,
            }),
            (None, Some(s)) => {
                let dim = self.dim.ok_or("sparse record without dim")?;
                let mut idx = Vec::with_capacity(s.len());
                for &(i, v) in s {
                    if v != 1 {
                        return Err(format!("sparse value must be 1, found {v}"));
                    }
                    if i >= dim {
                        return Err(format!("index {i} out of range for dim {dim}"));
                    }
                    idx.push(i);
                }
                idx.sort_unstable();
                idx.dedup();
                Ok(FeatureVector {
                    kind: self.kind,
                    dim,
                    values: Values::Sparse(idx),
                    all_oov: self.all_oov,
                })
            }
            _ => Err("record needs exactly one of `dense` or `sparse`".into()),
        }
    }
}

pub fn write_features(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("feature record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<(FeatureRecord, FeatureVector)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(path, i + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?;
        let fv = rec.to_vector().map_err(|e| Error::parse(path, i + 1, e))?;
        out.push((rec, fv));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(tokens: &[&str]) -> TokenizedDocument {
        TokenizedDocument {
            user_id: "u".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            label: None,
        }
    }

    fn vocab(terms: &[&str]) -> Vocabulary {
        let n = terms.len() as u64;
        Vocabulary::from_terms(
            terms
                .iter()
                .enumerate()
                .map(|(i, t)| (t.to_string(), n - i as u64))
                .collect(),
            1,
        )
        .unwrap()
    }

    fn matrix() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            vocab(&["w1", "w2", "w3"]),
            vec![
                vec![1.0, 2.0, 3.0],
                vec![-3.0, 0.5, 0.0],
                vec![0.0, 0.0, 10.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn bow_examples() {
        let f = vocab(&["a", "c"]);
        let fv = bow_featurize(&doc(&["a", "a", "b"]), &f);
        assert_eq!(fv.values, Values::Sparse(vec![0]));
        assert_eq!(fv.dim, 2);
        assert_eq!(bow_featurize(&doc(&[]), &f).values, Values::Sparse(vec![]));
        assert_eq!(
            bow_featurize(&doc(&["c", "x", "a"]), &f).to_dense(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn embed_mean_examples() {
        let m = matrix();
        let one = embed_mean(&doc(&["w1", "oov"]), &m);
        assert_eq!(one.dense().unwrap(), &[1.0, 2.0, 3.0]);
        assert!(!one.all_oov);

        let two = embed_mean(&doc(&["w1", "w2"]), &m);
        assert_eq!(two.dense().unwrap(), &[-1.0, 1.25, 1.5]);

        let three = embed_mean(&doc(&["w1", "w1", "w2"]), &m);
        // (2·(1,2,3) + (−3,0.5,0)) / 3 = (−1/3, 4.5/3, 2)
        let expected = [-1.0 / 3.0, 1.5, 2.0];
        for (a, b) in three.dense().unwrap().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }

        let none = embed_mean(&doc(&["zzz"]), &m);
        assert!(none.all_oov);
        assert_eq!(none.dense().unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn kmeans_closed_forms() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 6.0]];
        let cb = kmeans_fit(&pts, 1, 10, 3).unwrap();
        assert!((cb.centroids[0][0] - 2.0).abs() < 1e-12);
        assert!((cb.centroids[0][1] - 2.0).abs() < 1e-12);
        // Σ‖p − mean‖² = 4+4 + 0+4 + 4+16
        assert!((cb.inertia - 32.0).abs() < 1e-9);

        let full = kmeans_fit(&pts, 3, 10, 3).unwrap();
        assert_eq!(full.inertia, 0.0);
        let mut cs = full.centroids.clone();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cs, pts);

        assert!(matches!(
            kmeans_fit(&pts, 4, 10, 0),
            Err(Error::TooFewPoints {
                points: 3,
                clusters: 4
            })
        ));
    }

    #[test]
    fn kmeans_repairs_empty_clusters() {
        // Coincident points leave clusters empty after seeding.
        let mut pts = vec![vec![0.0]; 5];
        pts.push(vec![10.0]);
        let cb = kmeans_fit(&pts, 3, 20, 1).unwrap();
        assert_eq!(cb.inertia, 0.0);
        assert!(cb.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn histogram_examples() {
        let m = matrix();
        let cb1 = Codebook {
            centroids: vec![vec![0.0; 3]],
            k: 1,
            inertia: 0.0,
            history: vec![],
        };
        let h = cluster_histogram(&doc(&["w2", "w3", "oov"]), &m, &cb1);
        assert_eq!(h.dense().unwrap(), &[1.0]);

        let cb3 = Codebook {
            centroids: vec![
                vec![1.0, 2.0, 3.0],
                vec![100.0, 0.0, 0.0],
                vec![0.0, 0.0, 10.0],
            ],
            k: 3,
            inertia: 0.0,
            history: vec![],
        };
        // w1 and w2 sit nearest centroid 0, w3 nearest centroid 2.
        let h = cluster_histogram(&doc(&["w1", "w2", "w1", "w3"]), &m, &cb3);
        assert_eq!(h.dense().unwrap(), &[0.75, 0.0, 0.25]);

        let empty = cluster_histogram(&doc(&[]), &m, &cb3);
        assert!(empty.all_oov);
        assert_eq!(empty.dense().unwrap(), &[0.0, 0.0, 0.0]);

        let assignments = assign_vocabulary(&m, &cb3).unwrap();
        let h2 =
            cluster_histogram_assigned(&doc(&["w1", "w2", "w1", "w3"]), m.vocab(), &assignments, 3);
        assert_eq!(h, h2);
    }

    #[test]
    fn nearest_centroid_ties_to_lowest_index() {
        let cb = Codebook {
            centroids: vec![vec![-1.0], vec![1.0]],
            k: 2,
            inertia: 0.0,
            history: vec![],
        };
        assert_eq!(cb.nearest(&[0.0]).0, 0);
    }

    #[test]
    fn record_round_trip_and_validation() {
        let f = vocab(&["a", "b", "c"]);
        let fv = bow_featurize(&doc(&["c", "a"]), &f);
        let rec = FeatureRecord::new("u9", Some(Label::It), &fv);
        let line = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            line,
            r#"{"user_id":"u9","label":"IT","kind":"BOW_BINARY","sparse":[[0,1],[2,1]],"dim":3}"#
        );
        let back: FeatureRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.to_vector().unwrap(), fv);

        let bad: FeatureRecord = serde_json::from_str(
            r#"{"user_id":"x","label":null,"kind":"BOW_BINARY","sparse":[[5,1]],"dim":3}"#,
        )
        .unwrap();
        assert!(bad.to_vector().is_err());
    }

    proptest! {
        #[test]
        fn bow_ignores_order_and_multiplicity(
            tokens in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..20),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let f = vocab(&["a", "c", "e"]);
            let mut shuffled = tokens.clone();
            shuffled.shuffle(&mut seed::rng(seed));
            shuffled.extend(tokens.iter().take(3));
            prop_assert_eq!(bow_featurize(&doc(&tokens), &f), bow_featurize(&doc(&shuffled), &f));
        }

        #[test]
        fn embed_mean_is_within_the_hull(
            tokens in prop::collection::vec(prop::sample::select(vec!["w1", "w2", "w3", "x"]), 0..20),
        ) {
            let m = matrix();
            let max_norm = m.input_rows()
                .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let fv = embed_mean(&doc(&tokens), &m);
            let norm = fv.dense().unwrap().iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= max_norm + 1e-12);
        }

        #[test]
        fn histogram_sums_to_one(
            tokens in prop::collection::vec(prop::sample::select(vec!["w1", "w2", "w3", "x"]), 1..30),
            k in 1usize..=3,
            seed in any::<u64>(),
        ) {
            let m = matrix();
            let cb = fit_embedding_codebook(&m, k, 50, seed).unwrap();
            let fv = cluster_histogram(&doc(&tokens), &m, &cb);
            if !fv.all_oov {
                let s: f64 = fv.dense().unwrap().iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                prop_assert!(fv.dense().unwrap().iter().all(|&h| h >= 0.0));
            }
        }

        #[test]
        fn kmeans_is_deterministic(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 4..20),
            k in 1usize..4,
            seed in any::<u64>(),
        ) {
            let a = kmeans_fit(&pts, k, 30, seed).unwrap();
            let b = kmeans_fit(&pts, k, 30, seed).unwrap();
            prop_assert_eq!(&a, &b);
            for w in a.history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0));
            }
        }
    }
}
