//! Binary classifiers over document features.
//!
//! Every predictor breaks ties toward [`Label::It`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::docrep::{FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::seed;

pub const MODEL_FORMAT: &str = "occuprof-model-v1";

fn class_counts(y: &[Label]) -> Result<[usize; 2]> {
    let mut counts = [0usize; 2];
    for l in y {
        counts[l.index()] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok(counts)
}

fn check_len(rows: usize, y: &[Label]) -> Result<()> {
    if rows != y.len() {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: y.len(),
        });
    }
    Ok(())
}

fn argmax(scores: [f64; 2]) -> Label {
    if scores[0] >= scores[1] {
        Label::It
    } else {
        Label::NonIt
    }
}

/// Posterior of `It` from two unnormalized log scores.
fn posterior_it(scores: [f64; 2]) -> f64 {
    let m = scores[0].max(scores[1]);
    let a = (scores[0] - m).exp();
    let b = (scores[1] - m).exp();
    a / (a + b)
}

/// Bernoulli naive Bayes over binary presence features, with additive
/// (Laplace) smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliNb {
    /// Indexed by [`Label::index`].
    pub class_log_prior: [f64; 2],
    /// `log P(x_j = 1 | c)` per class, per feature.
    pub feature_log_prob: [Vec<f64>; 2],
    pub alpha: f64,
}

impl BernoulliNb {
    /// `rows[i]` lists the features present in sample `i`.
    pub fn fit<R: AsRef<[usize]>>(rows: &[R], dim: usize, y: &[Label], alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidArgument("alpha must be > 0".into()));
        }
        check_len(rows.len(), y)?;
        let counts = class_counts(y)?;
        let mut present = [vec![0usize; dim], vec![0usize; dim]];
        for (row, &label) in rows.iter().zip(y) {
            for &j in row.as_ref() {
                if j >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: j + 1,
                    });
                }
                present[label.index()][j] += 1;
            }
        }
        let n = y.len() as f64;
        let class_log_prior = [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()];
        let feature_log_prob = [0, 1].map(|c| {
            let denom = counts[c] as f64 + 2.0 * alpha;
            present[c]
                .iter()
                .map(|&k| ((k as f64 + alpha) / denom).ln())
                .collect()
        });
        Ok(BernoulliNb {
            class_log_prior,
            feature_log_prob,
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    /// Log joint `log P(c) + Σ_j log P(x_j | c)` for both classes, including
    /// the `log(1 - p)` terms of absent features.
    pub fn joint_log_likelihood(&self, present: &[usize]) -> Result<[f64; 2]> {
        let dim = self.dim();
        if let Some(&j) = present.iter().find(|&&j| j >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: j + 1,
            });
        }
        let mut mask = vec![false; dim];
        for &j in present {
            mask[j] = true;
        }
        Ok([0, 1].map(|c| {
            let lp = &self.feature_log_prob[c];
            let mut s = self.class_log_prior[c];
            for j in 0..dim {
                s += if mask[j] {
                    lp[j]
                } else {
                    (-lp[j].exp()).ln_1p()
                };
            }
            s
        }))
    }

    pub fn predict(&self, present: &[usize]) -> Result<(Label, [f64; 2])> {
        let scores = self.joint_log_likelihood(present)?;
        Ok((argmax(scores), scores))
    }
}

/// Gaussian naive Bayes for dense real features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub class_log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
    pub var_floor: f64,
}

/// Relative variance floor used when none is given.
pub const DEFAULT_VAR_FLOOR_FACTOR: f64 = 1e-9;

impl GaussianNb {
    /// Fits per-class means and (maximum-likelihood) variances. Variances are
    /// clamped to `var_floor`, which defaults to `1e-9` times the largest
    /// per-feature variance of the pooled data.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R], y: &[Label], var_floor: Option<f64>) -> Result<Self> {
        check_len(rows.len(), y)?;
        let counts = class_counts(y)?;
        let dim = rows[0].as_ref().len();
        if let Some(r) = rows.iter().find(|r| r.as_ref().len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.as_ref().len(),
            });
        }

        let moments = |select: &dyn Fn(Label) -> bool| -> (Vec<f64>, Vec<f64>) {
            let mut mean = vec![0.0; dim];
            let mut n = 0.0;
            for (r, &l) in rows.iter().zip(y) {
                if select(l) {
                    n += 1.0;
                    for (m, x) in mean.iter_mut().zip(r.as_ref()) {
                        *m += x;
                    }
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; dim];
            for (r, &l) in rows.iter().zip(y) {
                if select(l) {
                    for ((v, x), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                        *v += (x - m) * (x - m);
                    }
                }
            }
            var.iter_mut().for_each(|v| *v /= n);
            (mean, var)
        };

        let var_floor = match var_floor {
            Some(f) if f > 0.0 => f,
            Some(_) => return Err(Error::InvalidArgument("var_floor must be > 0".into())),
            None => {
                let (_, pooled) = moments(&|_| true);
                let max = pooled.iter().copied().fold(0.0, f64::max);
                if max > 0.0 {
                    DEFAULT_VAR_FLOOR_FACTOR * max
                } else {
                    DEFAULT_VAR_FLOOR_FACTOR
                }
            }
        };

        let (m0, mut v0) = moments(&|l| l == Label::It);
        let (m1, mut v1) = moments(&|l| l == Label::NonIt);
        for v in v0.iter_mut().chain(v1.iter_mut()) {
            *v = v.max(var_floor);
        }
        let n = y.len() as f64;
        Ok(GaussianNb {
            class_log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
            mean: [m0, m1],
            var: [v0, v1],
            var_floor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean[0].len()
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        Ok([0, 1].map(|c| {
            let mut s = self.class_log_prior[c];
            for ((xj, m), v) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                s -= 0.5 * (ln_2pi + v.ln()) + (xj - m) * (xj - m) / (2.0 * v);
            }
            s
        }))
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, [f64; 2])> {
        let scores = self.joint_log_likelihood(x)?;
        Ok((argmax(scores), scores))
    }
}

/// Gini impurity `1 - Σ p_c²` of a two-class count vector.
pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

/// A threshold split candidate on one feature: samples with
/// `value <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    pub gain: f64,
    pub left: [usize; 2],
    pub right: [usize; 2],
}

/// Every midpoint threshold between consecutive distinct values, with its
/// Gini gain over the parent node.
pub fn candidate_splits(values: &[f64], labels: &[Label]) -> Vec<SplitCandidate> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut total = [0usize; 2];
    for l in labels {
        total[l.index()] += 1;
    }
    let n = values.len() as f64;
    let parent = gini(total);
    let mut left = [0usize; 2];
    let mut out = Vec::new();
    for w in 0..order.len().saturating_sub(1) {
        let i = order[w];
        left[labels[i].index()] += 1;
        let (a, b) = (values[i], values[order[w + 1]]);
        if a == b {
            continue;
        }
        let mut threshold = a + (b - a) / 2.0;
        if threshold >= b {
            threshold = a;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let nl = (left[0] + left[1]) as f64;
        let nr = (right[0] + right[1]) as f64;
        let gain = parent - (nl / n) * gini(left) - (nr / n) * gini(right);
        out.push(SplitCandidate {
            threshold,
            gain,
            left,
            right,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: [usize; 2],
    },
}

impl Node {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => *counts,
        }
    }
}

/// Axis-aligned binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        let c = self.leaf_counts(x);
        if c[0] >= c[1] {
            Label::It
        } else {
            Label::NonIt
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until purity or `min_leaf`.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` means `ceil(sqrt(dim))`.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
        }
    }
}

struct TreeBuilder<'a, R> {
    x: &'a [R],
    y: &'a [Label],
    params: &'a ForestParams,
    mtry: usize,
    dim: usize,
    rng: seed::Rng,
    nodes: Vec<Node>,
}

impl<R: AsRef<[f64]>> TreeBuilder<'_, R> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let mut c = [0usize; 2];
        for &i in idx {
            c[self.y[i].index()] += 1;
        }
        c
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, SplitCandidate)> {
        let mut features: Vec<usize> = (0..self.dim).collect();
        features.shuffle(&mut self.rng);
        let labels: Vec<Label> = idx.iter().map(|&i| self.y[i]).collect();
        let mut values = vec![0.0; idx.len()];
        let mut best: Option<(usize, SplitCandidate)> = None;
        let mut tried = 0;
        for f in features {
            if tried == self.mtry {
                break;
            }
            for (v, &i) in values.iter_mut().zip(idx) {
                *v = self.x[i].as_ref()[f];
            }
            let cands = candidate_splits(&values, &labels);
            if cands.is_empty() {
                // Constant on this node; does not count toward mtry.
                continue;
            }
            tried += 1;
            let min_leaf = self.params.min_leaf;
            for c in cands {
                let nl = c.left[0] + c.left[1];
                let nr = c.right[0] + c.right[1];
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                if best.as_ref().is_none_or(|(_, b)| c.gain > b.gain) {
                    best = Some((f, c));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || idx.len() < 2 * self.params.min_leaf.max(1) {
            return me;
        }
        let Some((feature, split)) = self.best_split(&idx) else {
            return me;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i].as_ref()[feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature,
            threshold: split.threshold,
            left,
            right,
            counts,
        };
        me
    }
}

/// Bagged Gini trees with per-split feature sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    pub seed: u64,
    pub dim: usize,
}

impl RandomForest {
    /// Trains `n_trees` trees, each on a bootstrap sample of size N drawn
    /// with its own generator seeded from `(seed, tree index)`.
    pub fn fit<R: AsRef<[f64]> + Sync>(
        x: &[R],
        y: &[Label],
        params: &ForestParams,
        seed: u64,
    ) -> Result<Self> {
        check_len(x.len(), y)?;
        class_counts(y)?;
        if params.n_trees < 1 {
            return Err(Error::InvalidArgument("n_trees must be >= 1".into()));
        }
        let dim = x[0].as_ref().len();
        if let Some(r) = x.iter().find(|r| r.as_ref().len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.as_ref().len(),
            });
        }
        let mtry = params
            .features_per_split
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim.max(1));
        let n = x.len();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive_indexed(seed, t as u64));
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut b = TreeBuilder {
                    x,
                    y,
                    params,
                    mtry,
                    dim,
                    rng,
                    nodes: Vec::new(),
                };
                b.grow(sample, 0);
                DecisionTree { nodes: b.nodes }
            })
            .collect();
        Ok(RandomForest {
            trees,
            params: params.clone(),
            seed,
            dim,
        })
    }

    /// Majority vote (ties to `It`) and the fraction of trees that voted
    /// for the returned label.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let it = self
            .trees
            .iter()
            .filter(|t| t.predict(x) == Label::It)
            .count();
        let total = self.trees.len() as f64;
        let frac_it = it as f64 / total;
        if 2 * it >= self.trees.len() {
            Ok((Label::It, frac_it))
        } else {
            Ok((Label::NonIt, 1.0 - frac_it))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    BernoulliNb,
    GaussianNb,
    RandomForest,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::BernoulliNb => "bernoulli_nb",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::RandomForest => "random_forest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bnb" | "bernoulli_nb" => Some(ClassifierKind::BernoulliNb),
            "gnb" | "gaussian_nb" => Some(ClassifierKind::GaussianNb),
            "rf" | "random_forest" => Some(ClassifierKind::RandomForest),
            _ => None,
        }
    }
}

/// Hyperparameters for every classifier kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub alpha: f64,
    pub var_floor: Option<f64>,
    pub forest: ForestParams,
    pub seed: u64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            alpha: 1.0,
            var_floor: None,
            forest: ForestParams::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    BernoulliNb(BernoulliNb),
    GaussianNb(GaussianNb),
    RandomForest(RandomForest),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Estimated probability of `It` for naive Bayes, fraction of trees
    /// voting `It` for forests.
    pub it_score: f64,
}

impl Model {
    pub fn train(
        kind: ClassifierKind,
        x: &[FeatureVector],
        y: &[Label],
        params: &ClassifierParams,
    ) -> Result<Model> {
        if x.is_empty() {
            return Err(Error::DegenerateLabels);
        }
        match kind {
            ClassifierKind::BernoulliNb => {
                let rows: Vec<&[usize]> = x
                    .iter()
                    .map(|f| {
                        f.sparse_indices().ok_or_else(|| {
                            Error::Incompatible(
                                "bernoulli_nb needs binary bag-of-words features".into(),
                            )
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(Model::BernoulliNb(BernoulliNb::fit(
                    &rows,
                    x[0].dim,
                    y,
                    params.alpha,
                )?))
            }
            ClassifierKind::GaussianNb => {
                let rows: Vec<Vec<f64>> = x.iter().map(FeatureVector::to_dense).collect();
                Ok(Model::GaussianNb(GaussianNb::fit(
                    &rows,
                    y,
                    params.var_floor,
                )?))
            }
            ClassifierKind::RandomForest => {
                let rows: Vec<Vec<f64>> = x.iter().map(FeatureVector::to_dense).collect();
                Ok(Model::RandomForest(RandomForest::fit(
                    &rows,
                    y,
                    &params.forest,
                    params.seed,
                )?))
            }
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::BernoulliNb(_) => ClassifierKind::BernoulliNb,
            Model::GaussianNb(_) => ClassifierKind::GaussianNb,
            Model::RandomForest(_) => ClassifierKind::RandomForest,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        match self {
            Model::BernoulliNb(m) => {
                let idx = x.sparse_indices().ok_or_else(|| {
                    Error::Incompatible("bernoulli_nb needs binary bag-of-words features".into())
                })?;
                if x.dim != m.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: m.dim(),
                        got: x.dim,
                    });
                }
                let (label, s) = m.predict(idx)?;
                Ok(Prediction {
                    label,
                    it_score: posterior_it(s),
                })
            }
            Model::GaussianNb(m) => {
                let (label, s) = m.predict(&x.to_dense())?;
                Ok(Prediction {
                    label,
                    it_score: posterior_it(s),
                })
            }
            Model::RandomForest(m) => {
                let (label, frac) = m.predict(&x.to_dense())?;
                let it_score = if label == Label::It { frac } else { 1.0 - frac };
                Ok(Prediction { label, it_score })
            }
        }
    }
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureKind>,
    #[serde(flatten)]
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, features: Option<FeatureKind>) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            features,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, String> {
        let f: ModelFile = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if f.format != MODEL_FORMAT {
            return Err(format!("unsupported model format {:?}", f.format));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self)
            .map_err(std::io::Error::from)
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let f: ModelFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.line(), e))?;
        if f.format != MODEL_FORMAT {
            return Err(Error::parse(
                path,
                1,
                format!("unsupported model format {:?}", f.format),
            ));
        }
        Ok(f)
    }
}
