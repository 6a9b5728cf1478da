//! Train/test splitting, precision/recall/F1 and side-by-side comparison of
//! representation/classifier configurations on one shared split.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{ClassifierKind, ClassifierParams, Model};
use crate::corpus::{build_vocabulary, Label, TokenizedDocument};
use crate::docrep::{fit_embedding_codebook, Codebook, FeatureKind, Featurizer};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub warnings: Vec<String>,
}

fn labels_of(docs: &[TokenizedDocument]) -> Result<Vec<Label>> {
    docs.iter()
        .map(|d| {
            d.label.ok_or_else(|| {
                Error::InvalidArgument(format!("document {:?} has no label", d.user_id))
            })
        })
        .collect()
}

fn check_labeled(labels: &[Label]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two labeled documents".into(),
        ));
    }
    if !labels.contains(&Label::It) || !labels.contains(&Label::NonIt) {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

/// Seeded shuffle; the first `ceil(f·N)` documents train, the rest test.
/// Both sides are kept non-empty.
pub fn split(docs: &[TokenizedDocument], spec: &SplitSpec) -> Result<Split> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(
            "train fraction must lie strictly between 0 and 1".into(),
        ));
    }
    let labels = labels_of(docs)?;
    check_labeled(&labels)?;
    let n = docs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(spec.seed));
    // The epsilon absorbs representation error in products like 0.8·10.
    let n_train = ((spec.train_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let test = order.split_off(n_train);
    let mut warnings = Vec::new();
    for (name, side) in [("train", &order), ("test", &test)] {
        let it = side.iter().filter(|&&i| labels[i] == Label::It).count();
        if it == 0 || it == side.len() {
            warnings.push(format!("{name} split contains a single class"));
        }
    }
    Ok(Split {
        train: order,
        test,
        warnings,
    })
}

/// Confusion counts with `It` as the positive class, plus derived metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Metrics {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Adds the counts of two evaluations and recomputes the ratios.
    pub fn merge(&self, other: &Metrics) -> Metrics {
        Metrics::from_counts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn_ + other.fn_,
            self.tn + other.tn,
        )
    }
}

pub fn metrics(pred: &[Label], gold: &[Label]) -> Result<Metrics> {
    if pred.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        match (p, g) {
            (Label::It, Label::It) => tp += 1,
            (Label::It, Label::NonIt) => fp += 1,
            (Label::NonIt, Label::It) => fn_ += 1,
            (Label::NonIt, Label::NonIt) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// Rounds half-up to `places` decimals and formats the result.
pub fn format_half_up(x: f64, places: u32) -> String {
    let scale = 10f64.powi(places as i32);
    let scaled = x * scale;
    // Snap products like 74.49999999999999 back onto the exact half.
    let half = (scaled * 2.0).round() / 2.0;
    let snapped = if (scaled - half).abs() < 1e-9 {
        half
    } else {
        scaled
    };
    let r = (snapped + 0.5).floor() / scale;
    format!("{:.*}", places as usize, r)
}

/// One representation paired with one classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub representation: FeatureKind,
    pub classifier: ClassifierKind,
}

impl Configuration {
    pub fn new(representation: FeatureKind, classifier: ClassifierKind) -> Self {
        Configuration {
            representation,
            classifier,
        }
    }

    /// Parses `representation:classifier`, e.g. `emb_mean:rf`.
    pub fn parse(s: &str) -> Option<Self> {
        let (r, c) = s.split_once(':')?;
        Some(Configuration::new(
            FeatureKind::parse(r.trim())?,
            ClassifierKind::parse(c.trim())?,
        ))
    }

    pub fn label(&self) -> String {
        format!(
            "{}:{}",
            self.representation.as_str(),
            self.classifier.as_str()
        )
    }
}

/// The four configurations every comparison reports by default.
pub fn standard_configurations() -> Vec<Configuration> {
    use ClassifierKind::*;
    use FeatureKind::*;
    vec![
        Configuration::new(BowBinary, BernoulliNb),
        Configuration::new(EmbMean, GaussianNb),
        Configuration::new(EmbMean, RandomForest),
        Configuration::new(ClusterHist, RandomForest),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOptions {
    pub split: SplitSpec,
    pub bow_k: usize,
    pub cluster_k: usize,
    pub kmeans_max_iters: usize,
    pub classifier: ClassifierParams,
    /// Seed for the codebook and forests; the split has its own.
    pub seed: u64,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            split: SplitSpec::default(),
            bow_k: 5000,
            cluster_k: 50,
            kmeans_max_iters: 100,
            classifier: ClassifierParams::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub representation: FeatureKind,
    pub classifier: ClassifierKind,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub train_size: usize,
    pub test_size: usize,
    pub folds: usize,
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
}

fn representation_name(kind: FeatureKind) -> &'static str {
    match kind {
        FeatureKind::BowBinary => "Bag of Words",
        FeatureKind::EmbMean => "Word2Vec mean",
        FeatureKind::ClusterHist => "Word2Vec clusters",
    }
}

impl EvalReport {
    /// Aligned plain-text table: one row per configuration with precision,
    /// recall and F1 rounded half-up to two decimals.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:<14} {:>9} {:>7} {:>10}",
            "Representation", "Classifier", "Precision", "Recall", "F1-Measure"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<20} {:<14} {:>9} {:>7} {:>10}",
                representation_name(r.representation),
                r.classifier.as_str(),
                format_half_up(r.metrics.precision, 2),
                format_half_up(r.metrics.recall, 2),
                format_half_up(r.metrics.f1, 2)
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Lazily built per-split state shared by every configuration.
struct SplitContext<'a> {
    train_docs: Vec<TokenizedDocument>,
    test_docs: Vec<TokenizedDocument>,
    train_labels: Vec<Label>,
    test_labels: Vec<Label>,
    embeddings: Option<&'a EmbeddingMatrix>,
    codebook: Option<Codebook>,
}

impl<'a> SplitContext<'a> {
    fn featurizer(&self, kind: FeatureKind, opts: &ComparisonOptions) -> Result<Featurizer<'a>> {
        let need_embeddings = || {
            self.embeddings
                .ok_or_else(|| Error::Incompatible(format!("{} needs embeddings", kind.as_str())))
        };
        match kind {
            FeatureKind::BowBinary => {
                let v = build_vocabulary(&self.train_docs, 1)?;
                Ok(Featurizer::Bow(v.top_k(opts.bow_k)))
            }
            FeatureKind::EmbMean => Ok(Featurizer::EmbMean(need_embeddings()?)),
            FeatureKind::ClusterHist => {
                let m = need_embeddings()?;
                let cb = self.codebook.as_ref().expect("codebook fitted up front");
                Featurizer::cluster_hist(m, cb)
            }
        }
    }

    fn evaluate(&self, cfg: &Configuration, opts: &ComparisonOptions) -> Result<Metrics> {
        let f = self.featurizer(cfg.representation, opts)?;
        let train_x = f.featurize_all(&self.train_docs);
        let test_x = f.featurize_all(&self.test_docs);
        let model = Model::train(
            cfg.classifier,
            &train_x,
            &self.train_labels,
            &opts.classifier,
        )?;
        let pred: Vec<Label> = test_x
            .iter()
            .map(|x| model.predict(x).map(|p| p.label))
            .collect::<Result<_>>()?;
        metrics(&pred, &self.test_labels)
    }
}

fn prepare<'a>(
    docs: &[TokenizedDocument],
    labels: &[Label],
    train: &[usize],
    test: &[usize],
    embeddings: Option<&'a EmbeddingMatrix>,
    codebook: Option<Codebook>,
) -> SplitContext<'a> {
    let pick = |idx: &[usize]| idx.iter().map(|&i| docs[i].clone()).collect::<Vec<_>>();
    SplitContext {
        train_docs: pick(train),
        test_docs: pick(test),
        train_labels: train.iter().map(|&i| labels[i]).collect(),
        test_labels: test.iter().map(|&i| labels[i]).collect(),
        embeddings,
        codebook,
    }
}

fn fit_codebook(
    configs: &[Configuration],
    embeddings: Option<&EmbeddingMatrix>,
    opts: &ComparisonOptions,
) -> Result<Option<Codebook>> {
    if !configs
        .iter()
        .any(|c| c.representation == FeatureKind::ClusterHist)
    {
        return Ok(None);
    }
    let m =
        embeddings.ok_or_else(|| Error::Incompatible("cluster_hist needs embeddings".into()))?;
    fit_embedding_codebook(
        m,
        opts.cluster_k,
        opts.kmeans_max_iters,
        seed::derive_seed(opts.seed, "codebook"),
    )
    .map(Some)
}

fn with_forest_seed(opts: &ComparisonOptions) -> ComparisonOptions {
    let mut o = opts.clone();
    o.classifier.seed = seed::derive_seed(opts.seed, "forest");
    o
}

/// Evaluates every configuration on one shared split. Rows follow the
/// order of `configs`.
pub fn run_comparison(
    docs: &[TokenizedDocument],
    embeddings: Option<&EmbeddingMatrix>,
    configs: &[Configuration],
    opts: &ComparisonOptions,
) -> Result<EvalReport> {
    let labels = labels_of(docs)?;
    let sp = split(docs, &opts.split)?;
    let opts = with_forest_seed(opts);
    let codebook = fit_codebook(configs, embeddings, &opts)?;
    let ctx = prepare(docs, &labels, &sp.train, &sp.test, embeddings, codebook);
    let rows = configs
        .par_iter()
        .map(|cfg| {
            ctx.evaluate(cfg, &opts).map(|metrics| ReportRow {
                representation: cfg.representation,
                classifier: cfg.classifier,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        train_size: sp.train.len(),
        test_size: sp.test.len(),
        folds: 1,
        rows,
        warnings: sp.warnings,
    })
}

/// K-fold variant: the seeded shuffle is dealt round-robin into `folds`
/// folds and confusion counts are summed over all held-out folds.
pub fn run_cross_validation(
    docs: &[TokenizedDocument],
    embeddings: Option<&EmbeddingMatrix>,
    configs: &[Configuration],
    opts: &ComparisonOptions,
    folds: usize,
) -> Result<EvalReport> {
    let labels = labels_of(docs)?;
    check_labeled(&labels)?;
    if folds < 2 || folds > docs.len() {
        return Err(Error::InvalidArgument(format!(
            "folds must be in 2..={}",
            docs.len()
        )));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut seed::rng(opts.split.seed));
    let opts = with_forest_seed(opts);
    let codebook = fit_codebook(configs, embeddings, &opts)?;

    let mut totals: Vec<Option<Metrics>> = vec![None; configs.len()];
    let mut warnings = Vec::new();
    for f in 0..folds {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if pos % folds == f {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        let train_labels: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
        if !train_labels.contains(&Label::It) || !train_labels.contains(&Label::NonIt) {
            warnings.push(format!("fold {f}: training side contains a single class"));
        }
        let ctx = prepare(docs, &labels, &train, &test, embeddings, codebook.clone());
        let rows = configs
            .par_iter()
            .map(|cfg| ctx.evaluate(cfg, &opts))
            .collect::<Result<Vec<_>>>()?;
        for (t, m) in totals.iter_mut().zip(rows) {
            *t = Some(t.map_or(m, |t| t.merge(&m)));
        }
    }
    let rows = configs
        .iter()
        .zip(totals)
        .map(|(cfg, m)| ReportRow {
            representation: cfg.representation,
            classifier: cfg.classifier,
            metrics: m.expect("at least two folds"),
        })
        .collect();
    Ok(EvalReport {
        train_size: docs.len(),
        test_size: docs.len(),
        folds,
        rows,
        warnings,
    })
}
