//! Pipeline configuration: defaults, overridden by a `key = value` file,
//! overridden by command-line flags. Flags are applied through the same
//! [`PipelineConfig::apply`] path as file entries.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::{ClassifierParams, ForestParams};
use crate::embeddings::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{ComparisonOptions, SplitSpec};
use crate::linker::DEFAULT_THRESHOLD;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub reports: Option<PathBuf>,

    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    /// `None` means `1e-4 · lr_start`.
    pub lr_min: Option<f64>,
    pub subsample_t: f64,
    pub min_count: u64,

    pub bow_k: usize,
    pub cluster_k: usize,
    pub kmeans_max_iters: usize,
    pub threshold: f64,
    pub train_fraction: f64,
    pub folds: usize,

    pub alpha: f64,
    pub var_floor: Option<f64>,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: Option<usize>,

    pub seed: u64,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let forest = ForestParams::default();
        PipelineConfig {
            corpus: None,
            labels: None,
            embeddings: None,
            models: None,
            reports: None,
            dim: train.dim,
            window: train.window,
            negatives: train.negatives,
            epochs: train.epochs,
            lr_start: train.lr_start,
            lr_min: None,
            subsample_t: train.subsample_t,
            min_count: 5,
            bow_k: 5000,
            cluster_k: 50,
            kmeans_max_iters: 100,
            threshold: DEFAULT_THRESHOLD,
            train_fraction: 0.8,
            folds: 1,
            alpha: 1.0,
            var_floor: None,
            n_trees: forest.n_trees,
            max_depth: forest.max_depth,
            min_leaf: forest.min_leaf,
            features_per_split: forest.features_per_split,
            seed: 1,
            workers: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("{key} = {value:?}: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match value {
        "" | "none" | "unlimited" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "corpus",
        "labels",
        "embeddings",
        "models",
        "reports",
        "dim",
        "window",
        "negatives",
        "epochs",
        "lr_start",
        "lr_min",
        "subsample_t",
        "min_count",
        "bow_k",
        "cluster_k",
        "kmeans_max_iters",
        "threshold",
        "train_fraction",
        "folds",
        "alpha",
        "var_floor",
        "n_trees",
        "max_depth",
        "min_leaf",
        "features_per_split",
        "seed",
        "workers",
    ];

    /// Sets one field from its textual form. Dashes in `key` are accepted
    /// in place of underscores.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "corpus" => self.corpus = Some(value.into()),
            "labels" => self.labels = Some(value.into()),
            "embeddings" => self.embeddings = Some(value.into()),
            "models" => self.models = Some(value.into()),
            "reports" => self.reports = Some(value.into()),
            "dim" => self.dim = parse(k, value)?,
            "window" => self.window = parse(k, value)?,
            "negatives" => self.negatives = parse(k, value)?,
            "epochs" => self.epochs = parse(k, value)?,
            "lr_start" => self.lr_start = parse(k, value)?,
            "lr_min" => self.lr_min = parse_opt(k, value)?,
            "subsample_t" => self.subsample_t = parse(k, value)?,
            "min_count" => self.min_count = parse(k, value)?,
            "bow_k" => self.bow_k = parse(k, value)?,
            "cluster_k" => self.cluster_k = parse(k, value)?,
            "kmeans_max_iters" => self.kmeans_max_iters = parse(k, value)?,
            "threshold" => self.threshold = parse(k, value)?,
            "train_fraction" => self.train_fraction = parse(k, value)?,
            "folds" => self.folds = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "var_floor" => self.var_floor = parse_opt(k, value)?,
            "n_trees" => self.n_trees = parse(k, value)?,
            "max_depth" => self.max_depth = parse_opt(k, value)?,
            "min_leaf" => self.min_leaf = parse(k, value)?,
            "features_per_split" => self.features_per_split = parse_opt(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "workers" => self.workers = parse(k, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key {k:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `key = value`"))?;
            self.apply(k, v)
                .map_err(|e| Error::parse(origin, i + 1, e))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bow_k < 1 {
            return Err(Error::InvalidArgument("bow_k must be >= 1".into()));
        }
        if self.cluster_k < 1 {
            return Err(Error::InvalidArgument("cluster_k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidArgument(
                "threshold must lie in [0, 1]".into(),
            ));
        }
        if self.min_count < 1 {
            return Err(Error::InvalidArgument("min_count must be >= 1".into()));
        }
        self.train_config().validate()
    }

    /// Seed for a named pipeline stage.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            lr_start: self.lr_start,
            lr_min: self.lr_min.unwrap_or(self.lr_start * 1e-4),
            subsample_t: self.subsample_t,
            seed: self.stage_seed("pretrain"),
            workers: self.workers,
        }
    }

    pub fn classifier_params(&self) -> ClassifierParams {
        ClassifierParams {
            alpha: self.alpha,
            var_floor: self.var_floor,
            forest: ForestParams {
                n_trees: self.n_trees,
                max_depth: self.max_depth,
                min_leaf: self.min_leaf,
                features_per_split: self.features_per_split,
            },
            seed: self.stage_seed("train"),
        }
    }

    pub fn comparison_options(&self) -> ComparisonOptions {
        ComparisonOptions {
            split: SplitSpec {
                train_fraction: self.train_fraction,
                seed: self.stage_seed("split"),
            },
            bow_k: self.bow_k,
            cluster_k: self.cluster_k,
            kmeans_max_iters: self.kmeans_max_iters,
            classifier: self.classifier_params(),
            seed: self.stage_seed("evaluate"),
        }
    }
}
