//! The `occuprof` command line.
//!
//! Exit codes: 0 on success, 1 on internal failure, 2 on usage or input
//! errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::classify::{ClassifierKind, Model, ModelFile};
use crate::config::PipelineConfig;
use crate::corpus::{read_documents, Label, TermCounts, Vocabulary};
use crate::docrep::{
    fit_embedding_codebook, read_features, write_features, Codebook, FeatureKind, FeatureRecord,
    Featurizer,
};
use crate::embeddings::{self, EmbeddingMatrix};
use crate::error::Error;
use crate::eval::{self, Configuration, EvalReport, ReportRow};
use crate::linker::{self, Source};

#[derive(Debug, Parser)]
#[command(
    name = "occuprof",
    version,
    about = "Detect IT workers from their timelines"
)]
pub struct Cli {
    /// `key = value` configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub tunables: Tunables,

    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Each maps onto the config key of
/// the same name.
#[derive(Debug, Default, Args)]
pub struct Tunables {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub window: Option<usize>,
    #[arg(long, global = true)]
    pub negatives: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub lr_start: Option<f64>,
    #[arg(long, global = true)]
    pub lr_min: Option<f64>,
    #[arg(long, global = true)]
    pub subsample_t: Option<f64>,
    #[arg(long, global = true)]
    pub min_count: Option<u64>,
    #[arg(long, global = true)]
    pub bow_k: Option<usize>,
    #[arg(long, global = true)]
    pub cluster_k: Option<usize>,
    #[arg(long, global = true)]
    pub kmeans_max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub var_floor: Option<f64>,
    #[arg(long, global = true)]
    pub n_trees: Option<usize>,
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    #[arg(long, global = true)]
    pub min_leaf: Option<usize>,
    #[arg(long, global = true)]
    pub features_per_split: Option<usize>,
}

impl Tunables {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    out.push((stringify!($field), v.to_string()));
                })*
            };
        }
        push!(
            seed,
            workers,
            dim,
            window,
            negatives,
            epochs,
            lr_start,
            lr_min,
            subsample_t,
            min_count,
            bow_k,
            cluster_k,
            kmeans_max_iters,
            threshold,
            train_fraction,
            folds,
            alpha,
            var_floor,
            n_trees,
            max_depth,
            min_leaf,
            features_per_split
        );
        out
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train skip-gram word vectors on an unlabeled timeline file.
    Pretrain {
        /// Timeline JSONL (config key `corpus`).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Embedding output in word2vec text format (config key `embeddings`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the training vocabulary (`term<TAB>frequency`).
        #[arg(long)]
        vocab_out: Option<PathBuf>,
    },
    /// Turn timelines into feature vectors (JSONL).
    Featurize {
        /// bow, emb_mean or cluster_hist.
        #[arg(long)]
        kind: String,
        /// Timeline JSONL (config key `labels`).
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Reuse a bag-of-words vocabulary instead of building one.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        /// Reuse a codebook instead of clustering the embeddings.
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        codebook_out: Option<PathBuf>,
    },
    /// Fit a classifier on a feature file.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// bnb, gnb or rf.
        #[arg(long)]
        classifier: String,
        /// Model JSON output (config key `models`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare configurations on a shared split, or score a trained model.
    Evaluate {
        /// Labeled timeline JSONL (config key `labels`).
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Comma-separated `representation:classifier` pairs.
        #[arg(long, value_delimiter = ',')]
        configs: Vec<String>,
        /// JSON report output (config key `reports`).
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Also write the text table to this file.
        #[arg(long)]
        table_out: Option<PathBuf>,
        /// Score this trained model on `--features` instead.
        #[arg(long, requires = "features")]
        model: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Link professional profiles to social profiles by description.
    Match {
        #[arg(long)]
        professional: PathBuf,
        #[arg(long)]
        social: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the terms closest to a term.
    Nearest {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        term: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Solve `a : b :: c : ?` by vector offset.
    Analogy {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        a: String,
        b: String,
        c: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(Error::Io { source, .. }) => match source.kind() {
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => 2,
                _ => 1,
            },
            Failure::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn required(path: Option<PathBuf>, flag: &str, key: &str) -> std::result::Result<PathBuf, Failure> {
    path.ok_or_else(|| Failure::Usage(format!("missing --{flag} (or `{key}` in the config file)")))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn resolve(cli: &Cli) -> std::result::Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in cli.tunables.pairs() {
        cfg.apply(k, &v)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> CmdResult {
    let cfg = resolve(&cli)?;
    // Results never depend on the thread count; this only bounds it.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global();
    match cli.command {
        Command::Pretrain {
            corpus,
            out,
            vocab_out,
        } => pretrain(&cfg, corpus, out, vocab_out),
        Command::Featurize {
            kind,
            labels,
            embeddings,
            out,
            vocab,
            vocab_out,
            codebook,
            codebook_out,
        } => {
            let kind = FeatureKind::parse(&kind).ok_or_else(|| {
                Failure::Usage(format!(
                    "unknown feature kind {kind:?} (expected bow, emb_mean or cluster_hist)"
                ))
            })?;
            featurize(
                &cfg,
                kind,
                labels,
                embeddings,
                &out,
                vocab,
                vocab_out,
                codebook,
                codebook_out,
            )
        }
        Command::Train {
            features,
            classifier,
            out,
        } => {
            let kind = ClassifierKind::parse(&classifier).ok_or_else(|| {
                Failure::Usage(format!(
                    "unknown classifier {classifier:?} (expected bnb, gnb or rf)"
                ))
            })?;
            train(&cfg, &features, kind, out)
        }
        Command::Evaluate {
            labels,
            embeddings,
            configs,
            report_out,
            table_out,
            model,
            features,
        } => match (model, features) {
            (Some(m), Some(f)) => score_model(&cfg, &m, &f, report_out, table_out),
            _ => evaluate(&cfg, labels, embeddings, &configs, report_out, table_out),
        },
        Command::Match {
            professional,
            social,
            candidates,
            out,
        } => match_cmd(&cfg, &professional, &social, &candidates, out),
        Command::Nearest {
            embeddings,
            term,
            k,
        } => {
            let m = load_embeddings(&cfg, embeddings)?;
            print_ranked(&embeddings::nearest(&term, &m, k)?)
        }
        Command::Analogy {
            embeddings,
            a,
            b,
            c,
            k,
        } => {
            let m = load_embeddings(&cfg, embeddings)?;
            print_ranked(&embeddings::analogy(&a, &b, &c, &m, k)?)
        }
    }
}

fn print_ranked(rows: &[(String, f64)]) -> CmdResult {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for (t, c) in rows {
        let _ = writeln!(w, "{t}\t{c:.6}");
    }
    Ok(())
}

fn load_embeddings(
    cfg: &PipelineConfig,
    flag: Option<PathBuf>,
) -> std::result::Result<EmbeddingMatrix, Failure> {
    let path = required(
        flag.or_else(|| cfg.embeddings.clone()),
        "embeddings",
        "embeddings",
    )?;
    Ok(EmbeddingMatrix::load(path)?)
}

fn pretrain(
    cfg: &PipelineConfig,
    corpus: Option<PathBuf>,
    out: Option<PathBuf>,
    vocab_out: Option<PathBuf>,
) -> CmdResult {
    let corpus = required(corpus.or_else(|| cfg.corpus.clone()), "corpus", "corpus")?;
    let out = required(out.or_else(|| cfg.embeddings.clone()), "out", "embeddings")?;
    let docs = read_documents(&corpus)?;
    let vocab = TermCounts::from_docs_parallel(&docs).into_vocabulary(cfg.min_count)?;
    let m = embeddings::train(&docs, &vocab, &cfg.train_config())?;
    m.save(&out)?;
    if let Some(p) = vocab_out {
        vocab.save(p)?;
    }
    eprintln!(
        "pretrain: {} documents, {} terms, dim {} -> {}",
        docs.len(),
        vocab.len(),
        m.dim(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn featurize(
    cfg: &PipelineConfig,
    kind: FeatureKind,
    labels: Option<PathBuf>,
    embeddings_path: Option<PathBuf>,
    out: &Path,
    vocab: Option<PathBuf>,
    vocab_out: Option<PathBuf>,
    codebook: Option<PathBuf>,
    codebook_out: Option<PathBuf>,
) -> CmdResult {
    let input = required(labels.or_else(|| cfg.labels.clone()), "labels", "labels")?;
    let docs = read_documents(&input)?;
    let matrix = match kind {
        FeatureKind::BowBinary => None,
        _ => Some(load_embeddings(cfg, embeddings_path)?),
    };
    let featurizer = match kind {
        FeatureKind::BowBinary => {
            let v = match vocab {
                Some(p) => Vocabulary::load(p)?,
                None => TermCounts::from_docs_parallel(&docs)
                    .into_vocabulary(1)?
                    .top_k(cfg.bow_k),
            };
            if let Some(p) = vocab_out {
                v.save(p)?;
            }
            Featurizer::Bow(v)
        }
        FeatureKind::EmbMean => Featurizer::EmbMean(matrix.as_ref().unwrap()),
        FeatureKind::ClusterHist => {
            let m = matrix.as_ref().unwrap();
            let cb = match codebook {
                Some(p) => Codebook::load(p)?,
                None => fit_embedding_codebook(
                    m,
                    cfg.cluster_k,
                    cfg.kmeans_max_iters,
                    crate::seed::derive_seed(cfg.stage_seed("evaluate"), "codebook"),
                )?,
            };
            if let Some(p) = codebook_out {
                cb.save(p)?;
            }
            Featurizer::cluster_hist(m, &cb)?
        }
    };
    let vectors = featurizer.featurize_all(&docs);
    let records: Vec<FeatureRecord> = docs
        .iter()
        .zip(&vectors)
        .map(|(d, v)| FeatureRecord::new(&d.user_id, d.label, v))
        .collect();
    write_features(out, &records)?;
    eprintln!(
        "featurize: {} documents as {} -> {}",
        records.len(),
        kind.as_str(),
        out.display()
    );
    Ok(())
}

fn labeled_features(
    path: &Path,
) -> std::result::Result<(Vec<crate::docrep::FeatureVector>, Vec<Label>, FeatureKind), Failure> {
    let rows = read_features(path)?;
    let first = rows
        .first()
        .ok_or_else(|| Failure::Usage(format!("{}: no feature rows", path.display())))?;
    let kind = first.0.kind;
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for (rec, fv) in rows {
        let y = rec.label.ok_or_else(|| {
            Failure::Usage(format!(
                "{}: user {:?} has no label",
                path.display(),
                rec.user_id
            ))
        })?;
        if rec.kind != kind {
            return Err(Failure::Usage(format!(
                "{}: mixed feature kinds",
                path.display()
            )));
        }
        xs.push(fv);
        ys.push(y);
    }
    Ok((xs, ys, kind))
}

fn train(
    cfg: &PipelineConfig,
    features: &Path,
    kind: ClassifierKind,
    out: Option<PathBuf>,
) -> CmdResult {
    let out = required(out.or_else(|| cfg.models.clone()), "out", "models")?;
    let (xs, ys, fkind) = labeled_features(features)?;
    let model = Model::train(kind, &xs, &ys, &cfg.classifier_params())?;
    ModelFile::new(model, Some(fkind)).save(&out)?;
    eprintln!(
        "train: {} on {} rows -> {}",
        kind.as_str(),
        xs.len(),
        out.display()
    );
    Ok(())
}

fn emit_report(
    cfg: &PipelineConfig,
    report: &EvalReport,
    report_out: Option<PathBuf>,
    table_out: Option<PathBuf>,
) -> CmdResult {
    let table = report.to_table();
    print!("{table}");
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(p) = report_out.or_else(|| cfg.reports.clone()) {
        write_text(&p, &(report.to_json() + "\n"))?;
    }
    if let Some(p) = table_out {
        write_text(&p, &table)?;
    }
    Ok(())
}

fn evaluate(
    cfg: &PipelineConfig,
    labels: Option<PathBuf>,
    embeddings_path: Option<PathBuf>,
    configs: &[String],
    report_out: Option<PathBuf>,
    table_out: Option<PathBuf>,
) -> CmdResult {
    let input = required(labels.or_else(|| cfg.labels.clone()), "labels", "labels")?;
    let configs: Vec<Configuration> = if configs.is_empty() {
        eval::standard_configurations()
    } else {
        configs
            .iter()
            .map(|s| {
                Configuration::parse(s).ok_or_else(|| {
                    Failure::Usage(format!(
                        "bad configuration {s:?} (expected representation:classifier)"
                    ))
                })
            })
            .collect::<std::result::Result<_, _>>()?
    };
    let needs_embeddings = configs
        .iter()
        .any(|c| c.representation != FeatureKind::BowBinary);
    let docs = read_documents(&input)?;
    let matrix = if needs_embeddings {
        Some(load_embeddings(cfg, embeddings_path)?)
    } else {
        None
    };
    let opts = cfg.comparison_options();
    let report = if cfg.folds > 1 {
        eval::run_cross_validation(&docs, matrix.as_ref(), &configs, &opts, cfg.folds)?
    } else {
        eval::run_comparison(&docs, matrix.as_ref(), &configs, &opts)?
    };
    emit_report(cfg, &report, report_out, table_out)
}

fn score_model(
    cfg: &PipelineConfig,
    model: &Path,
    features: &Path,
    report_out: Option<PathBuf>,
    table_out: Option<PathBuf>,
) -> CmdResult {
    let file = ModelFile::load(model)?;
    let (xs, gold, kind) = labeled_features(features)?;
    let pred: Vec<Label> = xs
        .iter()
        .map(|x| file.model.predict(x).map(|p| p.label))
        .collect::<crate::error::Result<_>>()?;
    let metrics = eval::metrics(&pred, &gold)?;
    let report = EvalReport {
        train_size: 0,
        test_size: xs.len(),
        folds: 1,
        rows: vec![ReportRow {
            representation: file.features.unwrap_or(kind),
            classifier: file.model.kind(),
            metrics,
        }],
        warnings: Vec::new(),
    };
    emit_report(cfg, &report, report_out, table_out)
}

fn match_cmd(
    cfg: &PipelineConfig,
    professional: &Path,
    social: &Path,
    candidates: &Path,
    out: Option<PathBuf>,
) -> CmdResult {
    let pros = linker::read_profiles(professional, Source::Professional)?;
    let socials = linker::read_profiles(social, Source::Social)?;
    let cands = linker::read_candidates(candidates)?;
    let rows = linker::match_profiles(&pros, &socials, &cands, cfg.threshold)?;
    match out.or_else(|| cfg.reports.clone()) {
        Some(p) => linker::save_matches(&p, &rows)?,
        None => {
            let stdout = std::io::stdout();
            linker::write_matches_csv(stdout.lock(), &rows).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    let accepted = rows.iter().filter(|r| r.accepted).count();
    eprintln!("match: {} pairs scored, {} accepted", rows.len(), accepted);
    Ok(())
}
