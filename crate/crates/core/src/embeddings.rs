//! Skip-gram word vectors trained with negative sampling, plus similarity
//! and analogy queries over the trained input vectors.
//!
//! Training follows the usual word2vec recipe: frequent-word subsampling,
//! a dynamic window drawn uniformly from `1..=window` at every position,
//! noise words drawn from the unigram distribution raised to 0.75, and a
//! learning rate decaying linearly over the whole schedule. Documents are
//! treated as single sentences; windows never cross a document boundary.
//!
//! With `workers > 1` documents are partitioned across threads that update
//! the shared matrices without locking. Only `workers == 1` is
//! bit-reproducible.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng as _;

use crate::corpus::{TokenizedDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_min: f64,
    pub subsample_t: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 200,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_min: 0.025 * 1e-4,
            subsample_t: 1e-3,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_start) {
            return bad("learning rates must satisfy 0 < lr_min <= lr_start");
        }
        if self.subsample_t.is_nan() || self.subsample_t < 0.0 {
            return bad("subsample_t must be >= 0");
        }
        if self.workers < 1 {
            return bad("workers must be >= 1");
        }
        Ok(())
    }
}

/// Word vectors for a vocabulary. Row `i` belongs to vocabulary ordinal `i`.
///
/// `output` holds the context vectors used during training; it is empty for
/// matrices loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vocabulary,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from explicit input rows (no training state).
    pub fn from_rows(vocab: Vocabulary, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                got: rows.len(),
            });
        }
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidArgument("vectors must have dim >= 1".into()));
        }
        let mut input = Vec::with_capacity(dim * rows.len());
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            input.extend_from_slice(r);
        }
        Ok(EmbeddingMatrix {
            vocab,
            dim,
            input,
            output: Vec::new(),
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn input_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> &[f64] {
        &self.output[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.output[i * self.dim..(i + 1) * self.dim]
    }

    pub fn has_output(&self) -> bool {
        !self.output.is_empty()
    }

    pub fn vector(&self, term: &str) -> Option<&[f64]> {
        self.vocab.ordinal(term).map(|i| self.input_row(i))
    }

    pub fn input_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.input.chunks_exact(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }

    /// Drops the training-only context vectors.
    pub fn discard_output(&mut self) {
        self.output = Vec::new();
    }

    pub fn write_text<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_vectors(
            w,
            self.dim,
            self.vocab.terms().iter().map(|(t, _)| t.as_str()),
            self.input_rows(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Loads the word2vec text format. Frequencies are not stored in the
    /// format, so the vocabulary gets synthetic descending counts that
    /// preserve the file's row order.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let (names, rows) = read_vectors(BufReader::new(file), path)?;
        let n = names.len() as u64;
        let terms = names
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, n - i as u64))
            .collect();
        let vocab = Vocabulary::from_terms(terms, 1)?;
        EmbeddingMatrix::from_rows(vocab, rows)
    }
}

/// Writes the word2vec text format: a `<count> <dim>` header, then one
/// `name v1 .. vdim` line per row. Reals use the shortest representation
/// that parses back to the same value.
pub fn write_vectors<'a, W: Write>(
    mut w: W,
    dim: usize,
    names: impl Iterator<Item = &'a str>,
    rows: impl Iterator<Item = &'a [f64]>,
) -> std::io::Result<()> {
    let names: Vec<&str> = names.collect();
    writeln!(w, "{} {}", names.len(), dim)?;
    for (name, row) in names.into_iter().zip(rows) {
        write!(w, "{name}")?;
        for v in row {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_vectors<R: BufRead>(r: R, path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let header = header.map_err(|e| Error::parse(path, 1, e))?;
    let mut it = header.split_whitespace();
    let parse_usize = |s: Option<&str>| -> Result<usize> {
        s.ok_or_else(|| Error::parse(path, 1, "header must be `<count> <dim>`"))?
            .parse()
            .map_err(|e| Error::parse(path, 1, e))
    };
    let count = parse_usize(it.next())?;
    let dim = parse_usize(it.next())?;
    let mut names = Vec::with_capacity(count);
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines {
        let line = line.map_err(|e| Error::parse(path, i + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let name = parts.next().unwrap_or_default().to_string();
        let row: Vec<f64> = parts
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|e| Error::parse(path, i + 1, e)))
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {dim} values, found {}", row.len()),
            ));
        }
        names.push(name);
        rows.push(row);
    }
    if names.len() != count {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {count} rows, found {}", names.len()),
        ));
    }
    Ok((names, rows))
}

/// Input rows uniform in `[-0.5/dim, 0.5/dim)`, output rows zero.
pub fn init_matrices(vocab: &Vocabulary, cfg: &TrainConfig) -> EmbeddingMatrix {
    let mut rng = seed::rng(seed::derive_seed(cfg.seed, "embeddings.init"));
    let dim = cfg.dim;
    let n = vocab.len();
    let input = (0..n * dim)
        .map(|_| (rng.gen::<f64>() - 0.5) / dim as f64)
        .collect();
    EmbeddingMatrix {
        vocab: vocab.clone(),
        dim,
        input,
        output: vec![0.0; n * dim],
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, computed without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

trait Rows {
    fn get(&self, i: usize) -> f64;
    fn add(&mut self, i: usize, delta: f64);
}

struct LocalRows<'a>(&'a mut [f64]);

impl Rows for LocalRows<'_> {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    #[inline]
    fn add(&mut self, i: usize, delta: f64) {
        self.0[i] += delta;
    }
}

/// Lock-free shared storage; concurrent read-modify-write may lose updates.
#[derive(Clone, Copy)]
struct SharedRows<'a>(&'a [AtomicU64]);

impl Rows for SharedRows<'_> {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&mut self, i: usize, delta: f64) {
        let v = self.get(i) + delta;
        self.0[i].store(v.to_bits(), Ordering::Relaxed);
    }
}

#[derive(Default)]
struct Scratch {
    center: Vec<f64>,
    grad: Vec<f64>,
    coeffs: Vec<f64>,
}

fn dot_row<O: Rows>(center: &[f64], output: &O, row: usize) -> f64 {
    let base = row * center.len();
    center
        .iter()
        .enumerate()
        .map(|(j, c)| c * output.get(base + j))
        .sum()
}

/// One negative-sampling update. Returns the loss before the update.
///
/// All gradients are evaluated at the pre-update parameters and then
/// applied, so repeated noise words accumulate their gradient exactly.
#[allow(clippy::too_many_arguments)]
fn sgns_update<I: Rows, O: Rows>(
    input: &mut I,
    output: &mut O,
    dim: usize,
    center: usize,
    context: usize,
    noise: &[usize],
    lr: f64,
    scratch: &mut Scratch,
) -> f64 {
    let cbase = center * dim;
    scratch.center.clear();
    scratch
        .center
        .extend((0..dim).map(|j| input.get(cbase + j)));
    scratch.grad.clear();
    scratch.grad.resize(dim, 0.0);
    scratch.coeffs.clear();

    let mut loss = 0.0;
    let targets = std::iter::once((context, 1.0)).chain(noise.iter().map(|&k| (k, 0.0)));
    for (row, label) in targets {
        let score = dot_row(&scratch.center, output, row);
        loss += if label == 1.0 {
            neg_log_sigmoid(score)
        } else {
            neg_log_sigmoid(-score)
        };
        // d loss / d score
        let g = sigmoid(score) - label;
        scratch.coeffs.push(g);
        let obase = row * dim;
        for j in 0..dim {
            scratch.grad[j] += g * output.get(obase + j);
        }
    }

    let rows = std::iter::once(context).chain(noise.iter().copied());
    for (row, &g) in rows.zip(&scratch.coeffs) {
        let step = -lr * g;
        let obase = row * dim;
        for j in 0..dim {
            output.add(obase + j, step * scratch.center[j]);
        }
    }
    for j in 0..dim {
        input.add(cbase + j, -lr * scratch.grad[j]);
    }
    loss
}

/// Negative-sampling loss `-ln σ(v·u_ctx) - Σ ln σ(-v·u_k)` without updating.
pub fn sgns_loss(m: &EmbeddingMatrix, center: usize, context: usize, noise: &[usize]) -> f64 {
    let v = m.input_row(center);
    let score = |row: usize| -> f64 { v.iter().zip(m.output_row(row)).map(|(a, b)| a * b).sum() };
    neg_log_sigmoid(score(context))
        + noise
            .iter()
            .map(|&k| neg_log_sigmoid(-score(k)))
            .sum::<f64>()
}

/// Applies one gradient-descent step on a (center, context, noise) triple
/// and returns the loss before the update.
///
/// # Panics
///
/// If the matrix has no output vectors (loaded from disk) or an ordinal is
/// out of range.
pub fn sgns_step(
    m: &mut EmbeddingMatrix,
    center: usize,
    context: usize,
    noise: &[usize],
    lr: f64,
) -> f64 {
    assert!(m.has_output(), "matrix has no training state");
    let dim = m.dim;
    let mut scratch = Scratch::default();
    let mut input = LocalRows(&mut m.input);
    let mut output = LocalRows(&mut m.output);
    sgns_update(
        &mut input,
        &mut output,
        dim,
        center,
        context,
        noise,
        lr,
        &mut scratch,
    )
}

/// Draws the dynamic window radius `b` in `1..=window` and emits the
/// (center, context) pairs within it, left to right.
pub fn sample_context(
    position: usize,
    sentence: &[usize],
    window: usize,
    rng: &mut impl rand::Rng,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    sample_context_into(position, sentence, window, rng, &mut out);
    out
}

fn sample_context_into(
    position: usize,
    sentence: &[usize],
    window: usize,
    rng: &mut impl rand::Rng,
    out: &mut Vec<(usize, usize)>,
) {
    out.clear();
    let b = rng.gen_range(1..=window.max(1));
    let center = sentence[position];
    let lo = position.saturating_sub(b);
    let hi = (position + b).min(sentence.len() - 1);
    for (p, &t) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
        if p != position {
            out.push((center, t));
        }
    }
}

/// Keep probability `min(1, sqrt(t/f) + t/f)` for a term of relative
/// frequency `f`. `t == 0` disables subsampling.
pub fn keep_probability(term_frequency: u64, total_tokens: u64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let f = term_frequency as f64 / total_tokens as f64;
    let r = t / f;
    (r.sqrt() + r).min(1.0)
}

pub fn subsample_keep(
    term_frequency: u64,
    total_tokens: u64,
    t: f64,
    rng: &mut impl rand::Rng,
) -> bool {
    let p = keep_probability(term_frequency, total_tokens, t);
    p >= 1.0 || rng.gen::<f64>() < p
}

/// Number of slots in the unigram noise table.
pub const NOISE_TABLE_SIZE: usize = 1 << 22;

/// Precomputed table for drawing noise words with probability proportional
/// to `frequency^0.75`.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    table: Vec<u32>,
}

impl NoiseTable {
    pub fn sample(&self, rng: &mut impl rand::Rng) -> usize {
        self.table[rng.gen_range(0..self.table.len())] as usize
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Fraction of the table occupied by `ordinal`.
    pub fn share(&self, ordinal: usize) -> f64 {
        let n = self
            .table
            .iter()
            .filter(|&&t| t as usize == ordinal)
            .count();
        n as f64 / self.table.len() as f64
    }
}

pub fn build_noise_table(vocab: &Vocabulary) -> NoiseTable {
    build_noise_table_sized(vocab, NOISE_TABLE_SIZE)
}

pub fn build_noise_table_sized(vocab: &Vocabulary, size: usize) -> NoiseTable {
    assert!(
        !vocab.is_empty(),
        "noise table needs a non-empty vocabulary"
    );
    let weights: Vec<f64> = (0..vocab.len())
        .map(|i| (vocab.frequency(i) as f64).powf(0.75))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut table = Vec::with_capacity(size);
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w / total;
        let end = if i + 1 == weights.len() {
            size
        } else {
            ((cum * size as f64).round() as usize).min(size)
        };
        while table.len() < end {
            table.push(i as u32);
        }
    }
    NoiseTable { table }
}

struct Schedule {
    lr_start: f64,
    lr_min: f64,
    total: f64,
}

impl Schedule {
    fn lr(&self, processed: u64) -> f64 {
        let frac = processed as f64 / self.total;
        (self.lr_start - (self.lr_start - self.lr_min) * frac).max(self.lr_min)
    }
}

struct Shared<'a> {
    input: SharedRows<'a>,
    output: SharedRows<'a>,
    dim: usize,
    vocab: &'a Vocabulary,
    noise: &'a NoiseTable,
    cfg: &'a TrainConfig,
    schedule: Schedule,
    processed: &'a AtomicU64,
}

fn train_worker(shared: &Shared<'_>, docs: &[Vec<usize>], seed: u64) {
    let mut rng: Rng = seed::rng(seed);
    let mut input = shared.input;
    let mut output = shared.output;
    let total_tokens = shared.vocab.total_frequency();
    let mut scratch = Scratch::default();
    let mut kept = Vec::new();
    let mut pairs = Vec::new();
    let mut noise = Vec::with_capacity(shared.cfg.negatives);

    for _ in 0..shared.cfg.epochs {
        for doc in docs {
            kept.clear();
            for &w in doc {
                if subsample_keep(
                    shared.vocab.frequency(w),
                    total_tokens,
                    shared.cfg.subsample_t,
                    &mut rng,
                ) {
                    kept.push(w);
                }
            }
            let base = shared
                .processed
                .fetch_add(doc.len() as u64, Ordering::Relaxed);
            for pos in 0..kept.len() {
                // Position within the document approximates the token count.
                let progress = base + (pos as u64 * doc.len() as u64) / kept.len() as u64;
                let lr = shared.schedule.lr(progress);
                sample_context_into(pos, &kept, shared.cfg.window, &mut rng, &mut pairs);
                for &(center, context) in &pairs {
                    noise.clear();
                    for _ in 0..shared.cfg.negatives {
                        let k = shared.noise.sample(&mut rng);
                        if k != context {
                            noise.push(k);
                        }
                    }
                    sgns_update(
                        &mut input,
                        &mut output,
                        shared.dim,
                        center,
                        context,
                        &noise,
                        lr,
                        &mut scratch,
                    );
                }
            }
        }
    }
}

/// Trains skip-gram vectors over `corpus`. Tokens outside `vocab` are
/// dropped before windowing.
pub fn train<'a>(
    corpus: impl IntoIterator<Item = &'a TokenizedDocument>,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    let sentences: Vec<Vec<usize>> = corpus
        .into_iter()
        .map(|d| {
            d.tokens
                .iter()
                .filter_map(|t| vocab.ordinal(t))
                .collect::<Vec<_>>()
        })
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();
    let tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if tokens == 0 {
        return Err(Error::NoTrainableTokens);
    }

    let mut m = init_matrices(vocab, cfg);
    if cfg.epochs == 0 {
        return Ok(m);
    }

    let noise = build_noise_table(vocab);
    let input: Vec<AtomicU64> = m
        .input
        .iter()
        .map(|x| AtomicU64::new(x.to_bits()))
        .collect();
    let output: Vec<AtomicU64> = m
        .output
        .iter()
        .map(|x| AtomicU64::new(x.to_bits()))
        .collect();
    let processed = AtomicU64::new(0);
    let shared = Shared {
        input: SharedRows(&input),
        output: SharedRows(&output),
        dim: cfg.dim,
        vocab,
        noise: &noise,
        cfg,
        schedule: Schedule {
            lr_start: cfg.lr_start,
            lr_min: cfg.lr_min,
            total: (tokens * cfg.epochs as u64) as f64,
        },
        processed: &processed,
    };
    let train_seed = seed::derive_seed(cfg.seed, "embeddings.train");

    if cfg.workers == 1 {
        train_worker(&shared, &sentences, seed::derive_indexed(train_seed, 0));
    } else {
        let chunk = sentences.len().div_ceil(cfg.workers);
        std::thread::scope(|s| {
            for (w, part) in sentences.chunks(chunk.max(1)).enumerate() {
                let shared = &shared;
                s.spawn(move || {
                    train_worker(shared, part, seed::derive_indexed(train_seed, w as u64))
                });
            }
        });
    }

    m.input = input
        .into_iter()
        .map(|a| f64::from_bits(a.into_inner()))
        .collect();
    m.output = output
        .into_iter()
        .map(|a| f64::from_bits(a.into_inner()))
        .collect();
    Ok(m)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn rank_by_cosine(
    m: &EmbeddingMatrix,
    query: &[f64],
    exclude: &[usize],
    k: usize,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(usize, f64)> = (0..m.len())
        .filter(|i| !exclude.contains(i))
        .map(|i| (i, cosine(query, m.input_row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(i, c)| (m.vocab.term(i).to_string(), c))
        .collect()
}

fn lookup(m: &EmbeddingMatrix, term: &str) -> Result<usize> {
    m.vocab
        .ordinal(term)
        .ok_or_else(|| Error::OutOfVocabulary(term.to_string()))
}

/// The `k` terms most cosine-similar to `term`, excluding `term` itself.
pub fn nearest(term: &str, m: &EmbeddingMatrix, k: usize) -> Result<Vec<(String, f64)>> {
    let i = lookup(m, term)?;
    Ok(rank_by_cosine(m, m.input_row(i), &[i], k))
}

/// Ranks terms by cosine to `v(b) - v(a) + v(c)`; `a`, `b` and `c` are
/// excluded from the result.
pub fn analogy(
    a: &str,
    b: &str,
    c: &str,
    m: &EmbeddingMatrix,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let (ia, ib, ic) = (lookup(m, a)?, lookup(m, b)?, lookup(m, c)?);
    let query: Vec<f64> = (0..m.dim)
        .map(|j| m.input_row(ib)[j] - m.input_row(ia)[j] + m.input_row(ic)[j])
        .collect();
    Ok(rank_by_cosine(m, &query, &[ia, ib, ic], k))
}
