//! Timeline ingestion, tweet normalization and vocabulary construction.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token that replaces every `@user` mention.
pub const MENTION: &str = "<mention>";

/// Binary job category. `It` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "IT")]
    It,
    #[serde(rename = "NON_IT")]
    NonIt,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::It => "IT",
            Label::NonIt => "NON_IT",
        }
    }

    /// Position in per-class arrays: `It` is 0, `NonIt` is 1.
    pub fn index(self) -> usize {
        match self {
            Label::It => 0,
            Label::NonIt => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::It
        } else {
            Label::NonIt
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One user's raw timeline as read from the ingestion JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTimeline {
    pub user_id: String,
    #[serde(default)]
    pub label: Option<Label>,
    #[serde(default)]
    pub tweets: Vec<String>,
}

/// A user's whole timeline flattened into one token stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDocument {
    pub user_id: String,
    pub tokens: Vec<String>,
    pub label: Option<Label>,
}

fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://")
}

/// Normalizes tweet text into terms.
///
/// Lowercases, drops URLs, replaces `@mentions` with [`MENTION`], strips
/// `#` from hashtags and trims leading/trailing punctuation from every
/// whitespace-separated token. Tokens that end up empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for raw in lowered.split_whitespace() {
        if raw == MENTION {
            out.push(MENTION.to_string());
            continue;
        }
        let lead = raw.trim_start_matches(|c: char| !c.is_alphanumeric());
        if is_url(raw) || is_url(lead) {
            continue;
        }
        let trimmed = lead.trim_end_matches(|c: char| !c.is_alphanumeric());
        if trimmed.is_empty() {
            continue;
        }
        if raw.starts_with('@') {
            out.push(MENTION.to_string());
        } else {
            out.push(trimmed.to_string());
        }
    }
    out
}

/// Concatenates the tokens of every tweet, in timeline order.
pub fn concat_timeline(raw: &RawTimeline) -> TokenizedDocument {
    let tokens = raw.tweets.iter().flat_map(|t| tokenize(t)).collect();
    TokenizedDocument {
        user_id: raw.user_id.clone(),
        tokens,
        label: raw.label,
    }
}

/// Streams timelines from a JSONL file, one object per line.
///
/// Blank lines are skipped. The first malformed line (bad JSON, invalid
/// UTF-8, empty `user_id`) yields an error carrying its 1-based line number.
pub struct TimelineReader<R> {
    lines: std::io::Lines<R>,
    path: std::path::PathBuf,
    line_no: usize,
}

impl TimelineReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(TimelineReader::new(BufReader::new(file), path))
    }
}

impl<R: BufRead> TimelineReader<R> {
    pub fn new(reader: R, path: impl AsRef<Path>) -> Self {
        TimelineReader {
            lines: reader.lines(),
            path: path.as_ref().to_path_buf(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for TimelineReader<R> {
    type Item = Result<RawTimeline>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::parse(&self.path, self.line_no, e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<RawTimeline>(&line)
                .map_err(|e| Error::parse(&self.path, self.line_no, e))
                .and_then(|t| {
                    if t.user_id.is_empty() {
                        Err(Error::parse(&self.path, self.line_no, "empty user_id"))
                    } else {
                        Ok(t)
                    }
                });
            return Some(parsed);
        }
    }
}

pub fn read_timelines(path: impl AsRef<Path>) -> Result<Vec<RawTimeline>> {
    TimelineReader::open(path)?.collect()
}

/// Reads and tokenizes a timeline file.
pub fn read_documents(path: impl AsRef<Path>) -> Result<Vec<TokenizedDocument>> {
    TimelineReader::open(path)?
        .map(|t| t.map(|t| concat_timeline(&t)))
        .collect()
}

pub fn write_timelines(path: impl AsRef<Path>, timelines: &[RawTimeline]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in timelines {
        let line = serde_json::to_string(t).expect("timeline serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Raw term frequencies. Counting can be sharded and merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermCounts {
    counts: HashMap<String, u64>,
    total: u64,
}

impl TermCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document(&mut self, doc: &TokenizedDocument) {
        for tok in &doc.tokens {
            *self.counts.entry(tok.clone()).or_insert(0) += 1;
            self.total += 1;
        }
    }

    pub fn merge(mut self, other: TermCounts) -> TermCounts {
        for (term, c) in other.counts {
            *self.counts.entry(term).or_insert(0) += c;
        }
        self.total += other.total;
        self
    }

    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a TokenizedDocument>) -> Self {
        let mut counts = TermCounts::new();
        for d in docs {
            counts.add_document(d);
        }
        counts
    }

    /// Counts in parallel over document shards.
    pub fn from_docs_parallel(docs: &[TokenizedDocument]) -> Self {
        docs.par_iter()
            .fold(TermCounts::new, |mut acc, d| {
                acc.add_document(d);
                acc
            })
            .reduce(TermCounts::new, TermCounts::merge)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    pub fn get(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn into_vocabulary(self, min_count: u64) -> Result<Vocabulary> {
        if min_count < 1 {
            return Err(Error::InvalidArgument("min_count must be >= 1".into()));
        }
        let terms: Vec<(String, u64)> = self
            .counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        Vocabulary::from_terms(terms, min_count)
    }
}

/// Term ↔ ordinal map. Ordinals are dense and ordered by descending
/// frequency, ties broken by ascending term.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary `(term, frequency)` pairs,
    /// sorting them into canonical order.
    pub fn from_terms(mut terms: Vec<(String, u64)>, min_count: u64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn ordinal(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, ordinal: usize) -> &str {
        &self.terms[ordinal].0
    }

    pub fn frequency(&self, ordinal: usize) -> u64 {
        self.terms[ordinal].1
    }

    pub fn terms(&self) -> &[(String, u64)] {
        &self.terms
    }

    pub fn total_frequency(&self) -> u64 {
        self.terms.iter().map(|(_, c)| c).sum()
    }

    /// Keeps the `k` most frequent terms, re-indexed densely.
    pub fn top_k(&self, k: usize) -> Vocabulary {
        let k = k.max(1).min(self.terms.len());
        let terms: Vec<(String, u64)> = self.terms[..k].to_vec();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            index,
            min_count: self.min_count,
        }
    }

    /// `term<TAB>frequency` per line, in ordinal order.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (t, c) in &self.terms {
            writeln!(w, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut terms = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::parse(path, i + 1, e))?;
            if line.is_empty() {
                continue;
            }
            let (term, freq) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected term<TAB>frequency"))?;
            let freq: u64 = freq
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, i + 1, e))?;
            terms.push((term.to_string(), freq));
        }
        let min_count = terms.iter().map(|t| t.1).min().unwrap_or(1).max(1);
        Vocabulary::from_terms(terms, min_count)
    }
}

/// Counts every token across `docs` and keeps terms seen at least
/// `min_count` times.
pub fn build_vocabulary<'a>(
    docs: impl IntoIterator<Item = &'a TokenizedDocument>,
    min_count: u64,
) -> Result<Vocabulary> {
    TermCounts::from_docs(docs).into_vocabulary(min_count)
}

pub fn top_k_terms(vocab: &Vocabulary, k: usize) -> Vocabulary {
    vocab.top_k(k)
}
