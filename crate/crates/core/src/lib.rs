//! Job-category detection for social-media users.
//!
//! A user's timeline is flattened into one document, represented either as
//! a binary bag of words over the most frequent terms or through skip-gram
//! word vectors (mean vector, or a histogram over KMeans clusters of the
//! vector space), and classified as IT / non-IT with naive Bayes or a random
//! forest. A separate linker matches profiles across platforms by
//! description similarity.

pub mod classify;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod docrep;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod linker;
pub mod seed;
pub mod synth;

pub use classify::{
    BernoulliNb, ClassifierKind, ClassifierParams, ForestParams, GaussianNb, Model, ModelFile,
    RandomForest,
};
pub use corpus::{Label, RawTimeline, TokenizedDocument, Vocabulary};
pub use docrep::{Codebook, FeatureKind, FeatureVector};
pub use embeddings::{EmbeddingMatrix, TrainConfig};
pub use error::{Error, Result};
pub use eval::{EvalReport, Metrics, SplitSpec};
pub use linker::{MatchResult, ProfileRecord};
