//! Synthetic corpora with planted structure, used by the test suites and to
//! regenerate the bundled fixtures.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;

use crate::corpus::{Label, RawTimeline, TokenizedDocument};
use crate::seed;

/// Two label-conditional term distributions over a shared background.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub users: usize,
    pub tweets_per_user: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Size of each class-specific vocabulary.
    pub topic_words: usize,
    pub common_words: usize,
    /// Probability that a token comes from the user's own topic.
    pub own_share: f64,
    /// Probability that a token comes from the other class's topic.
    pub cross_share: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            users: 400,
            tweets_per_user: 50,
            min_tokens: 5,
            max_tokens: 12,
            topic_words: 300,
            common_words: 60,
            own_share: 0.35,
            cross_share: 0.1,
            seed: 1,
        }
    }
}

struct Lexicon {
    words: Vec<String>,
    dist: WeightedIndex<f64>,
}

impl Lexicon {
    /// Zipf-like weights `1 / (rank + 1)`.
    fn new(prefix: &str, n: usize) -> Self {
        Lexicon {
            words: (0..n).map(|i| format!("{prefix}{i:03}")).collect(),
            dist: WeightedIndex::new((0..n).map(|r| 1.0 / (r + 1) as f64)).unwrap(),
        }
    }

    fn draw(&self, rng: &mut seed::Rng) -> &str {
        &self.words[self.dist.sample(rng)]
    }
}

fn tweet(
    rng: &mut seed::Rng,
    spec: &PlantedSpec,
    own: &Lexicon,
    other: &Lexicon,
    common: &Lexicon,
) -> String {
    let n = rng.gen_range(spec.min_tokens..=spec.max_tokens);
    let mut parts: Vec<String> = Vec::with_capacity(n + 1);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let (word, topical) = if u < spec.own_share {
            (own.draw(rng), true)
        } else if u < spec.own_share + spec.cross_share {
            (other.draw(rng), true)
        } else {
            (common.draw(rng), false)
        };
        let decorated = match rng.gen_range(0..40) {
            0 if topical => format!("#{}", word.to_uppercase()),
            1 => format!("{word},"),
            2 => format!("{}!", word),
            _ => word.to_string(),
        };
        parts.push(decorated);
    }
    match rng.gen_range(0..20) {
        0 => parts.push(format!("https://t.co/{:x}", rng.gen::<u32>())),
        1 => parts.insert(0, format!("@user{}", rng.gen_range(0..500))),
        _ => {}
    }
    parts.join(" ")
}

/// Timelines alternating between the two classes. With `labeled == false`
/// the classes still shape the text but labels are withheld.
pub fn planted_timelines(spec: &PlantedSpec, labeled: bool) -> Vec<RawTimeline> {
    let mut rng = seed::rng(seed::derive_seed(spec.seed, "synth.planted"));
    let tech = Lexicon::new("tech", spec.topic_words);
    let life = Lexicon::new("life", spec.topic_words);
    let common = Lexicon::new("word", spec.common_words);
    (0..spec.users)
        .map(|u| {
            let label = if u % 2 == 0 { Label::It } else { Label::NonIt };
            let (own, other) = match label {
                Label::It => (&tech, &life),
                Label::NonIt => (&life, &tech),
            };
            let tweets = (0..spec.tweets_per_user)
                .map(|_| tweet(&mut rng, spec, own, other, &common))
                .collect();
            RawTimeline {
                user_id: format!("user{u:04}"),
                label: labeled.then_some(label),
                tweets,
            }
        })
        .collect()
}

/// Documents drawn entirely from one of two disjoint five-term blocks,
/// `a1..a5` or `b1..b5`, alternating.
pub fn two_block_corpus(n_docs: usize, doc_len: usize, seed: u64) -> Vec<TokenizedDocument> {
    let mut rng = seed::rng(seed::derive_seed(seed, "synth.two_block"));
    (0..n_docs)
        .map(|d| {
            let block = if d % 2 == 0 { 'a' } else { 'b' };
            let tokens = (0..doc_len)
                .map(|_| format!("{block}{}", rng.gen_range(1..=5)))
                .collect();
            TokenizedDocument {
                user_id: format!("doc{d}"),
                tokens,
                label: None,
            }
        })
        .collect()
}

/// Pairs of singular/plural forms. Every base word `n{i}` has its own
/// topical contexts; singular forms follow `one`, plural forms `n{i}s`
/// follow `many`.
pub fn paired_forms_corpus(n_words: usize, n_docs: usize, seed: u64) -> Vec<TokenizedDocument> {
    let mut rng = seed::rng(seed::derive_seed(seed, "synth.paired"));
    (0..n_docs)
        .map(|d| {
            let mut tokens = Vec::new();
            for _ in 0..12 {
                let i = rng.gen_range(0..n_words);
                let plural = rng.gen_bool(0.5);
                tokens.push(if plural { "many" } else { "one" }.to_string());
                tokens.push(if plural {
                    format!("n{i}s")
                } else {
                    format!("n{i}")
                });
                tokens.push(format!("ctx{i}_{}", rng.gen_range(0..3)));
                tokens.push(if plural { "are" } else { "is" }.to_string());
            }
            TokenizedDocument {
                user_id: format!("doc{d}"),
                tokens,
                label: None,
            }
        })
        .collect()
}
