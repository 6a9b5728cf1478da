use occuprof::corpus::TermCounts;
use occuprof::embeddings::{analogy, cosine, nearest, train, TrainConfig};
use occuprof::synth::{paired_forms_corpus, two_block_corpus};

#[test]
fn two_block_neighbours_stay_in_block() {
    let docs = two_block_corpus(2000, 40, 3);
    let vocab = TermCounts::from_docs(&docs).into_vocabulary(5).unwrap();
    let m = train(&docs, &vocab, &TrainConfig::default()).unwrap();
    for probe in ["a1", "b3"] {
        let top = nearest(probe, &m, 3).unwrap();
        assert_eq!(top.len(), 3);
        for (t, _) in &top {
            assert_eq!(t.as_bytes()[0], probe.as_bytes()[0], "{probe}: {top:?}");
        }
    }
}

#[test]
fn paired_forms_analogies() {
    let n = 12;
    let docs = paired_forms_corpus(n, 4000, 5);
    let vocab = TermCounts::from_docs(&docs).into_vocabulary(5).unwrap();
    let cfg = TrainConfig {
        dim: 50,
        ..TrainConfig::default()
    };
    let m = train(&docs, &vocab, &cfg).unwrap();
    let mut hits = 0;
    let mut total = 0;
    for i in 0..n {
        let j = (i + 1) % n;
        let (a, b, c, d) = (
            format!("n{i}"),
            format!("n{i}s"),
            format!("n{j}"),
            format!("n{j}s"),
        );
        let top = analogy(&a, &b, &c, &m, 5).unwrap();
        total += 1;
        if top.iter().any(|(t, _)| *t == d) {
            hits += 1;
        }
    }
    assert!(2 * hits > total, "{hits}/{total} analogies solved");
}

#[test]
fn hogwild_training_still_separates_blocks() {
    let docs = two_block_corpus(2000, 40, 4);
    let vocab = TermCounts::from_docs(&docs).into_vocabulary(5).unwrap();
    let cfg = TrainConfig {
        workers: 4,
        dim: 50,
        ..TrainConfig::default()
    };
    let m = train(&docs, &vocab, &cfg).unwrap();
    assert!(m.is_finite());
    let same = cosine(m.vector("a1").unwrap(), m.vector("a2").unwrap());
    let other = cosine(m.vector("a1").unwrap(), m.vector("b1").unwrap());
    assert!(same - other > 0.3, "{same} vs {other}");
}
