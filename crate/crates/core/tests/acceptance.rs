//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.
//!
//! cargo test -p occuprof --test acceptance

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use occuprof::classify::BernoulliNb;
use occuprof::corpus::{concat_timeline, Label, TermCounts, Vocabulary};
use occuprof::docrep::kmeans_fit;
use occuprof::embeddings::{
    self, build_noise_table, cosine, init_matrices, sgns_loss, sgns_step, TrainConfig,
};
use occuprof::eval::{run_comparison, standard_configurations, ComparisonOptions};
use occuprof::linker::{match_profiles, CandidateList, ProfileRecord};
use occuprof::seed::{derive_indexed, derive_seed, rng};
use occuprof::synth::{planted_timelines, two_block_corpus, PlantedSpec};

type Outcome = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget:?} budget")),
            Err(e) => (false, e),
        };
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {name}: {detail} ({:.2}s / {}s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn small_vocab(n: usize) -> Vocabulary {
    Vocabulary::from_terms(
        (0..n)
            .map(|i| (format!("w{i}"), (n - i) as u64 * 3))
            .collect(),
        1,
    )
    .unwrap()
}

fn gradient_oracle() -> Outcome {
    const H: f64 = 1e-5;
    let vocab = small_vocab(8);
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let mut r = rng(derive_indexed(42, case));
        let dim = r.gen_range(1..=10);
        let cfg = TrainConfig {
            dim,
            ..TrainConfig::default()
        };
        let mut m = init_matrices(&vocab, &cfg);
        for i in 0..vocab.len() {
            for x in m.input_row_mut(i) {
                *x = r.gen_range(-1.0..1.0);
            }
            for x in m.output_row_mut(i) {
                *x = r.gen_range(-1.0..1.0);
            }
        }
        let center = r.gen_range(0..8);
        let context = r.gen_range(0..8);
        let noise: Vec<usize> = (0..r.gen_range(1..=5)).map(|_| r.gen_range(0..8)).collect();

        // Gradients are taken at pre-update values, so a unit step moves
        // every parameter by exactly minus its gradient.
        let mut stepped = m.clone();
        sgns_step(&mut stepped, center, context, &noise, 1.0);

        let mut compare = |analytic: f64, numeric: f64, what: &str| -> Result<(), String> {
            let scale = analytic.abs().max(numeric.abs());
            let rel = if scale == 0.0 {
                0.0
            } else {
                (analytic - numeric).abs() / scale
            };
            worst = worst.max(rel);
            ensure(rel <= 1e-4, || {
                format!("case {case} {what}: analytic {analytic:e} vs numeric {numeric:e}")
            })
        };

        for j in 0..dim {
            let analytic = m.input_row(center)[j] - stepped.input_row(center)[j];
            let mut p = m.clone();
            p.input_row_mut(center)[j] += H;
            let up = sgns_loss(&p, center, context, &noise);
            p.input_row_mut(center)[j] -= 2.0 * H;
            let down = sgns_loss(&p, center, context, &noise);
            compare(analytic, (up - down) / (2.0 * H), "input")?;
        }
        for row in 0..vocab.len() {
            for j in 0..dim {
                let analytic = m.output_row(row)[j] - stepped.output_row(row)[j];
                let mut p = m.clone();
                p.output_row_mut(row)[j] += H;
                let up = sgns_loss(&p, center, context, &noise);
                p.output_row_mut(row)[j] -= 2.0 * H;
                let down = sgns_loss(&p, center, context, &noise);
                compare(analytic, (up - down) / (2.0 * H), "output")?;
            }
            if row != center {
                ensure(m.input_row(row) == stepped.input_row(row), || {
                    format!("case {case}: untouched input row {row} changed")
                })?;
            }
        }
    }
    Ok(format!("100 cases, worst relative error {worst:.2e}"))
}

fn noise_law() -> Outcome {
    let freqs: Vec<u64> = (0..20u64).map(|i| 1 + (i * 37 + 11) % 500).collect();
    let vocab = Vocabulary::from_terms(
        freqs
            .iter()
            .enumerate()
            .map(|(i, &f)| (format!("t{i:02}"), f))
            .collect(),
        1,
    )
    .unwrap();
    let table = build_noise_table(&vocab);
    let weights: Vec<f64> = (0..vocab.len())
        .map(|i| (vocab.frequency(i) as f64).powf(0.75))
        .collect();
    let z: f64 = weights.iter().sum();
    let draws = 1_000_000;
    let mut counts = vec![0usize; vocab.len()];
    let mut r = rng(5);
    for _ in 0..draws {
        counts[table.sample(&mut r)] += 1;
    }
    let mut worst: f64 = 0.0;
    for i in 0..vocab.len() {
        let dev = (counts[i] as f64 / draws as f64 - weights[i] / z).abs();
        worst = worst.max(dev);
    }
    ensure(worst <= 0.01, || format!("max deviation {worst:.5}"))?;
    Ok(format!("max deviation {worst:.5} over 20 terms"))
}

fn embedding_separation() -> Outcome {
    let docs = two_block_corpus(2000, 40, 3);
    let vocab = TermCounts::from_docs(&docs).into_vocabulary(5).unwrap();
    let m = embeddings::train(&docs, &vocab, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let terms: Vec<&str> = vocab.terms().iter().map(|(t, _)| t.as_str()).collect();
    let (mut within, mut nw, mut cross, mut nc) = (0.0, 0, 0.0, 0);
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            let c = cosine(m.vector(a).unwrap(), m.vector(b).unwrap());
            if a.as_bytes()[0] == b.as_bytes()[0] {
                within += c;
                nw += 1;
            } else {
                cross += c;
                nc += 1;
            }
        }
    }
    let (within, cross) = (within / nw as f64, cross / nc as f64);
    ensure(within - cross >= 0.3, || {
        format!("within {within:.3} cross {cross:.3}")
    })?;
    Ok(format!(
        "within {within:.3}, cross {cross:.3}, gap {:.3}",
        within - cross
    ))
}

fn nb_oracle() -> Outcome {
    for model in 0..50u64 {
        let mut r = rng(derive_indexed(9, model));
        let prior_it: f64 = r.gen_range(0.05..0.95);
        let p: [Vec<f64>; 2] = [0, 1].map(|_| (0..4).map(|_| r.gen_range(0.02..0.98)).collect());
        let nb = BernoulliNb {
            class_log_prior: [prior_it.ln(), (1.0 - prior_it).ln()],
            feature_log_prob: [0, 1].map(|c| p[c].iter().map(|x: &f64| x.ln()).collect()),
            alpha: 1.0,
        };
        for mask in 0u32..16 {
            let present: Vec<usize> = (0..4).filter(|j| mask & (1 << j) != 0).collect();
            let joint = [0, 1].map(|c| {
                let prior = if c == 0 { prior_it } else { 1.0 - prior_it };
                (0..4).fold(prior, |acc, j| {
                    acc * if mask & (1 << j) != 0 {
                        p[c][j]
                    } else {
                        1.0 - p[c][j]
                    }
                })
            });
            let expected = if joint[0] >= joint[1] {
                Label::It
            } else {
                Label::NonIt
            };
            let (label, scores) = nb.predict(&present).map_err(|e| e.to_string())?;
            ensure(label == expected, || {
                format!("model {model} input {mask:04b}: {label} vs {expected}")
            })?;
            let posterior = 1.0 / (1.0 + (scores[1] - scores[0]).exp());
            let oracle = joint[0] / (joint[0] + joint[1]);
            ensure((posterior - oracle).abs() < 1e-12, || {
                format!("model {model} input {mask:04b}: posterior {posterior} vs {oracle}")
            })?;
        }
    }
    Ok("50 models x 16 inputs agree".into())
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn blobs(r: &mut impl Rng, n: usize, dim: usize, centers: usize, spread: f64) -> Vec<Vec<f64>> {
    let c: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..dim).map(|_| r.gen_range(-10.0..10.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            c[i % centers]
                .iter()
                .map(|x| x + r.gen_range(-spread..spread))
                .collect()
        })
        .collect()
}

/// Two planted clusters: points within 1.5 per axis of their center, the
/// centers at least 8 apart.
fn two_clusters(r: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let a: Vec<f64> = (0..dim).map(|_| r.gen_range(-10.0..10.0)).collect();
    let dir: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
    let dist = r.gen_range(8.0..15.0);
    let b: Vec<f64> = a
        .iter()
        .zip(&dir)
        .map(|(x, d)| x + dist * d / norm)
        .collect();
    (0..n)
        .map(|i| {
            let c = if i % 2 == 0 { &a } else { &b };
            c.iter().map(|x| x + r.gen_range(-1.5..1.5)).collect()
        })
        .collect()
}

fn partition_inertia(points: &[Vec<f64>], side: &[bool]) -> f64 {
    let dim = points[0].len();
    let mut total = 0.0;
    for s in [false, true] {
        let members: Vec<&Vec<f64>> = points
            .iter()
            .zip(side)
            .filter(|(_, &x)| x == s)
            .map(|(p, _)| p)
            .collect();
        let mut mean = vec![0.0; dim];
        for p in &members {
            for (m, x) in mean.iter_mut().zip(p.iter()) {
                *m += x / members.len() as f64;
            }
        }
        total += members.iter().map(|p| sq(p, &mean)).sum::<f64>();
    }
    total
}

fn kmeans_checks() -> Outcome {
    for run in 0..100u64 {
        let mut r = rng(derive_indexed(17, run));
        let dim = r.gen_range(1..=5);
        let centers = r.gen_range(1..=6);
        let n = r.gen_range(20..=200);
        let k = r.gen_range(1..=8);
        let points = blobs(&mut r, n, dim, centers, 4.0);
        let cb = kmeans_fit(&points, k, 100, run).map_err(|e| e.to_string())?;
        for w in cb.history.windows(2) {
            ensure(w[1] <= w[0], || {
                format!("run {run}: inertia rose {} -> {}", w[0], w[1])
            })?;
        }
    }

    for run in 0..20u64 {
        let mut r = rng(derive_indexed(23, run));
        let dim = r.gen_range(1..=6);
        let n = r.gen_range(1..=50);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.gen_range(-100.0..100.0)).collect())
            .collect();
        let cb = kmeans_fit(&points, 1, 100, run).map_err(|e| e.to_string())?;
        for j in 0..dim {
            let mean = points.iter().map(|p| p[j]).sum::<f64>() / n as f64;
            ensure((cb.centroids[0][j] - mean).abs() <= 1e-9, || {
                format!(
                    "k=1 run {run}: centroid {} vs mean {mean}",
                    cb.centroids[0][j]
                )
            })?;
        }
    }

    for fixture in 0..50u64 {
        let mut r = rng(derive_indexed(29, fixture));
        let n = r.gen_range(4..=12);
        let dim = r.gen_range(1..=3);
        let points = two_clusters(&mut r, n, dim);
        let mut best = (f64::INFINITY, Vec::new());
        for bits in 1u32..(1 << (n - 1)) {
            let side: Vec<bool> = (0..n).map(|i| bits & (1 << i) != 0).collect();
            let inertia = partition_inertia(&points, &side);
            if inertia < best.0 {
                best = (inertia, side);
            }
        }
        let cb = kmeans_fit(&points, 2, 100, fixture).map_err(|e| e.to_string())?;
        let got: Vec<bool> = points.iter().map(|p| cb.nearest(p).0 == 1).collect();
        let same = got == best.1 || got.iter().zip(&best.1).all(|(a, b)| a != b);
        ensure(same, || {
            format!("fixture {fixture}: {got:?} vs optimal {:?}", best.1)
        })?;
        ensure(
            (cb.inertia - best.0).abs() <= 1e-9 * best.0.max(1.0),
            || {
                format!(
                    "fixture {fixture}: inertia {} vs optimal {}",
                    cb.inertia, best.0
                )
            },
        )?;
    }
    Ok("100 monotone runs, 20 k=1 means, 50 optimal 2-partitions".into())
}

fn end_to_end() -> Outcome {
    let spec = PlantedSpec::default();
    let labeled: Vec<_> = planted_timelines(&spec, true)
        .iter()
        .map(concat_timeline)
        .collect();
    let pool_spec = PlantedSpec {
        seed: 2,
        ..PlantedSpec::default()
    };
    let pool: Vec<_> = planted_timelines(&pool_spec, false)
        .iter()
        .map(concat_timeline)
        .collect();
    let vocab = TermCounts::from_docs_parallel(&pool)
        .into_vocabulary(5)
        .unwrap();
    let m = embeddings::train(
        &pool,
        &vocab,
        &TrainConfig {
            seed: derive_seed(1, "pretrain"),
            ..TrainConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let report = run_comparison(
        &labeled,
        Some(&m),
        &standard_configurations(),
        &ComparisonOptions::default(),
    )
    .map_err(|e| e.to_string())?;

    let table = report.to_table();
    let header: Vec<&str> = table
        .lines()
        .next()
        .unwrap_or("")
        .split_whitespace()
        .collect();
    ensure(
        header.ends_with(&["Precision", "Recall", "F1-Measure"]),
        || format!("table header {header:?}"),
    )?;
    ensure(table.lines().count() == 1 + 4, || {
        format!("table:\n{table}")
    })?;
    for rep in ["Bag of Words", "Word2Vec mean", "Word2Vec clusters"] {
        ensure(table.contains(rep), || format!("no {rep} row in\n{table}"))?;
    }
    let mut f1s = Vec::new();
    for row in &report.rows {
        let label = format!(
            "{}:{}",
            row.representation.as_str(),
            row.classifier.as_str()
        );
        ensure(row.metrics.f1 >= 0.9, || {
            format!("{label} F1 {:.3}\n{table}", row.metrics.f1)
        })?;
        f1s.push(format!("{label}={:.3}", row.metrics.f1));
    }
    Ok(format!("F1 {}", f1s.join(" ")))
}

fn profile(id: &str, description: impl Into<String>) -> ProfileRecord {
    ProfileRecord {
        record_id: id.into(),
        source: None,
        name: String::new(),
        description: description.into(),
    }
}

fn linker_fixture() -> Outcome {
    let shared: Vec<String> = (0..4999).map(|i| format!("s{i}")).collect();
    let pro_only: Vec<String> = (0..2501).map(|i| format!("p{i}")).collect();
    let soc_only: Vec<String> = (0..2500).map(|i| format!("q{i}")).collect();
    // |A ∩ B| = 4999 and |A ∪ B| = 4999 + 2501 + 2500 = 10000.
    let boundary_pro = format!("{} {}", shared.join(" "), pro_only.join(" "));
    let boundary_soc = format!("{} {}", shared.join(" "), soc_only.join(" "));

    let pros = vec![
        profile("pro1", "Senior software engineer at ACME"),
        profile("pro2", "Data scientist: Python, machine learning"),
        profile("pro3", boundary_pro),
        profile("pro4", "Cloud DevOps engineer"),
        profile("pro5", "teacher"),
        profile("pro6", "Chef, The Bistro! https://bistro.example"),
    ];
    let socials = vec![
        profile("soc01", "software engineer at acme"),
        profile("soc02", "nurse at general hospital"),
        profile("soc03", "python machine learning fan"),
        profile("soc04", "data scientist"),
        profile("soc05", boundary_soc),
        profile("soc06", "s0 q0"),
        profile("soc07", "devops engineer"),
        profile("soc08", "cloud devops engineer"),
        profile("soc09", ""),
        profile("soc10", "math teacher"),
        profile("soc11", "art teacher"),
        profile("soc12", "the bistro chef"),
        profile("soc13", "pastry chef"),
        profile("soc14", "BISTRO owner"),
    ];
    let cands = |p: &str, s: &[&str]| CandidateList {
        professional_id: p.into(),
        social_ids: s.iter().map(|x| x.to_string()).collect(),
    };
    let candidates = vec![
        cands("pro1", &["soc01", "soc02"]),
        cands("pro2", &["soc03", "soc04"]),
        cands("pro3", &["soc05", "soc06"]),
        cands("pro4", &["soc07", "soc08", "soc09"]),
        cands("pro5", &["soc10", "soc11"]),
        cands("pro6", &["soc12", "soc13", "soc14"]),
    ];
    // Hand-scored Jaccard values.
    let expected: Vec<(&str, &str, f64, bool)> = vec![
        ("pro1", "soc01", 4.0 / 5.0, true),
        ("pro1", "soc02", 1.0 / 8.0, false),
        ("pro2", "soc03", 3.0 / 6.0, true),
        ("pro2", "soc04", 2.0 / 5.0, false),
        ("pro3", "soc05", 0.4999, false),
        ("pro3", "soc06", 1.0 / 7501.0, false),
        ("pro4", "soc07", 2.0 / 3.0, false),
        ("pro4", "soc08", 1.0, true),
        ("pro4", "soc09", 0.0, false),
        ("pro5", "soc10", 1.0 / 2.0, true),
        ("pro5", "soc11", 1.0 / 2.0, false),
        ("pro6", "soc12", 1.0, true),
        ("pro6", "soc13", 1.0 / 4.0, false),
        ("pro6", "soc14", 1.0 / 4.0, false),
    ];
    let rows = match_profiles(&pros, &socials, &candidates, 0.5).map_err(|e| e.to_string())?;
    ensure(rows.len() == expected.len(), || {
        format!("{} rows", rows.len())
    })?;
    for (row, (p, s, score, acc)) in rows.iter().zip(&expected) {
        ensure(
            row.professional_id == *p
                && row.social_id == *s
                && (row.score - score).abs() < 1e-12
                && row.accepted == *acc,
            || format!("{row:?} vs ({p}, {s}, {score}, {acc})"),
        )?;
    }
    let accepted: BTreeSet<(&str, &str)> = rows
        .iter()
        .filter(|r| r.accepted)
        .map(|r| (r.professional_id.as_str(), r.social_id.as_str()))
        .collect();
    Ok(format!(
        "{} accepted of {} pairs; 0.4999 rejected",
        accepted.len(),
        rows.len()
    ))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_occuprof"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let fx = |name: &str| fixtures.join(name).to_string_lossy().into_owned();
    let corpus = fx("timelines_200.jsonl");
    let labels = fx("labeled_120.jsonl");
    let (pro, soc, cand) = (
        fx("match/professional.jsonl"),
        fx("match/social.jsonl"),
        fx("match/candidates.jsonl"),
    );
    let common = [
        "--workers",
        "1",
        "--seed",
        "7",
        "--dim",
        "30",
        "--epochs",
        "2",
    ];

    let mut outputs = Vec::new();
    for run in 0..2 {
        let r = |name: &str| format!("r{run}_{name}");
        let mut cmds: Vec<Vec<String>> = vec![vec![
            "pretrain",
            "--corpus",
            &corpus,
            "--out",
            &r("emb.txt"),
            "--vocab-out",
            &r("vocab.tsv"),
        ]
        .into_iter()
        .map(String::from)
        .collect()];
        for kind in ["bow", "emb_mean", "cluster_hist"] {
            cmds.push(
                [
                    "featurize",
                    "--kind",
                    kind,
                    "--labels",
                    &labels,
                    "--embeddings",
                    &r("emb.txt"),
                    "--out",
                    &r(&format!("{kind}.jsonl")),
                    "--cluster-k",
                    "8",
                ]
                .map(String::from)
                .to_vec(),
            );
        }
        for (kind, clf) in [
            ("bow", "bnb"),
            ("emb_mean", "gnb"),
            ("emb_mean", "rf"),
            ("cluster_hist", "rf"),
        ] {
            let model = r(&format!("{kind}_{clf}.json"));
            cmds.push(
                [
                    "train",
                    "--features",
                    &r(&format!("{kind}.jsonl")),
                    "--classifier",
                    clf,
                    "--out",
                    &model,
                    "--n-trees",
                    "20",
                ]
                .map(String::from)
                .to_vec(),
            );
            cmds.push(
                [
                    "evaluate",
                    "--model",
                    &model,
                    "--features",
                    &r(&format!("{kind}.jsonl")),
                    "--report-out",
                    &r(&format!("{kind}_{clf}_score.json")),
                ]
                .map(String::from)
                .to_vec(),
            );
        }
        cmds.push(
            [
                "evaluate",
                "--labels",
                &labels,
                "--embeddings",
                &r("emb.txt"),
                "--cluster-k",
                "8",
                "--n-trees",
                "20",
                "--report-out",
                &r("report.json"),
                "--table-out",
                &r("report.txt"),
            ]
            .map(String::from)
            .to_vec(),
        );
        cmds.push(
            [
                "match",
                "--professional",
                &pro,
                "--social",
                &soc,
                "--candidates",
                &cand,
                "--out",
                &r("matches.csv"),
            ]
            .map(String::from)
            .to_vec(),
        );
        cmds.push(
            [
                "nearest",
                "--embeddings",
                &r("emb.txt"),
                "tech001",
                "-k",
                "5",
            ]
            .map(String::from)
            .to_vec(),
        );
        cmds.push(
            [
                "analogy",
                "--embeddings",
                &r("emb.txt"),
                "tech001",
                "tech002",
                "life001",
                "-k",
                "5",
            ]
            .map(String::from)
            .to_vec(),
        );

        let mut produced = Vec::new();
        for cmd in &cmds {
            let mut args: Vec<&str> = cmd.iter().map(String::as_str).collect();
            args.extend(common);
            produced.push((cmd[0].clone() + " stdout", run_cli(&args, dir)?));
        }
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with(&format!("r{run}_")))
            .collect();
        files.sort();
        for f in files {
            let bytes = std::fs::read(dir.join(&f)).map_err(|e| e.to_string())?;
            produced.push((f[3..].to_string(), bytes));
        }
        outputs.push(produced);
    }
    ensure(outputs[0].len() == outputs[1].len(), || {
        "output sets differ".into()
    })?;
    for ((name, a), (_, b)) in outputs[0].iter().zip(&outputs[1]) {
        ensure(a == b, || format!("{name} differs between runs"))?;
    }
    Ok(format!(
        "{} outputs bit-identical across two runs",
        outputs[0].len()
    ))
}

fn main() {
    let mut suite = Suite { failures: 0 };
    let s = Duration::from_secs;
    suite.check("gradient oracle", s(5), gradient_oracle);
    suite.check("noise law", s(10), noise_law);
    suite.check("embedding separation", s(60), embedding_separation);
    suite.check("naive Bayes oracle", s(5), nb_oracle);
    suite.check("kmeans", s(10), kmeans_checks);
    suite.check("end-to-end", s(300), end_to_end);
    suite.check("linker", s(1), linker_fixture);
    suite.check("determinism", s(300), determinism);
    if suite.failures > 0 {
        println!("{} criteria failed", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
