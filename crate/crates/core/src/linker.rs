//! Cross-platform profile linkage by description similarity.
//!
//! Each professional-network profile has a list of candidate social
//! profiles. Every pair is scored by token-set Jaccard similarity of the two
//! descriptions. At most one candidate per professional profile is accepted:
//! the best-scoring one, if it reaches the threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Professional,
    Social,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub record_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub professional_id: String,
    pub social_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub professional_id: String,
    pub social_id: String,
    pub score: f64,
    pub accepted: bool,
}

fn token_set(s: &str) -> HashSet<String> {
    tokenize(s).into_iter().collect()
}

fn jaccard_sets(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `|A ∩ B| / |A ∪ B|` over tokenized term sets; 0 when both are empty.
pub fn jaccard(a: &str, b: &str) -> f64 {
    jaccard_sets(&token_set(a), &token_set(b))
}

/// Scores every (professional, candidate) pair and accepts at most one
/// candidate per professional record. Ties between equally scoring accepted
/// candidates go to the smallest `social_id`. Rows are ordered by
/// `(professional_id, social_id)`; duplicate candidate ids collapse.
pub fn match_profiles(
    pros: &[ProfileRecord],
    socials: &[ProfileRecord],
    candidates: &[CandidateList],
    threshold: f64,
) -> Result<Vec<MatchResult>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let pro_sets: HashMap<&str, HashSet<String>> = pros
        .iter()
        .map(|p| (p.record_id.as_str(), token_set(&p.description)))
        .collect();
    let social_sets: HashMap<&str, HashSet<String>> = socials
        .iter()
        .map(|p| (p.record_id.as_str(), token_set(&p.description)))
        .collect();

    let mut pairs: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in candidates {
        if !pro_sets.contains_key(c.professional_id.as_str()) {
            return Err(Error::DanglingId(c.professional_id.clone()));
        }
        let entry = pairs.entry(c.professional_id.as_str()).or_default();
        for s in &c.social_ids {
            if !social_sets.contains_key(s.as_str()) {
                return Err(Error::DanglingId(s.clone()));
            }
            entry.insert(s.as_str());
        }
    }

    let mut out = Vec::new();
    for (pro, socials_for_pro) in pairs {
        let start = out.len();
        let mut best: Option<(usize, f64)> = None;
        for social in socials_for_pro {
            let score = jaccard_sets(&pro_sets[pro], &social_sets[social]);
            // Iteration is in ascending social_id, so strict > keeps the
            // smallest id among ties.
            if score >= threshold && best.is_none_or(|(_, b)| score > b) {
                best = Some((out.len(), score));
            }
            out.push(MatchResult {
                professional_id: pro.to_string(),
                social_id: social.to_string(),
                score,
                accepted: false,
            });
        }
        if let Some((i, _)) = best {
            debug_assert!(i >= start);
            out[i].accepted = true;
        }
    }
    Ok(out)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(path, i + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?);
    }
    Ok(out)
}

/// Reads profiles, rejecting duplicate ids within the file.
pub fn read_profiles(path: impl AsRef<Path>, source: Source) -> Result<Vec<ProfileRecord>> {
    let path = path.as_ref();
    let mut records: Vec<ProfileRecord> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    for (i, r) in records.iter_mut().enumerate() {
        if !seen.insert(r.record_id.clone()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate record_id {:?}", r.record_id),
            ));
        }
        r.source.get_or_insert(source);
    }
    Ok(records)
}

pub fn read_candidates(path: impl AsRef<Path>) -> Result<Vec<CandidateList>> {
    read_jsonl(path.as_ref())
}

/// CSV with header `professional_id,social_id,score,accepted`.
pub fn write_matches_csv<W: Write>(mut w: W, rows: &[MatchResult]) -> std::io::Result<()> {
    writeln!(w, "professional_id,social_id,score,accepted")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{}",
            csv_field(&r.professional_id),
            csv_field(&r.social_id),
            r.score,
            r.accepted
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn save_matches(path: impl AsRef<Path>, rows: &[MatchResult]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matches_csv(&mut w, rows)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, desc: &str) -> ProfileRecord {
        ProfileRecord {
            record_id: id.into(),
            source: None,
            name: String::new(),
            description: desc.into(),
        }
    }

    fn cands(pro: &str, ids: &[&str]) -> CandidateList {
        CandidateList {
            professional_id: pro.into(),
            social_ids: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard("data scientist", "data scientist"), 1.0);
        assert!((jaccard("data scientist", "data engineer") - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard("", "anything"), 0.0);
        assert_eq!(jaccard("", ""), 0.0);
        assert_eq!(jaccard("Data, DATA!", "data"), 1.0);
    }

    #[test]
    fn match_examples() {
        let pros = vec![rec("p1", "senior rust developer")];
        let socials = vec![rec("s1", "senior rust developer"), rec("s2", "rust fan")];
        let r = match_profiles(&pros, &socials, &[cands("p1", &["s1"])], 0.5).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].accepted);
        assert_eq!(r[0].score, 1.0);

        // {rust} / {senior, rust, developer, fan}
        let r = match_profiles(&pros, &socials, &[cands("p1", &["s2"])], 0.5).unwrap();
        assert_eq!(r[0].score, 0.25);
        assert!(!r[0].accepted);
    }

    #[test]
    fn best_candidate_wins() {
        // s_lo: 3/5 = 0.6, s_hi: 4/5 = 0.8
        let pros = vec![rec("p", "a b c d")];
        let socials = vec![rec("s_lo", "a b c x"), rec("s_hi", "a b c d e")];
        let r = match_profiles(&pros, &socials, &[cands("p", &["s_lo", "s_hi"])], 0.5).unwrap();
        let by_id: HashMap<_, _> = r.iter().map(|m| (m.social_id.as_str(), m)).collect();
        assert!((by_id["s_lo"].score - 0.6).abs() < 1e-12);
        assert!((by_id["s_hi"].score - 0.8).abs() < 1e-12);
        assert!(by_id["s_hi"].accepted);
        assert!(!by_id["s_lo"].accepted);
    }

    #[test]
    fn ties_go_to_smallest_id_and_duplicates_collapse() {
        let pros = vec![rec("p", "a b")];
        let socials = vec![rec("z", "a b"), rec("m", "a b")];
        let r = match_profiles(&pros, &socials, &[cands("p", &["z", "m", "z"])], 0.5).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].social_id, "m");
        assert!(r[0].accepted && !r[1].accepted);
    }

    #[test]
    fn dangling_ids_are_errors() {
        let pros = vec![rec("p", "a")];
        let socials = vec![rec("s", "a")];
        assert!(matches!(
            match_profiles(&pros, &socials, &[cands("p", &["nope"])], 0.5),
            Err(Error::DanglingId(id)) if id == "nope"
        ));
        assert!(matches!(
            match_profiles(&pros, &socials, &[cands("q", &["s"])], 0.5),
            Err(Error::DanglingId(id)) if id == "q"
        ));
    }

    #[test]
    fn csv_format() {
        let rows = vec![MatchResult {
            professional_id: "p,1".into(),
            social_id: "s".into(),
            score: 1.0 / 3.0,
            accepted: false,
        }];
        let mut buf = Vec::new();
        write_matches_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "professional_id,social_id,score,accepted\n\"p,1\",s,0.333333,false\n"
        );
    }

    fn words() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]),
            0..6,
        )
        .prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn jaccard_properties(a in words(), b in words()) {
            let s = jaccard(&a, &b);
            prop_assert_eq!(s, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&s));
            let equal_sets = token_set(&a) == token_set(&b) && !token_set(&a).is_empty();
            prop_assert_eq!(s == 1.0, equal_sets);
        }

        #[test]
        fn threshold_monotonicity(
            pro_descs in prop::collection::vec(words(), 1..4),
            social_descs in prop::collection::vec(words(), 1..6),
            t1 in 0.0f64..=1.0,
            t2 in 0.0f64..=1.0,
        ) {
            let pros: Vec<_> = pro_descs.iter().enumerate().map(|(i, d)| rec(&format!("p{i}"), d)).collect();
            let socials: Vec<_> = social_descs.iter().enumerate().map(|(i, d)| rec(&format!("s{i}"), d)).collect();
            let all: Vec<&str> = socials.iter().map(|s| s.record_id.as_str()).collect();
            let cl: Vec<_> = pros.iter().map(|p| cands(&p.record_id, &all)).collect();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let a = match_profiles(&pros, &socials, &cl, lo).unwrap();
            let b = match_profiles(&pros, &socials, &cl, hi).unwrap();
            prop_assert_eq!(a.len(), pros.len() * socials.len());
            let accepted = |r: &[MatchResult]| r.iter().filter(|m| m.accepted).count();
            prop_assert!(accepted(&b) <= accepted(&a));
            for p in &pros {
                let n = a.iter().filter(|m| m.accepted && m.professional_id == p.record_id).count();
                prop_assert!(n <= 1);
            }
            for m in &a {
                if m.accepted { prop_assert!(m.score >= lo); }
            }
        }
    }
}
