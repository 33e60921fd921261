//! Greedy 1-1 matching of male to female resumes on experience, degree,
//! field of study and resume-vector similarity.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Degree, Field, Gender, Resume};
use crate::embeddings::{cosine, ResumeVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub max_experience_gap: u32,
    pub min_cosine: f64,
    pub require_same_degree: bool,
    pub require_same_field: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            max_experience_gap: 2,
            min_cosine: 0.7,
            require_same_degree: true,
            require_same_field: true,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.min_cosine) {
            return Err(Error::InvalidConfig(format!(
                "min_cosine must lie in [-1, 1], got {}",
                self.min_cosine
            )));
        }
        Ok(())
    }

    /// Metadata constraints only; similarity is checked separately.
    pub fn compatible(&self, m: &Resume, f: &Resume) -> bool {
        m.years_experience.abs_diff(f.years_experience) <= self.max_experience_gap
            && (!self.require_same_degree || m.degree == f.degree)
            && (!self.require_same_field || m.field_of_study == f.field_of_study)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub male_id: String,
    pub female_id: String,
    pub similarity: f64,
}

type Bucket = (Option<Degree>, Option<Field>);

fn bucket(r: &Resume, cfg: &MatchConfig) -> Bucket {
    (
        cfg.require_same_degree.then_some(r.degree),
        cfg.require_same_field.then_some(r.field_of_study),
    )
}

/// Males are processed in ascending id order. Each takes the unmatched
/// eligible female with the highest cosine similarity, ties going to the
/// smallest female id. Resumes whose vector is flagged (no keywords) never
/// match.
pub fn match_resumes(
    males: &[&Resume],
    females: &[&Resume],
    vectors: &BTreeMap<String, ResumeVector>,
    cfg: &MatchConfig,
) -> Result<Vec<MatchedPair>> {
    cfg.validate()?;
    let lookup = |r: &Resume| {
        vectors.get(&r.id).ok_or_else(|| Error::DanglingReference {
            kind: "resume vector",
            id: r.id.clone(),
        })
    };
    for r in males.iter().chain(females) {
        lookup(r)?;
    }

    let mut males: Vec<&Resume> = males.to_vec();
    males.sort_by(|a, b| a.id.cmp(&b.id));
    let mut buckets: BTreeMap<Bucket, Vec<&Resume>> = BTreeMap::new();
    for f in females {
        if !lookup(f)?.flagged {
            buckets.entry(bucket(f, cfg)).or_default().push(f);
        }
    }
    for b in buckets.values_mut() {
        b.sort_by(|a, b| a.id.cmp(&b.id));
    }

    let mut taken: BTreeSet<&str> = BTreeSet::new();
    let mut pairs = Vec::new();
    for m in males {
        let mv = lookup(m)?;
        if mv.flagged {
            continue;
        }
        let Some(candidates) = buckets.get(&bucket(m, cfg)) else {
            continue;
        };
        let mut best: Option<(&Resume, f64)> = None;
        for f in candidates {
            if taken.contains(f.id.as_str()) || !cfg.compatible(m, f) {
                continue;
            }
            let sim = cosine(&mv.vector, &lookup(f)?.vector)?;
            // Candidates are in ascending id order, so strict improvement
            // keeps the smallest id among equal similarities.
            if sim >= cfg.min_cosine && best.is_none_or(|(_, s)| sim > s) {
                best = Some((f, sim));
            }
        }
        if let Some((f, similarity)) = best {
            taken.insert(&f.id);
            pairs.push(MatchedPair {
                male_id: m.id.clone(),
                female_id: f.id.clone(),
                similarity,
            });
        }
    }
    Ok(pairs)
}

/// Splits a resume set by gender and matches it.
pub fn match_corpus(
    resumes: &[Resume],
    vectors: &BTreeMap<String, ResumeVector>,
    cfg: &MatchConfig,
) -> Result<Vec<MatchedPair>> {
    let (males, females): (Vec<&Resume>, Vec<&Resume>) =
        resumes.iter().partition(|r| r.gender == Gender::Male);
    match_resumes(&males, &females, vectors, cfg)
}

pub const PAIRS_HEADER: [&str; 3] = ["male_id", "female_id", "similarity"];

pub fn write_pairs<W: Write>(pairs: &[MatchedPair], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PAIRS_HEADER)?;
    for p in pairs {
        out.write_record([p.male_id.as_str(), p.female_id.as_str(), &p.similarity.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<pairs>", e))?;
    Ok(())
}

pub fn save_pairs(pairs: &[MatchedPair], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_pairs(pairs, f)
}

pub fn read_pairs<R: std::io::Read>(r: R) -> Result<Vec<MatchedPair>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(PAIRS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", PAIRS_HEADER.join(",")),
        });
    }
    rdr.deserialize().map(|row| Ok(row?)).collect()
}

pub fn load_pairs(path: &Path) -> Result<Vec<MatchedPair>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_pairs(f)
}
