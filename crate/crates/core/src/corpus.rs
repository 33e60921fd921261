//! Resume, job and application records, and the line-delimited corpus file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_YEARS_EXPERIENCE: u32 = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    /// Label used by the gender classifiers: Male = 1, Female = 0.
    pub fn label(self) -> u8 {
        match self {
            Gender::Male => 1,
            Gender::Female => 0,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Degree {
    Associate,
    Bachelors,
    Masters,
    Doctorate,
}

impl Degree {
    pub const ALL: [Degree; 4] = [
        Degree::Associate,
        Degree::Bachelors,
        Degree::Masters,
        Degree::Doctorate,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Technical,
    Science,
    Business,
    Law,
    Other,
}

impl Field {
    pub const ALL: [Field; 5] = [
        Field::Technical,
        Field::Science,
        Field::Business,
        Field::Law,
        Field::Other,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resume {
    pub id: String,
    pub applicant_name: String,
    pub gender: Gender,
    pub years_experience: u32,
    pub degree: Degree,
    pub field_of_study: Field,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobPosting {
    pub id: String,
    pub company: String,
    pub job_name: String,
    pub business_unit: String,
    pub employment_type: String,
    pub location: String,
    pub skills: Vec<String>,
    pub keywords: Vec<String>,
    /// Applicant source as recorded by the ATS, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Application {
    pub resume_id: String,
    pub job_id: String,
    pub callback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Resume(Resume),
    Job(JobPosting),
    Application(Application),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub resumes: Vec<Resume>,
    pub jobs: Vec<JobPosting>,
    pub applications: Vec<Application>,
}

impl Corpus {
    pub fn new(
        resumes: Vec<Resume>,
        jobs: Vec<JobPosting>,
        applications: Vec<Application>,
    ) -> Result<Self> {
        let c = Corpus {
            resumes,
            jobs,
            applications,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut resume_ids = BTreeSet::new();
        for r in &self.resumes {
            validate_resume(r)?;
            if !resume_ids.insert(r.id.as_str()) {
                return Err(Error::InvalidRecord(format!("duplicate resume id {:?}", r.id)));
            }
        }
        let mut job_ids = BTreeSet::new();
        for j in &self.jobs {
            if !job_ids.insert(j.id.as_str()) {
                return Err(Error::InvalidRecord(format!("duplicate job id {:?}", j.id)));
            }
        }
        let mut pairs = BTreeSet::new();
        for a in &self.applications {
            if !resume_ids.contains(a.resume_id.as_str()) {
                return Err(Error::DanglingReference {
                    kind: "resume",
                    id: a.resume_id.clone(),
                });
            }
            if !job_ids.contains(a.job_id.as_str()) {
                return Err(Error::DanglingReference {
                    kind: "job",
                    id: a.job_id.clone(),
                });
            }
            if !pairs.insert((a.resume_id.as_str(), a.job_id.as_str())) {
                return Err(Error::InvalidRecord(format!(
                    "more than one application for resume {:?} and job {:?}",
                    a.resume_id, a.job_id
                )));
            }
        }
        Ok(())
    }

    pub fn resume_index(&self) -> BTreeMap<&str, &Resume> {
        self.resumes.iter().map(|r| (r.id.as_str(), r)).collect()
    }

    pub fn job_index(&self) -> BTreeMap<&str, &JobPosting> {
        self.jobs.iter().map(|j| (j.id.as_str(), j)).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let records = self
            .resumes
            .iter()
            .cloned()
            .map(Record::Resume)
            .chain(self.jobs.iter().cloned().map(Record::Job))
            .chain(self.applications.iter().cloned().map(Record::Application));
        for rec in records {
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }
}

fn validate_resume(r: &Resume) -> Result<()> {
    if r.id.is_empty() {
        return Err(Error::InvalidRecord("resume with empty id".into()));
    }
    if r.raw_text.trim().is_empty() {
        return Err(Error::InvalidRecord(format!("resume {:?}: raw_text is empty", r.id)));
    }
    if r.years_experience > MAX_YEARS_EXPERIENCE {
        return Err(Error::InvalidRecord(format!(
            "resume {:?}: years_experience {} exceeds {MAX_YEARS_EXPERIENCE}",
            r.id, r.years_experience
        )));
    }
    Ok(())
}

/// Reads a corpus file: one JSON object per line with a `kind` of
/// `resume`, `job` or `application`. Blank lines are skipped.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        e => e,
    })
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        match rec {
            Record::Resume(r) => {
                validate_resume(&r).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                corpus.resumes.push(r)
            }
            Record::Job(j) => corpus.jobs.push(j),
            Record::Application(a) => corpus.applications.push(a),
        }
    }
    corpus.validate()?;
    Ok(corpus)
}
