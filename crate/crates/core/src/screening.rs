//! Callback-prediction model over assembled job + resume documents.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    fit_tfidf, predict_proba, train_logistic, FeatureSpace, LinearModel, ModelFile, SparseVec, TfIdfVectorizer,
    TrainConfig,
};
use crate::corpus::{Application, Corpus, JobPosting, Resume};
use crate::error::{Error, Result};
use crate::lexicon::Redactor;
use crate::text::{tokenize, TokenStream, DEL};

/// Job sections in document order; `source` is only written when present.
pub const JOB_SECTIONS: [&str; 7] = [
    "job_name",
    "business_unit",
    "job_loc",
    "job_skills",
    "job_keywords",
    "employment_type",
    "source",
];

pub const RESUME_SECTION: &str = "resume";

/// Job values are single lines; embedded line breaks become spaces.
fn one_line(s: &str) -> String {
    s.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}

fn job_values(job: &JobPosting) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("job_name", Some(one_line(&job.job_name))),
        ("business_unit", Some(one_line(&job.business_unit))),
        ("job_loc", Some(one_line(&job.location))),
        ("job_skills", Some(one_line(&job.skills.join(", ")))),
        ("job_keywords", Some(one_line(&job.keywords.join(", ")))),
        ("employment_type", Some(one_line(&job.employment_type))),
        ("source", job.source.as_deref().map(one_line)),
    ]
}

/// Company line, then one `key=\nvalue` block per job section, then
/// `resume=\n` followed by the resume text verbatim.
pub fn assemble_document(resume: &Resume, job: &JobPosting) -> String {
    assemble_with_text(&resume.raw_text, job)
}

fn assemble_with_text(resume_text: &str, job: &JobPosting) -> String {
    let mut doc = one_line(&job.company);
    doc.push('\n');
    for (key, value) in job_values(job) {
        if let Some(v) = value {
            doc.push_str(key);
            doc.push_str("=\n");
            doc.push_str(&v);
            doc.push('\n');
        }
    }
    doc.push_str(RESUME_SECTION);
    doc.push_str("=\n");
    doc.push_str(resume_text);
    doc
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDocument {
    pub company: String,
    /// Job sections in document order.
    pub sections: Vec<(String, String)>,
    pub resume: String,
}

impl ParsedDocument {
    pub fn section(&self, key: &str) -> Option<&str> {
        self.sections.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn parse_document(doc: &str) -> Result<ParsedDocument> {
    let bad = |line: usize, message: String| Error::Parse { line, message };
    let (company, mut rest) = doc
        .split_once('\n')
        .ok_or_else(|| bad(1, "missing company line".into()))?;
    let mut sections = Vec::new();
    let mut line = 2;
    loop {
        let (header, after) = rest
            .split_once('\n')
            .ok_or_else(|| bad(line, "missing section header".into()))?;
        let key = header
            .strip_suffix('=')
            .ok_or_else(|| bad(line, format!("expected \"key=\", got {header:?}")))?;
        if key == RESUME_SECTION {
            return Ok(ParsedDocument {
                company: company.to_string(),
                sections,
                resume: after.to_string(),
            });
        }
        if !JOB_SECTIONS.contains(&key) || sections.iter().any(|(k, _)| k == key) {
            return Err(bad(line, format!("unexpected section {key:?}")));
        }
        let (value, after) = after
            .split_once('\n')
            .ok_or_else(|| bad(line + 1, format!("missing value for {key}")))?;
        sections.push((key.to_string(), value.to_string()));
        rest = after;
        line += 2;
    }
}

/// Tokens of an assembled document. Job-side tokens carry their section
/// key as a prefix (`job_skills=python`), so a skill the job asks for and a
/// skill the resume lists are separate features; resume tokens are bare.
pub fn document_tokens(doc: &str) -> Result<TokenStream> {
    let parsed = parse_document(doc)?;
    let mut tokens: Vec<String> = tokenize(&parsed.company)
        .tokens
        .into_iter()
        .filter(|t| t != DEL)
        .map(|t| format!("company={t}"))
        .collect();
    for (key, v) in &parsed.sections {
        tokens.extend(
            tokenize(v)
                .tokens
                .into_iter()
                .filter(|t| t != DEL)
                .map(|t| format!("{key}={t}")),
        );
    }
    tokens.extend(tokenize(&parsed.resume).tokens);
    Ok(TokenStream::from_tokens(tokens))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningInstance {
    pub application: Application,
    pub resume: Resume,
    pub job: JobPosting,
    pub document: String,
    pub label: bool,
}

impl ScreeningInstance {
    pub fn new(application: &Application, resume: &Resume, job: &JobPosting) -> Self {
        ScreeningInstance {
            application: application.clone(),
            resume: resume.clone(),
            job: job.clone(),
            document: assemble_document(resume, job),
            label: application.callback,
        }
    }

    /// Document with the redactor applied to the resume section only.
    pub fn redacted_document(&self, redactor: Option<&Redactor>) -> String {
        match redactor {
            None => self.document.clone(),
            Some(r) => assemble_with_text(&r.redact_text(&self.resume.raw_text, &self.resume.applicant_name), &self.job),
        }
    }
}

/// Instances for the applications whose resume passes `keep`, in
/// application order.
pub fn build_instances(corpus: &Corpus, keep: impl Fn(&Resume) -> bool) -> Result<Vec<ScreeningInstance>> {
    let resumes = corpus.resume_index();
    let jobs = corpus.job_index();
    let mut out = Vec::new();
    for a in &corpus.applications {
        let r = resumes.get(a.resume_id.as_str()).ok_or_else(|| Error::DanglingReference {
            kind: "resume",
            id: a.resume_id.clone(),
        })?;
        let j = jobs.get(a.job_id.as_str()).ok_or_else(|| Error::DanglingReference {
            kind: "job",
            id: a.job_id.clone(),
        })?;
        if keep(r) {
            out.push(ScreeningInstance::new(a, r, j));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningModel {
    pub vectorizer: TfIdfVectorizer,
    pub model: LinearModel,
}

impl ScreeningModel {
    pub fn featurize(&self, document: &str) -> Result<SparseVec> {
        Ok(self.vectorizer.transform(&document_tokens(document)?))
    }

    pub fn score_document(&self, document: &str) -> Result<f64> {
        predict_proba(&self.model, &self.featurize(document)?)
    }

    pub fn to_model_file(&self, config: TrainConfig) -> ModelFile {
        ModelFile {
            model: self.model.clone(),
            vectorizer: Some(self.vectorizer.clone()),
            config,
        }
    }

    pub fn from_model_file(file: ModelFile) -> Result<Self> {
        let vectorizer = file
            .vectorizer
            .ok_or_else(|| Error::InvalidInput("screening model file has no vocabulary".into()))?;
        Ok(ScreeningModel {
            vectorizer,
            model: file.model,
        })
    }
}

pub fn train_screening(instances: &[ScreeningInstance], cfg: &TrainConfig, min_df: usize) -> Result<ScreeningModel> {
    if instances.is_empty() {
        return Err(Error::InvalidInput("no screening instances".into()));
    }
    let labels: Vec<u8> = instances.iter().map(|i| u8::from(i.label)).collect();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::SingleClass);
    }
    let docs: Vec<TokenStream> = instances
        .par_iter()
        .map(|i| document_tokens(&i.document))
        .collect::<Result<_>>()?;
    let vectorizer = fit_tfidf(&docs, min_df)?;
    let x: Vec<SparseVec> = docs.par_iter().map(|d| vectorizer.transform(d)).collect();
    let model = train_logistic(&x, &labels, FeatureSpace::Tfidf { vocab_size: vectorizer.len() }, cfg)?;
    Ok(ScreeningModel { vectorizer, model })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredApplication {
    pub resume_id: String,
    pub job_id: String,
    pub score: f64,
    pub callback: bool,
}

/// Scores instances with a fixed model after redacting each resume section.
/// Job fields are never redacted and the model is never modified.
pub fn score_applications(
    model: &ScreeningModel,
    instances: &[ScreeningInstance],
    redactor: Option<&Redactor>,
) -> Result<Vec<ScoredApplication>> {
    instances
        .par_iter()
        .map(|i| {
            Ok(ScoredApplication {
                resume_id: i.application.resume_id.clone(),
                job_id: i.application.job_id.clone(),
                score: model.score_document(&i.redacted_document(redactor))?,
                callback: i.label,
            })
        })
        .collect()
}

pub const SCORES_HEADER: [&str; 4] = ["resume_id", "job_id", "score", "callback"];

pub fn write_scores<W: Write>(scores: &[ScoredApplication], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCORES_HEADER)?;
    for s in scores {
        out.write_record([
            s.resume_id.as_str(),
            s.job_id.as_str(),
            &s.score.to_string(),
            if s.callback { "true" } else { "false" },
        ])?;
    }
    out.flush().map_err(|e| Error::io("<scores>", e))?;
    Ok(())
}

pub fn save_scores(scores: &[ScoredApplication], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_scores(scores, std::io::BufWriter::new(f))
}

pub fn read_scores<R: std::io::Read>(r: R) -> Result<Vec<ScoredApplication>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(SCORES_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", SCORES_HEADER.join(",")),
        });
    }
    rdr.deserialize().map(|row| Ok(row?)).collect()
}
