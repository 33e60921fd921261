//! End-to-end workflow: embeddings and matching, split, base redaction,
//! model training, attribution, and the obfuscation ladder. Each stage reads
//! its inputs from files and writes its outputs plus a run manifest into an
//! output directory, so running the stages one by one gives the same files
//! as running the whole pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{load_ranking, rank_features, save_ranking, FeatureRanking, LinearExplainer, MaleSign};
use crate::classifier::{
    fit_tfidf, mean_vector, predict_proba, select_alpha, split, split_pairs, Dataset, FeatureSpace, ModelFile,
    SparseVec, Split, SplitSpec, SplitUnit, TextClassifier, TrainConfig, DEFAULT_ALPHAS, DEFAULT_MIN_DF,
};
use crate::corpus::{load_corpus, Corpus, Gender, Resume};
use crate::embeddings::{
    default_pairs, document_vector, gender_direction, mean_embedding, hard_debias, train_skipgram, EmbeddingModel, Pooling,
    SkipGramConfig, DEFINITIONAL_PAIRS,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    auroc, emit_tradeoff, evaluate, percent_grid, run_ladder, sparkline, EvalReport, LadderInputs, LadderOptions,
    LadderRow, RetrainData, DEFAULT_GRID_PERCENT,
};
use crate::lexicon::{Lexicon, LexiconSet, RedactionPlan, Redactor};
use crate::matching::{load_pairs, match_corpus, save_pairs, MatchConfig, MatchedPair};
use crate::screening::{build_instances, document_tokens, ScreeningInstance, ScreeningModel};
use crate::seed::{derive_seed, sha256_hex};
use crate::synth::{generate_synthetic, SynthConfig};
use crate::text::tokenize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EMBEDDINGS_FILE: &str = "embeddings.vec";
pub const PAIRS_FILE: &str = "pairs.csv";
pub const SPLIT_FILE: &str = "split.json";
pub const GENDER_MODEL_FILE: &str = "gender_model.json";
pub const SCREENING_MODEL_FILE: &str = "screening_model.json";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const RANKING_FILE: &str = "ranking.csv";
pub const TRADEOFF_FILE: &str = "tradeoff.csv";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";
pub const EMBEDDING_COMPARISON_FILE: &str = "embedding_comparison.json";
pub const FAILED_MARKER: &str = "FAILED";

/// One ladder grid entry: an absolute count, a percentage of the ranked
/// features, or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridEntry {
    Count(usize),
    Percent(f64),
    All,
}

impl FromStr for GridEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("invalid grid entry {s:?}"));
        if s == "all" {
            return Ok(GridEntry::All);
        }
        if let Some(p) = s.strip_suffix('%') {
            let v: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(v > 0.0 && v <= 100.0) {
                return Err(bad());
            }
            return Ok(GridEntry::Percent(v));
        }
        s.parse().map(GridEntry::Count).map_err(|_| bad())
    }
}

impl fmt::Display for GridEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridEntry::Count(k) => write!(f, "{k}"),
            GridEntry::Percent(p) => write!(f, "{p}%"),
            GridEntry::All => f.write_str("all"),
        }
    }
}

pub fn parse_grid(spec: &str) -> Result<Vec<GridEntry>> {
    spec.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

pub fn default_grid() -> Vec<GridEntry> {
    DEFAULT_GRID_PERCENT.iter().map(|&p| GridEntry::Percent(p)).collect()
}

/// Concrete ascending `k` values, always starting with the `k = 0` row.
pub fn resolve_grid(grid: &[GridEntry], n_ranked: usize) -> Vec<usize> {
    let mut ks = vec![0];
    for e in grid {
        ks.extend(match *e {
            GridEntry::Count(k) => vec![k],
            GridEntry::Percent(p) if n_ranked > 0 => percent_grid(&[p], n_ranked),
            GridEntry::Percent(_) => vec![],
            GridEntry::All => vec![n_ranked],
        });
    }
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Everything the analysis stages need, echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Base redaction plan, e.g. `pii,gender_words,hobbies`.
    pub plan: String,
    pub grid: Vec<GridEntry>,
    pub alphas: Vec<f64>,
    pub mixing_lambda: f64,
    pub min_df: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub skipgram: SkipGramConfig,
    pub matching: MatchConfig,
    /// Build the matched sample before splitting; otherwise every resume is
    /// used and split individually.
    pub use_matching: bool,
    pub split_fractions: (f64, f64, f64),
    /// Retrain both models at every ladder step instead of reusing the
    /// fixed models.
    pub retrain: bool,
    pub jsonl: bool,
    /// Replacement or additional lexicon files by name.
    pub lexicons: BTreeMap<String, PathBuf>,
    /// Compare raw and debiased embeddings for the embedding classifier.
    pub embedding_comparison: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            plan: "pii,gender_words,hobbies".into(),
            grid: default_grid(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            mixing_lambda: 0.5,
            min_df: DEFAULT_MIN_DF,
            max_iters: 1000,
            tolerance: 1e-8,
            skipgram: SkipGramConfig::default(),
            matching: MatchConfig::default(),
            use_matching: true,
            split_fractions: (0.8, 0.1, 0.1),
            retrain: false,
            jsonl: false,
            lexicons: BTreeMap::new(),
            embedding_comparison: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.base_plan()?;
        self.train_config().validate()?;
        self.skipgram.validate()?;
        self.matching.validate()?;
        self.split_spec().validate()?;
        if self.alphas.is_empty() {
            return Err(Error::InvalidConfig("at least one alpha candidate is required".into()));
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidConfig("alpha candidates must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn base_plan(&self) -> Result<RedactionPlan> {
        RedactionPlan::parse(&self.plan)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alphas.first().copied().unwrap_or(0.0),
            mixing_lambda: self.mixing_lambda,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            fractions: self.split_fractions,
            seed: derive_seed(self.seed, "split"),
            unit: if self.use_matching {
                SplitUnit::MatchedPair
            } else {
                SplitUnit::Resume
            },
        }
    }

    pub fn skipgram_config(&self) -> SkipGramConfig {
        SkipGramConfig {
            seed: derive_seed(self.seed, "embeddings"),
            ..self.skipgram
        }
    }

    pub fn lexicon_set(&self) -> Result<LexiconSet> {
        let mut set = LexiconSet::bundled();
        for (name, path) in &self.lexicons {
            set.insert(Lexicon::load(name.clone(), path)?);
        }
        Ok(set)
    }

    pub fn skills_lexicon(&self) -> Result<Lexicon> {
        self.lexicon_set()?
            .get("skills")
            .cloned()
            .ok_or_else(|| Error::UnknownLexicon("skills".into()))
    }
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: Invocation,
    pub seed: u64,
    pub input_hashes: BTreeMap<String, String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A fully resolved command, replayable from its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Synth {
        config: SynthConfig,
        out: PathBuf,
    },
    Redact {
        corpus: PathBuf,
        plan: String,
        lexicons: BTreeMap<String, PathBuf>,
        out: PathBuf,
    },
    Match {
        corpus: PathBuf,
        out_dir: PathBuf,
        config: PipelineConfig,
    },
    Train {
        corpus: PathBuf,
        pairs: Option<PathBuf>,
        out_dir: PathBuf,
        config: PipelineConfig,
    },
    Attribute {
        corpus: PathBuf,
        split: PathBuf,
        model: PathBuf,
        out_dir: PathBuf,
        config: PipelineConfig,
    },
    Eval {
        corpus: PathBuf,
        split: PathBuf,
        gender_model: PathBuf,
        screening_model: PathBuf,
        ranking: PathBuf,
        embeddings: Option<PathBuf>,
        out_dir: PathBuf,
        config: PipelineConfig,
    },
    Pipeline {
        corpus: PathBuf,
        out_dir: PathBuf,
        config: PipelineConfig,
    },
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Synth { .. } => "synth",
            Invocation::Redact { .. } => "redact",
            Invocation::Match { .. } => "match",
            Invocation::Train { .. } => "train",
            Invocation::Attribute { .. } => "attribute",
            Invocation::Eval { .. } => "eval",
            Invocation::Pipeline { .. } => "pipeline",
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Invocation::Synth { config, .. } => config.seed,
            Invocation::Redact { .. } => 0,
            Invocation::Match { config, .. }
            | Invocation::Train { config, .. }
            | Invocation::Attribute { config, .. }
            | Invocation::Eval { config, .. }
            | Invocation::Pipeline { config, .. } => config.seed,
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        match self {
            Invocation::Synth { .. } => vec![],
            Invocation::Redact { corpus, lexicons, .. } => {
                let mut v = vec![corpus.as_path()];
                v.extend(lexicons.values().map(PathBuf::as_path));
                v
            }
            Invocation::Match { corpus, config, .. } | Invocation::Pipeline { corpus, config, .. } => {
                let mut v = vec![corpus.as_path()];
                v.extend(config.lexicons.values().map(PathBuf::as_path));
                v
            }
            Invocation::Train { corpus, pairs, .. } => {
                let mut v = vec![corpus.as_path()];
                v.extend(pairs.as_deref());
                v
            }
            Invocation::Attribute { corpus, split, model, .. } => vec![corpus, split, model],
            Invocation::Eval {
                corpus,
                split,
                gender_model,
                screening_model,
                ranking,
                embeddings,
                ..
            } => {
                let mut v = vec![corpus.as_path(), split, gender_model, screening_model, ranking];
                v.extend(embeddings.as_deref());
                v
            }
        }
    }

    /// Where the manifest (and, on error, the failure marker) goes.
    fn manifest_path(&self) -> PathBuf {
        match self {
            Invocation::Synth { out, .. } | Invocation::Redact { out, .. } => {
                let mut s = out.clone().into_os_string();
                s.push(".manifest.json");
                PathBuf::from(s)
            }
            Invocation::Match { out_dir, .. }
            | Invocation::Train { out_dir, .. }
            | Invocation::Attribute { out_dir, .. }
            | Invocation::Eval { out_dir, .. }
            | Invocation::Pipeline { out_dir, .. } => out_dir.join(format!("{}.manifest.json", self.name())),
        }
    }

    fn out_dir(&self) -> Option<&Path> {
        match self {
            Invocation::Synth { .. } | Invocation::Redact { .. } => None,
            Invocation::Match { out_dir, .. }
            | Invocation::Train { out_dir, .. }
            | Invocation::Attribute { out_dir, .. }
            | Invocation::Eval { out_dir, .. }
            | Invocation::Pipeline { out_dir, .. } => Some(out_dir),
        }
    }

    fn manifest(&self) -> Result<RunManifest> {
        let mut input_hashes = BTreeMap::new();
        for p in self.inputs() {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            input_hashes.insert(p.display().to_string(), sha256_hex(&bytes));
        }
        Ok(RunManifest {
            command: self.name().to_string(),
            config_echo: self.clone(),
            seed: self.seed(),
            input_hashes,
            tool_version: TOOL_VERSION.to_string(),
        })
    }

    /// Runs the command, then writes its manifest. On failure inside an
    /// output directory, partial outputs stay and a `FAILED` marker names
    /// the stage.
    pub fn run(&self) -> Result<()> {
        if let Some(dir) = self.out_dir() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let marker = dir.join(FAILED_MARKER);
            if marker.exists() {
                std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            }
        }
        let result = self.execute();
        match (&result, self.out_dir()) {
            (Err(e), Some(dir)) => {
                let marker = dir.join(FAILED_MARKER);
                let _ = std::fs::write(&marker, format!("{e}\n"));
            }
            (Ok(()), _) => {
                let path = self.manifest_path();
                let text = serde_json::to_string_pretty(&self.manifest()?)?;
                std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
            }
            _ => {}
        }
        result
    }

    fn execute(&self) -> Result<()> {
        match self {
            Invocation::Synth { config, out } => {
                let corpus = generate_synthetic(config).map_err(|e| e.in_stage("synth"))?;
                corpus.write(out)
            }
            Invocation::Redact {
                corpus,
                plan,
                lexicons,
                out,
            } => {
                let config = PipelineConfig {
                    plan: plan.clone(),
                    lexicons: lexicons.clone(),
                    ..PipelineConfig::default()
                };
                redact_corpus_file(corpus, &config, out).map_err(|e| e.in_stage("redact"))
            }
            Invocation::Match {
                corpus,
                out_dir,
                config,
            } => stage_match(corpus, out_dir, config).map(|_| ()),
            Invocation::Train {
                corpus,
                pairs,
                out_dir,
                config,
            } => stage_train(corpus, pairs.as_deref(), out_dir, config).map(|_| ()),
            Invocation::Attribute {
                corpus,
                split,
                model,
                out_dir,
                config,
            } => stage_attribute(corpus, split, model, out_dir, config).map(|_| ()),
            Invocation::Eval {
                corpus,
                split,
                gender_model,
                screening_model,
                ranking,
                embeddings,
                out_dir,
                config,
            } => stage_eval(
                &EvalPaths {
                    corpus,
                    split,
                    gender_model,
                    screening_model,
                    ranking,
                    embeddings: embeddings.as_deref(),
                },
                out_dir,
                config,
            )
            .map(|_| ()),
            Invocation::Pipeline {
                corpus,
                out_dir,
                config,
            } => run_pipeline(corpus, out_dir, config).map(|_| ()),
        }
    }
}

/// Re-executes the command recorded in a manifest.
pub fn rerun(manifest_path: &Path) -> Result<()> {
    RunManifest::load(manifest_path)?.config_echo.run()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn redact_corpus(corpus: &Corpus, redactor: &Redactor) -> Result<Corpus> {
    let resumes: Vec<Resume> = corpus.resumes.par_iter().map(|r| redactor.apply(r)).collect();
    Corpus::new(resumes, corpus.jobs.clone(), corpus.applications.clone())
}

fn redact_corpus_file(corpus: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    let c = load_corpus(corpus)?;
    let redactor = Redactor::new(&config.base_plan()?, &config.lexicon_set()?)?;
    redact_corpus(&c, &redactor)?.write(out)
}

#[derive(Debug, Clone)]
pub struct MatchOutput {
    pub embeddings: EmbeddingModel,
    pub pairs: Option<Vec<MatchedPair>>,
}

/// Trains skip-gram embeddings on the resume texts and, when matching is
/// enabled, builds the matched sample from skill-space resume vectors.
pub fn stage_match(corpus_path: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<MatchOutput> {
    let inner = || -> Result<MatchOutput> {
        config.validate()?;
        let corpus = load_corpus(corpus_path)?;
        let docs: Vec<_> = corpus.resumes.par_iter().map(|r| tokenize(&r.raw_text)).collect();
        let embeddings = train_skipgram(&docs, &config.skipgram_config())?;
        embeddings.save(&out_dir.join(EMBEDDINGS_FILE))?;
        let pairs = if config.use_matching {
            let skills = config.skills_lexicon()?;
            let vectors: BTreeMap<String, _> = corpus
                .resumes
                .par_iter()
                .zip(&docs)
                .map(|(r, d)| (r.id.clone(), document_vector(&r.id, d, &embeddings, Pooling::SkillTokens, &skills)))
                .collect::<Vec<_>>()
                .into_iter()
                .collect();
            let pairs = match_corpus(&corpus.resumes, &vectors, &config.matching)?;
            log::info!("matched {} pairs from {} resumes", pairs.len(), corpus.resumes.len());
            save_pairs(&pairs, &out_dir.join(PAIRS_FILE))?;
            Some(pairs)
        } else {
            None
        };
        Ok(MatchOutput { embeddings, pairs })
    };
    inner().map_err(|e| e.in_stage("match"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_eval: usize,
    pub n_test: usize,
    pub gender_alpha: f64,
    /// `(alpha, eval AUROC)` per candidate.
    pub gender_alpha_scores: Vec<(f64, f64)>,
    pub screening_alpha: Option<f64>,
    pub screening_alpha_scores: Vec<(f64, f64)>,
    pub gender_vocab_size: usize,
    pub screening_vocab_size: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub split: Split<String>,
    pub gender: TextClassifier,
    pub screening: Option<ScreeningModel>,
    pub report: TrainReport,
}

fn slice_split(corpus: &Corpus, pairs: Option<&[MatchedPair]>, config: &PipelineConfig) -> Result<Split<String>> {
    match pairs {
        Some(pairs) => {
            let p: Vec<(String, String)> = pairs.iter().map(|p| (p.male_id.clone(), p.female_id.clone())).collect();
            split_pairs(&p, &config.split_spec())
        }
        None => {
            let ids: Vec<String> = corpus.resumes.iter().map(|r| r.id.clone()).collect();
            split(&ids, &SplitSpec {
                unit: SplitUnit::Resume,
                ..config.split_spec()
            })
        }
    }
}

fn resumes_by_ids<'a>(corpus: &'a Corpus, ids: &[String]) -> Result<Vec<&'a Resume>> {
    let idx = corpus.resume_index();
    ids.iter()
        .map(|id| {
            idx.get(id.as_str()).copied().ok_or_else(|| Error::DanglingReference {
                kind: "resume",
                id: id.clone(),
            })
        })
        .collect()
}

fn base_redacted(resumes: &[&Resume], redactor: &Redactor) -> Vec<Resume> {
    resumes.par_iter().map(|r| redactor.apply(r)).collect()
}

fn gender_labels(resumes: &[Resume]) -> Vec<u8> {
    resumes.iter().map(|r| r.gender.label()).collect()
}

/// Selected classifier, its alpha, and `(alpha, eval AUROC)` per candidate.
type Selected = (TextClassifier, f64, Vec<(f64, f64)>);

/// Fits Tf-Idf on the training documents and picks alpha on the eval slice.
fn fit_selected(
    train_docs: &[crate::text::TokenStream],
    train_y: &[u8],
    eval_docs: &[crate::text::TokenStream],
    eval_y: &[u8],
    config: &PipelineConfig,
) -> Result<Selected> {
    let vectorizer = fit_tfidf(train_docs, config.min_df)?;
    let xt: Vec<SparseVec> = train_docs.par_iter().map(|d| vectorizer.transform(d)).collect();
    let xe: Vec<SparseVec> = eval_docs.par_iter().map(|d| vectorizer.transform(d)).collect();
    let sel = select_alpha(
        &config.alphas,
        Dataset { x: &xt, y: train_y },
        Dataset { x: &xe, y: eval_y },
        FeatureSpace::Tfidf {
            vocab_size: vectorizer.len(),
        },
        &config.train_config(),
    )?;
    Ok((
        TextClassifier {
            vectorizer,
            model: sel.model,
        },
        sel.alpha,
        sel.scores,
    ))
}

fn instances_for(corpus: &Corpus, ids: &[String], redactor: &Redactor) -> Result<Vec<ScreeningInstance>> {
    let keep: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    let raw = build_instances(corpus, |r| keep.contains(r.id.as_str()))?;
    Ok(raw
        .par_iter()
        .map(|i| ScreeningInstance::new(&i.application, &redactor.apply(&i.resume), &i.job))
        .collect())
}

fn has_both(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

/// Splits, applies the base plan, and trains the gender and screening
/// models with alpha chosen on the eval slice.
pub fn stage_train(
    corpus_path: &Path,
    pairs_path: Option<&Path>,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<TrainOutput> {
    let inner = || -> Result<TrainOutput> {
        config.validate()?;
        let corpus = load_corpus(corpus_path)?;
        let pairs = pairs_path.map(load_pairs).transpose()?;
        let split = slice_split(&corpus, pairs.as_deref(), config)?;
        let redactor = Redactor::new(&config.base_plan()?, &config.lexicon_set()?)?;

        let train = base_redacted(&resumes_by_ids(&corpus, &split.train)?, &redactor);
        let eval = base_redacted(&resumes_by_ids(&corpus, &split.eval)?, &redactor);
        let train_docs: Vec<_> = train.par_iter().map(|r| tokenize(&r.raw_text)).collect();
        let eval_docs: Vec<_> = eval.par_iter().map(|r| tokenize(&r.raw_text)).collect();
        let (gender, gender_alpha, gender_alpha_scores) = fit_selected(
            &train_docs,
            &gender_labels(&train),
            &eval_docs,
            &gender_labels(&eval),
            config,
        )?;

        let tr_inst = instances_for(&corpus, &split.train, &redactor)?;
        let ev_inst = instances_for(&corpus, &split.eval, &redactor)?;
        let tr_y: Vec<u8> = tr_inst.iter().map(|i| u8::from(i.label)).collect();
        let ev_y: Vec<u8> = ev_inst.iter().map(|i| u8::from(i.label)).collect();
        let (screening, screening_alpha, screening_alpha_scores) = if has_both(&tr_y) && has_both(&ev_y) {
            let td: Vec<_> = tr_inst
                .par_iter()
                .map(|i| document_tokens(&i.document))
                .collect::<Result<_>>()?;
            let ed: Vec<_> = ev_inst
                .par_iter()
                .map(|i| document_tokens(&i.document))
                .collect::<Result<_>>()?;
            let (m, a, s) = fit_selected(&td, &tr_y, &ed, &ev_y, config)?;
            (
                Some(ScreeningModel {
                    vectorizer: m.vectorizer,
                    model: m.model,
                }),
                Some(a),
                s,
            )
        } else {
            log::warn!("callback labels lack one class in train or eval; skipping the screening model");
            (None, None, Vec::new())
        };

        let report = TrainReport {
            n_train: split.train.len(),
            n_eval: split.eval.len(),
            n_test: split.test.len(),
            gender_alpha,
            gender_alpha_scores,
            screening_alpha,
            screening_alpha_scores,
            gender_vocab_size: gender.vectorizer.len(),
            screening_vocab_size: screening.as_ref().map(|s| s.vectorizer.len()),
        };
        write_json(&out_dir.join(SPLIT_FILE), &split)?;
        gender
            .to_model_file(config.train_config().with_alpha(gender_alpha))
            .save(&out_dir.join(GENDER_MODEL_FILE))?;
        let screening_path = out_dir.join(SCREENING_MODEL_FILE);
        match (&screening, screening_alpha) {
            (Some(s), Some(a)) => s.to_model_file(config.train_config().with_alpha(a)).save(&screening_path)?,
            _ => write_json(&screening_path, &serde_json::Value::Null)?,
        }
        write_json(&out_dir.join(TRAIN_REPORT_FILE), &report)?;
        Ok(TrainOutput {
            split,
            gender,
            screening,
            report,
        })
    };
    inner().map_err(|e| e.in_stage("train"))
}

fn load_text_classifier(path: &Path) -> Result<TextClassifier> {
    TextClassifier::from_model_file(ModelFile::load(path)?)
}

fn load_screening(path: &Path) -> Result<Option<ScreeningModel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim() == "null" {
        return Ok(None);
    }
    ScreeningModel::from_model_file(ModelFile::from_json(&text)?).map(Some)
}

/// Exact linear attributions of the gender model on the (base-redacted)
/// training slice, aggregated into a ranking.
pub fn stage_attribute(
    corpus_path: &Path,
    split_path: &Path,
    model_path: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<FeatureRanking> {
    let inner = || -> Result<FeatureRanking> {
        config.validate()?;
        let corpus = load_corpus(corpus_path)?;
        let split: Split<String> = read_json(split_path)?;
        let gender = load_text_classifier(model_path)?;
        let redactor = Redactor::new(&config.base_plan()?, &config.lexicon_set()?)?;
        let train = base_redacted(&resumes_by_ids(&corpus, &split.train)?, &redactor);
        let docs: Vec<_> = train.par_iter().map(|r| tokenize(&r.raw_text)).collect();
        let rows: Vec<SparseVec> = docs.par_iter().map(|d| gender.vectorizer.transform(d)).collect();
        let background = mean_vector(&rows, gender.vectorizer.len());
        let explainer = LinearExplainer::new(&gender.model, &gender.vectorizer, &background)?;
        let attrs: Vec<_> = train
            .par_iter()
            .zip(&docs)
            .map(|(r, d)| explainer.explain(&r.id, d))
            .collect();
        let ranking = rank_features(&attrs, MaleSign::Positive)?;
        save_ranking(&ranking, &out_dir.join(RANKING_FILE))?;
        Ok(ranking)
    };
    inner().map_err(|e| e.in_stage("attribute"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EmbeddingComparison {
    Completed {
        raw_auroc: f64,
        debiased_auroc: f64,
        /// `debiased - raw`.
        delta: f64,
        pairs_used: Vec<(String, String)>,
        flagged_tokens: Vec<String>,
    },
    Skipped {
        reason: String,
    },
}

fn embedding_features(model: &EmbeddingModel, resumes: &[Resume]) -> Vec<SparseVec> {
    resumes
        .par_iter()
        .map(|r| {
            let tokens = tokenize(&r.raw_text);
            SparseVec::dense(&mean_embedding(model, tokens.iter()).0)
        })
        .collect()
}

fn embedding_auroc(
    model: &EmbeddingModel,
    train: &[Resume],
    eval: &[Resume],
    test: &[Resume],
    config: &PipelineConfig,
) -> Result<f64> {
    let dim = model.dim();
    let (xt, xe, xs) = (
        embedding_features(model, train),
        embedding_features(model, eval),
        embedding_features(model, test),
    );
    let sel = select_alpha(
        &config.alphas,
        Dataset {
            x: &xt,
            y: &gender_labels(train),
        },
        Dataset {
            x: &xe,
            y: &gender_labels(eval),
        },
        FeatureSpace::Embedding { dim },
        &config.train_config(),
    )?;
    let scores: Vec<f64> = xs.iter().map(|x| predict_proba(&sel.model, x)).collect::<Result<_>>()?;
    auroc(&scores, &gender_labels(test))
}

/// Embedding-mean + logistic gender classifier on raw and on hard-debiased
/// embeddings, evaluated on the test slice.
pub fn compare_embeddings(
    embeddings: &EmbeddingModel,
    train: &[Resume],
    eval: &[Resume],
    test: &[Resume],
    config: &PipelineConfig,
) -> Result<EmbeddingComparison> {
    let direction = match gender_direction(embeddings, &default_pairs()) {
        Ok(d) => d,
        Err(_) => {
            return Ok(EmbeddingComparison::Skipped {
                reason: "no definitional pair is in the embedding vocabulary".into(),
            })
        }
    };
    for (name, slice) in [("train", train), ("eval", eval), ("test", test)] {
        if !has_both(&gender_labels(slice)) {
            return Ok(EmbeddingComparison::Skipped {
                reason: format!("{name} slice lacks one gender"),
            });
        }
    }
    let protected: BTreeSet<String> = DEFINITIONAL_PAIRS
        .iter()
        .flat_map(|(a, b)| [a.to_string(), b.to_string()])
        .collect();
    let debiased = hard_debias(embeddings, &direction, &protected)?;
    let raw_auroc = embedding_auroc(embeddings, train, eval, test, config)?;
    let debiased_auroc = embedding_auroc(&debiased.model, train, eval, test, config)?;
    Ok(EmbeddingComparison::Completed {
        raw_auroc,
        debiased_auroc,
        delta: debiased_auroc - raw_auroc,
        pairs_used: direction.definitional_pairs,
        flagged_tokens: debiased.flagged,
    })
}

pub struct EvalPaths<'a> {
    pub corpus: &'a Path,
    pub split: &'a Path,
    pub gender_model: &'a Path,
    pub screening_model: &'a Path,
    pub ranking: &'a Path,
    pub embeddings: Option<&'a Path>,
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub rows: Vec<LadderRow>,
    pub base_report: EvalReport,
    pub embedding_comparison: Option<EmbeddingComparison>,
}

/// Runs the ladder on the test slice with the fixed models and writes the
/// trade-off table.
pub fn stage_eval(paths: &EvalPaths<'_>, out_dir: &Path, config: &PipelineConfig) -> Result<EvalOutput> {
    let inner = || -> Result<EvalOutput> {
        config.validate()?;
        let corpus = load_corpus(paths.corpus)?;
        let split: Split<String> = read_json(paths.split)?;
        let gender = load_text_classifier(paths.gender_model)?;
        let screening = load_screening(paths.screening_model)?;
        let ranking = load_ranking(paths.ranking)?;
        let lexicons = config.lexicon_set()?;
        let plan = config.base_plan()?;
        let redactor = Redactor::new(&plan, &lexicons)?;

        let test: Vec<Resume> = resumes_by_ids(&corpus, &split.test)?.into_iter().cloned().collect();
        let test_ids: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
        let test_apps: Vec<_> = corpus
            .applications
            .iter()
            .filter(|a| test_ids.contains(a.resume_id.as_str()))
            .cloned()
            .collect();
        let test_instances = build_instances(&corpus, |r| test_ids.contains(r.id.as_str()))?;

        let retrain_resumes: Vec<Resume>;
        let retrain_instances: Vec<ScreeningInstance>;
        let retrain = if config.retrain {
            retrain_resumes = resumes_by_ids(&corpus, &split.train)?.into_iter().cloned().collect();
            let train_ids: BTreeSet<&str> = split.train.iter().map(String::as_str).collect();
            retrain_instances = build_instances(&corpus, |r| train_ids.contains(r.id.as_str()))?;
            let gender_cfg: ModelFile = ModelFile::load(paths.gender_model)?;
            let screening_config = std::fs::read_to_string(paths.screening_model)
                .ok()
                .and_then(|t| ModelFile::from_json(&t).ok())
                .map(|m| m.config)
                .unwrap_or(gender_cfg.config);
            Some(RetrainData {
                resumes: &retrain_resumes,
                instances: &retrain_instances,
                gender_config: gender_cfg.config,
                screening_config,
                min_df: config.min_df,
            })
        } else {
            None
        };

        let inputs = LadderInputs {
            test_resumes: &test,
            test_applications: &test_apps,
            gender_model: &gender,
            screening_model: screening.as_ref(),
            screening_instances: &test_instances,
            ranking: &ranking,
            lexicons: &lexicons,
            retrain,
        };
        let options = LadderOptions {
            grid: resolve_grid(&config.grid, ranking.len()),
            base_plan: plan,
        };
        let rows = run_ladder(&inputs, &options)?;
        emit_tradeoff(&rows, &out_dir.join(TRADEOFF_FILE), config.jsonl)?;
        let gender_col: Vec<f64> = rows.iter().map(|r| r.gender_auroc).collect();
        log::info!("gender AUROC by k: {}", sparkline(&gender_col));

        // Base-plan report with per-job detail.
        let redacted_test = base_redacted(&test.iter().collect::<Vec<_>>(), &redactor);
        let score_of: BTreeMap<&str, (f64, u8)> = redacted_test
            .iter()
            .map(|r| Ok((r.id.as_str(), (gender.score(&tokenize(&r.raw_text))?, r.gender.label()))))
            .collect::<Result<_>>()?;
        let scored: Vec<(&str, f64, u8)> = test_apps
            .iter()
            .map(|a| {
                let (s, l) = score_of[a.resume_id.as_str()];
                (a.job_id.as_str(), s, l)
            })
            .collect();
        let base_report = evaluate(&scored)?;
        write_json(&out_dir.join(EVAL_REPORT_FILE), &base_report)?;

        let embedding_comparison = match (config.embedding_comparison, paths.embeddings) {
            (true, Some(p)) => {
                let emb = EmbeddingModel::load(p)?;
                let train = base_redacted(&resumes_by_ids(&corpus, &split.train)?, &redactor);
                let eval = base_redacted(&resumes_by_ids(&corpus, &split.eval)?, &redactor);
                let cmp = compare_embeddings(&emb, &train, &eval, &redacted_test, config)?;
                write_json(&out_dir.join(EMBEDDING_COMPARISON_FILE), &cmp)?;
                Some(cmp)
            }
            _ => None,
        };
        Ok(EvalOutput {
            rows,
            base_report,
            embedding_comparison,
        })
    };
    inner().map_err(|e| e.in_stage("eval"))
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub train: TrainReport,
    pub ranking: FeatureRanking,
    pub eval: EvalOutput,
    pub n_pairs: Option<usize>,
}

/// match -> split -> base redaction -> train -> attribute -> ladder, every
/// stage reading the previous stage's files from `out_dir`.
pub fn run_pipeline(corpus: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<PipelineOutput> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    config.validate()?;
    let matched = stage_match(corpus, out_dir, config)?;
    let pairs_path = out_dir.join(PAIRS_FILE);
    let train = stage_train(corpus, config.use_matching.then_some(pairs_path.as_path()), out_dir, config)?;
    let ranking = stage_attribute(
        corpus,
        &out_dir.join(SPLIT_FILE),
        &out_dir.join(GENDER_MODEL_FILE),
        out_dir,
        config,
    )?;
    let embeddings_path = out_dir.join(EMBEDDINGS_FILE);
    let eval = stage_eval(
        &EvalPaths {
            corpus,
            split: &out_dir.join(SPLIT_FILE),
            gender_model: &out_dir.join(GENDER_MODEL_FILE),
            screening_model: &out_dir.join(SCREENING_MODEL_FILE),
            ranking: &out_dir.join(RANKING_FILE),
            embeddings: Some(&embeddings_path),
        },
        out_dir,
        config,
    )?;
    Ok(PipelineOutput {
        train: train.report,
        ranking,
        eval,
        n_pairs: matched.pairs.map(|p| p.len()),
    })
}

/// Count of male and female resumes among `ids`.
pub fn gender_counts(corpus: &Corpus, ids: &[String]) -> Result<(usize, usize)> {
    let rs = resumes_by_ids(corpus, ids)?;
    let m = rs.iter().filter(|r| r.gender == Gender::Male).count();
    Ok((m, rs.len() - m))
}
