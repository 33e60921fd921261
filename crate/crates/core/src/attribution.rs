//! Shapley-style attributions: exact closed form for linear models over
//! Tf-Idf features, Monte-Carlo permutation sampling for arbitrary scorers,
//! and aggregation into a model-level feature ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifier::{FeatureSpace, LinearModel, SparseVec, TfIdfVectorizer};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::seed;
use crate::text::{TokenStream, DEL};

/// Per-document attribution. Positive values push toward Male.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub resume_id: String,
    /// Contributions of tokens present in the document.
    pub per_token: BTreeMap<String, f64>,
    /// Combined contribution of vocabulary features absent from the
    /// document (non-zero only for the linear mode, where an absent feature
    /// still differs from its background mean).
    pub absent_total: f64,
    /// Standard errors of the sampled contributions (masking mode only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub standard_errors: BTreeMap<String, f64>,
}

impl Attribution {
    pub fn total(&self) -> f64 {
        self.per_token.values().sum::<f64>() + self.absent_total
    }
}

/// `phi_j = w_j * (x_j - mean_j)` for every feature.
pub fn linear_contributions(weights: &[f64], x: &SparseVec, background_mean: &[f64]) -> Result<Vec<f64>> {
    if x.dim != weights.len() || background_mean.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: if x.dim != weights.len() { x.dim } else { background_mean.len() },
        });
    }
    let mut phi: Vec<f64> = weights.iter().zip(background_mean).map(|(w, m)| -w * m).collect();
    for (j, v) in x.iter() {
        phi[j] += weights[j] * v;
    }
    Ok(phi)
}

/// Exact linear attributions on the log-odds scale against a fixed
/// background mean, with `w . mean` precomputed.
#[derive(Debug, Clone)]
pub struct LinearExplainer<'a> {
    model: &'a LinearModel,
    vectorizer: &'a TfIdfVectorizer,
    background_mean: &'a [f64],
    baseline: f64,
}

impl<'a> LinearExplainer<'a> {
    pub fn new(model: &'a LinearModel, vectorizer: &'a TfIdfVectorizer, background_mean: &'a [f64]) -> Result<Self> {
        match model.feature_space {
            FeatureSpace::Tfidf { vocab_size } if vocab_size == vectorizer.len() => {}
            other => {
                return Err(Error::InvalidInput(format!(
                    "linear attribution needs a tfidf model over {} features, got {other:?}",
                    vectorizer.len()
                )))
            }
        }
        if background_mean.len() != vectorizer.len() {
            return Err(Error::DimensionMismatch {
                expected: vectorizer.len(),
                got: background_mean.len(),
            });
        }
        let baseline = model.weights.iter().zip(background_mean).map(|(w, m)| w * m).sum();
        Ok(LinearExplainer {
            model,
            vectorizer,
            background_mean,
            baseline,
        })
    }

    /// Decision value of the background point.
    pub fn baseline_decision(&self) -> f64 {
        self.baseline + self.model.bias
    }

    pub fn explain(&self, resume_id: &str, doc: &TokenStream) -> Attribution {
        let x = self.vectorizer.transform(doc);
        let w = &self.model.weights;
        let mut per_token = BTreeMap::new();
        let mut present_baseline = 0.0;
        for (j, v) in x.iter() {
            let m = self.background_mean[j];
            present_baseline += w[j] * m;
            per_token.insert(self.vectorizer.vocab[j].clone(), w[j] * (v - m));
        }
        Attribution {
            resume_id: resume_id.to_string(),
            per_token,
            absent_total: -(self.baseline - present_baseline),
            standard_errors: BTreeMap::new(),
        }
    }
}

pub fn attribute_linear(
    model: &LinearModel,
    vectorizer: &TfIdfVectorizer,
    resume_id: &str,
    doc: &TokenStream,
    background_mean: &[f64],
) -> Result<Attribution> {
    Ok(LinearExplainer::new(model, vectorizer, background_mean)?.explain(resume_id, doc))
}

fn distinct_tokens(doc: &TokenStream) -> Vec<String> {
    doc.iter()
        .filter(|t| *t != DEL)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect()
}

/// Copy of `doc` with every occurrence of the tokens not in `visible`
/// replaced by `[DEL]`.
fn masked(doc: &TokenStream, players: &[String], visible: &[bool]) -> TokenStream {
    let hidden: BTreeSet<&str> = players
        .iter()
        .zip(visible)
        .filter(|(_, v)| !**v)
        .map(|(p, _)| p.as_str())
        .collect();
    TokenStream {
        tokens: doc
            .tokens
            .iter()
            .map(|t| if hidden.contains(t.as_str()) { DEL.to_string() } else { t.clone() })
            .collect(),
        source_spans: doc.source_spans.clone(),
    }
}

/// Monte-Carlo permutation Shapley over token types. The players are the
/// distinct tokens of the document, and a masked player has every
/// occurrence replaced by `[DEL]`. The random stream depends only on
/// `(seed, resume_id)`.
pub fn attribute_masking<F>(
    scorer: F,
    resume_id: &str,
    doc: &TokenStream,
    n_samples: usize,
    seed: u64,
) -> Result<Attribution>
where
    F: Fn(&TokenStream) -> f64,
{
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    let players = distinct_tokens(doc);
    let m = players.len();
    let mut rng = seed::stage_rng(seed, &format!("masking:{resume_id}"));
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let mut order: Vec<usize> = (0..m).collect();
    let empty_score = scorer(&masked(doc, &players, &vec![false; m]));
    for _ in 0..n_samples {
        order.shuffle(&mut rng);
        let mut visible = vec![false; m];
        let mut prev = empty_score;
        for &p in &order {
            visible[p] = true;
            let s = scorer(&masked(doc, &players, &visible));
            let delta = s - prev;
            sum[p] += delta;
            sum_sq[p] += delta * delta;
            prev = s;
        }
    }
    let n = n_samples as f64;
    let mut per_token = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for (i, p) in players.into_iter().enumerate() {
        let mean = sum[i] / n;
        let se = if n_samples > 1 {
            ((sum_sq[i] - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        per_token.insert(p.clone(), mean);
        standard_errors.insert(p, se);
    }
    Ok(Attribution {
        resume_id: resume_id.to_string(),
        per_token,
        absent_total: 0.0,
        standard_errors,
    })
}

pub const MAX_EXACT_PLAYERS: usize = 16;

/// Exact Shapley values of the masking game by enumerating all coalitions.
pub fn exact_masking_shapley<F>(scorer: F, doc: &TokenStream) -> Result<BTreeMap<String, f64>>
where
    F: Fn(&TokenStream) -> f64,
{
    let players = distinct_tokens(doc);
    let m = players.len();
    if m > MAX_EXACT_PLAYERS {
        return Err(Error::InvalidInput(format!(
            "exact enumeration supports at most {MAX_EXACT_PLAYERS} distinct tokens, got {m}"
        )));
    }
    let values: Vec<f64> = (0..1usize << m)
        .map(|mask| {
            let visible: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
            scorer(&masked(doc, &players, &visible))
        })
        .collect();
    // weight(|S|) = |S|! (m - |S| - 1)! / m!
    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut out = BTreeMap::new();
    for (i, p) in players.into_iter().enumerate() {
        let mut phi = 0.0;
        for mask in 0..1usize << m {
            if mask >> i & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact[s] * fact[m - s - 1] / fact[m];
            phi += w * (values[mask | 1 << i] - values[mask]);
        }
        out.insert(p, phi);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    MaleLeaning,
    FemaleLeaning,
    Ambiguous,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::MaleLeaning => "male_leaning",
            Direction::FemaleLeaning => "female_leaning",
            Direction::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub token: String,
    pub mean_abs: f64,
    pub signed_mean: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<RankedFeature>,
}

/// Which sign of the attribution scale means "Male".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaleSign {
    Positive,
    Negative,
}

/// Mean |phi| over the documents containing each token, with the signed
/// mean giving the direction. Tokens whose attribution is zero everywhere
/// carry no signal and are left out.
pub fn rank_features(attrs: &[Attribution], male: MaleSign) -> Result<FeatureRanking> {
    if attrs.is_empty() {
        return Err(Error::InvalidInput("no attributions to rank".into()));
    }
    let flip = if male == MaleSign::Positive { 1.0 } else { -1.0 };
    let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for a in attrs {
        for (t, &phi) in &a.per_token {
            let e = acc.entry(t).or_default();
            e.0 += phi.abs();
            e.1 += flip * phi;
            e.2 += 1;
        }
    }
    let mut entries: Vec<RankedFeature> = acc
        .into_iter()
        .filter(|(_, (abs, _, _))| *abs > 0.0)
        .map(|(t, (abs, signed, n))| {
            let mean_abs = abs / n as f64;
            let signed_mean = signed / n as f64;
            let direction = if signed_mean.abs() <= 1e-12 * mean_abs {
                Direction::Ambiguous
            } else if signed_mean > 0.0 {
                Direction::MaleLeaning
            } else {
                Direction::FemaleLeaning
            };
            RankedFeature {
                token: t.to_string(),
                mean_abs,
                signed_mean,
                direction,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs).then_with(|| a.token.cmp(&b.token)));
    Ok(FeatureRanking { entries })
}

impl FeatureRanking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.token.as_str())
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.token == token)
    }
}

/// The first `min(k, len)` ranked tokens as a redaction lexicon.
pub fn top_k_tokens(ranking: &FeatureRanking, k: usize) -> Result<Lexicon> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if ranking.is_empty() {
        return Err(Error::InvalidInput("feature ranking is empty".into()));
    }
    Lexicon::new(format!("top_{k}"), ranking.tokens().take(k))
}

pub const RANKING_HEADER: [&str; 4] = ["token", "mean_abs", "signed_mean", "direction"];

pub fn write_ranking<W: Write>(ranking: &FeatureRanking, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RANKING_HEADER)?;
    for e in &ranking.entries {
        out.write_record([
            e.token.as_str(),
            &e.mean_abs.to_string(),
            &e.signed_mean.to_string(),
            e.direction.as_str(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<ranking>", e))?;
    Ok(())
}

pub fn save_ranking(ranking: &FeatureRanking, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ranking(ranking, f)
}

pub fn read_ranking<R: std::io::Read>(r: R) -> Result<FeatureRanking> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(RANKING_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", RANKING_HEADER.join(",")),
        });
    }
    let entries = rdr.deserialize().map(|row| Ok(row?)).collect::<Result<_>>()?;
    Ok(FeatureRanking { entries })
}

pub fn load_ranking(path: &Path) -> Result<FeatureRanking> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ranking(f)
}
