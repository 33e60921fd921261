//! Gender classifiers: Tf-Idf or embedding features with elastic-net
//! logistic regression, the train/eval/test split, and alpha selection.

mod logistic;
mod sparse;
mod split;
mod tfidf;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use logistic::{
    fit_logistic, objective, predict_proba, sigmoid, smooth_gradient, smooth_objective, train_logistic,
    FeatureSpace, FitResult, LinearModel, TrainConfig,
};
pub use sparse::{mean_vector, SparseVec};
pub use split::{split, split_pairs, Split, SplitSpec, SplitUnit};
pub use tfidf::{fit_tfidf, fit_tfidf_tokens, TfIdfVectorizer, DEFAULT_MIN_DF, MAX_VOCAB};

use crate::error::{Error, Result};
use crate::evaluation::auroc;
use crate::text::TokenStream;

pub const DEFAULT_ALPHAS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

/// A labelled design matrix.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a> {
    pub x: &'a [SparseVec],
    pub y: &'a [u8],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub model: LinearModel,
    /// `(alpha, eval AUROC)` for every candidate, in candidate order.
    pub scores: Vec<(f64, f64)>,
}

pub fn score_all(model: &LinearModel, x: &[SparseVec]) -> Result<Vec<f64>> {
    x.iter().map(|r| predict_proba(model, r)).collect()
}

/// Trains one model per candidate on `train` and keeps the one with the
/// highest AUROC on `eval`; ties go to the smallest alpha.
pub fn select_alpha(
    candidates: &[f64],
    train: Dataset<'_>,
    eval: Dataset<'_>,
    feature_space: FeatureSpace,
    base: &TrainConfig,
) -> Result<AlphaSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("at least one alpha candidate is required".into()));
    }
    let fitted: Vec<(f64, LinearModel, f64)> = candidates
        .par_iter()
        .map(|&alpha| {
            let model = train_logistic(train.x, train.y, feature_space, &base.with_alpha(alpha))?;
            let score = auroc(&score_all(&model, eval.x)?, eval.y)?;
            Ok((alpha, model, score))
        })
        .collect::<Result<_>>()?;
    let scores = fitted.iter().map(|(a, _, s)| (*a, *s)).collect();
    let (alpha, model, _) = fitted
        .into_iter()
        .reduce(|best, c| {
            if c.2 > best.2 || (c.2 == best.2 && c.0 < best.0) {
                c
            } else {
                best
            }
        })
        .expect("non-empty candidates");
    Ok(AlphaSelection { alpha, model, scores })
}

/// Tf-Idf features with a logistic model on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextClassifier {
    pub vectorizer: TfIdfVectorizer,
    pub model: LinearModel,
}

impl TextClassifier {
    pub fn fit(docs: &[TokenStream], labels: &[u8], min_df: usize, cfg: &TrainConfig) -> Result<Self> {
        let vectorizer = fit_tfidf(docs, min_df)?;
        let x: Vec<SparseVec> = docs.par_iter().map(|d| vectorizer.transform(d)).collect();
        let model = train_logistic(&x, labels, FeatureSpace::Tfidf { vocab_size: vectorizer.len() }, cfg)?;
        Ok(TextClassifier { vectorizer, model })
    }

    pub fn score(&self, doc: &TokenStream) -> Result<f64> {
        predict_proba(&self.model, &self.vectorizer.transform(doc))
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
            .ok_or_else(|| Error::InvalidInput("model file has no tfidf vocabulary".into()))?;
        Ok(TextClassifier {
            vectorizer,
            model: file.model,
        })
    }
}

/// Serialized classifier: feature-space descriptor, Tf-Idf vocabulary when
/// applicable, weights, bias and the training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: LinearModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectorizer: Option<TfIdfVectorizer>,
    pub config: TrainConfig,
}

impl ModelFile {
    pub fn validate(&self) -> Result<()> {
        let dim = self.model.feature_space.dim();
        if self.model.weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.model.weights.len(),
            });
        }
        if let (FeatureSpace::Tfidf { vocab_size }, Some(v)) = (self.model.feature_space, &self.vectorizer) {
            if v.len() != vocab_size {
                return Err(Error::DimensionMismatch {
                    expected: vocab_size,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
