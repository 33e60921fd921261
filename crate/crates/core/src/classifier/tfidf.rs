use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::sparse::SparseVec;
use crate::error::{Error, Result};
use crate::text::{TokenStream, DEL};

pub const DEFAULT_MIN_DF: usize = 5;
pub const MAX_VOCAB: usize = 200_000;

/// Smoothed-idf Tf-Idf with raw term counts and L2 row normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfIdfParts")]
pub struct TfIdfVectorizer {
    /// Tokens in lexicographic order; a token's index is its position.
    pub vocab: Vec<String>,
    pub doc_freq: Vec<usize>,
    pub n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

#[derive(Deserialize)]
struct TfIdfParts {
    vocab: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl TryFrom<TfIdfParts> for TfIdfVectorizer {
    type Error = Error;

    fn try_from(p: TfIdfParts) -> Result<Self> {
        TfIdfVectorizer::new(p.vocab, p.doc_freq, p.n_docs)
    }
}

impl TfIdfVectorizer {
    pub fn new(vocab: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Result<Self> {
        if vocab.len() != doc_freq.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                got: doc_freq.len(),
            });
        }
        if vocab.iter().any(|t| t == DEL) {
            return Err(Error::InvalidInput(format!("{DEL} may not be a feature")));
        }
        if doc_freq.contains(&0) {
            return Err(Error::InvalidInput("document frequencies must be positive".into()));
        }
        let mut v = TfIdfVectorizer {
            vocab,
            doc_freq,
            n_docs,
            index: HashMap::new(),
        };
        v.reindex();
        Ok(v)
    }

    fn reindex(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| i as usize)
    }

    pub fn idf(&self, i: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[i] as f64)).ln() + 1.0
    }

    pub fn transform(&self, doc: &TokenStream) -> SparseVec {
        self.transform_tokens(doc.iter())
    }

    pub fn transform_tokens<'a>(&self, tokens: impl Iterator<Item = &'a str>) -> SparseVec {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for t in tokens {
            if let Some(&i) = self.index.get(t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let pairs: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(i, c)| (i, c * self.idf(i as usize)))
            .collect();
        let mut v = SparseVec::from_pairs(self.len(), pairs);
        let norm = v.norm();
        if norm > 0.0 {
            v.val.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Vocabulary = tokens with document frequency at least `min_df`, `[DEL]`
/// excluded, capped at the [`MAX_VOCAB`] most frequent.
pub fn fit_tfidf(docs: &[TokenStream], min_df: usize) -> Result<TfIdfVectorizer> {
    fit_tfidf_tokens(docs.iter().map(|d| d.tokens.as_slice()), min_df)
}

pub fn fit_tfidf_tokens<'a>(
    docs: impl Iterator<Item = &'a [String]>,
    min_df: usize,
) -> Result<TfIdfVectorizer> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut n_docs = 0;
    for doc in docs {
        n_docs += 1;
        let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for t in distinct {
            if t != DEL {
                *df.entry(t).or_insert(0) += 1;
            }
        }
    }
    if n_docs == 0 {
        return Err(Error::InvalidInput("cannot fit Tf-Idf on zero documents".into()));
    }
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df.max(1)).collect();
    if kept.len() > MAX_VOCAB {
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        kept.truncate(MAX_VOCAB);
        kept.sort_by(|a, b| a.0.cmp(b.0));
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary(format!(
            "no token reaches document frequency {min_df}"
        )));
    }
    let (vocab, doc_freq): (Vec<String>, Vec<usize>) =
        kept.into_iter().map(|(t, c)| (t.to_string(), c)).unzip();
    TfIdfVectorizer::new(vocab, doc_freq, n_docs)
}
