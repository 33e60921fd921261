//! Skip-gram embeddings with negative sampling, resume vectors, cosine
//! similarity, and gender-direction neutralization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::seed;
use crate::text::{TokenStream, DEL};

/// Definitional word pairs, female first, used to find the gender direction.
pub const DEFINITIONAL_PAIRS: &[(&str, &str)] = &[
    ("she", "he"),
    ("her", "him"),
    ("woman", "man"),
    ("women", "men"),
    ("girl", "boy"),
    ("girls", "boys"),
    ("female", "male"),
    ("mother", "father"),
    ("sorority", "fraternity"),
    ("waitress", "waiter"),
    ("chairwoman", "chairman"),
    ("saleswoman", "salesman"),
    ("gal", "guy"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub subsample: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 100,
            window: 5,
            negative: 5,
            epochs: 5,
            min_count: 5,
            subsample: 1e-3,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidConfig("embedding dim must be at least 2".into()));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.subsample < 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive, subsample non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major, `vocab.len() * dim`.
    vectors: Vec<f64>,
}

impl EmbeddingModel {
    pub fn new(dim: usize, vocab: Vec<String>, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dim must be positive".into()));
        }
        if vectors.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                got: vectors.len(),
            });
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, t) in vocab.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate embedding token {t:?}")));
            }
        }
        Ok(EmbeddingModel {
            dim,
            vocab,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, t) in self.vocab.iter().enumerate() {
            write!(w, "{t}")?;
            for v in self.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let (n, dim) = match lines.next() {
            Some((_, l)) => {
                let l = l.map_err(|e| parse_err(1, e.to_string()))?;
                let mut it = l.split_whitespace().map(str::parse::<usize>);
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(n)), Some(Ok(d)), None) => (n, d),
                    _ => return Err(parse_err(1, "expected header \"N dim\"".into())),
                }
            }
            None => return Err(parse_err(1, "missing header".into())),
        };
        let mut vocab = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for (i, l) in lines {
            let line_no = i + 1;
            let l = l.map_err(|e| parse_err(line_no, e.to_string()))?;
            if l.trim().is_empty() {
                continue;
            }
            let mut it = l.split_whitespace();
            let token = it.next().unwrap().to_string();
            let before = vectors.len();
            for v in it {
                vectors.push(v.parse::<f64>().map_err(|e| parse_err(line_no, format!("{v:?}: {e}")))?);
            }
            if vectors.len() - before != dim {
                return Err(parse_err(line_no, format!("expected {dim} values for {token:?}")));
            }
            vocab.push(token);
        }
        if vocab.len() != n {
            return Err(parse_err(1, format!("header announces {n} rows, found {}", vocab.len())));
        }
        EmbeddingModel::new(dim, vocab, vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Vocabulary sorted by descending count, ties by token.
fn build_vocab(corpus: &[TokenStream], min_count: usize) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in corpus {
        for t in doc.iter() {
            if t != DEL {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut vocab: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c as usize >= min_count.max(1))
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    vocab
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Skip-gram with negative sampling. Single-threaded and deterministic for a
/// given configuration.
pub fn train_skipgram(corpus: &[TokenStream], cfg: &SkipGramConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidInput("embedding corpus is empty".into()));
    }
    let vocab = build_vocab(corpus, cfg.min_count);
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary(format!(
            "no token occurs at least {} times",
            cfg.min_count
        )));
    }
    let index: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, (t, _))| (t.as_str(), i as u32)).collect();
    let docs: Vec<Vec<u32>> = corpus
        .iter()
        .map(|d| d.iter().filter_map(|t| index.get(t).copied()).collect())
        .collect();
    let total: u64 = vocab.iter().map(|v| v.1).sum();

    let keep_prob: Vec<f64> = vocab
        .iter()
        .map(|&(_, c)| {
            if cfg.subsample <= 0.0 {
                return 1.0;
            }
            let f = c as f64 / total as f64;
            let r = cfg.subsample / f;
            (r.sqrt() + r).min(1.0)
        })
        .collect();
    let mut cumulative = Vec::with_capacity(vocab.len());
    let mut acc = 0.0;
    for &(_, c) in &vocab {
        acc += (c as f64).powf(0.75);
        cumulative.push(acc);
    }

    let dim = cfg.dim;
    let v = vocab.len();
    let mut rng = seed::rng(cfg.seed);
    let mut input: Vec<f64> = (0..v * dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect();
    let mut output = vec![0.0; v * dim];
    let mut grad = vec![0.0; dim];

    let total_steps = (total as f64 * cfg.epochs as f64).max(1.0);
    let mut processed = 0u64;
    let min_lr = cfg.learning_rate * 1e-4;

    for _ in 0..cfg.epochs {
        for doc in &docs {
            let kept: Vec<u32> = doc
                .iter()
                .copied()
                .filter(|&w| keep_prob[w as usize] >= 1.0 || rng.random::<f64>() < keep_prob[w as usize])
                .collect();
            let lr = (cfg.learning_rate * (1.0 - processed as f64 / total_steps)).max(min_lr);
            processed += doc.len() as u64;
            for (pos, &center) in kept.iter().enumerate() {
                let b = rng.random_range(1..=cfg.window);
                let lo = pos.saturating_sub(b);
                let hi = (pos + b).min(kept.len() - 1);
                for (cpos, &ctx) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    let l1 = ctx as usize * dim;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for d in 0..=cfg.negative {
                        let (target, label) = if d == 0 {
                            (center as usize, 1.0)
                        } else {
                            let u = rng.random::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= u).min(v - 1);
                            if t == center as usize {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let l2 = target * dim;
                        let f = dot(&input[l1..l1 + dim], &output[l2..l2 + dim]);
                        let g = (label - sigmoid(f)) * lr;
                        for k in 0..dim {
                            grad[k] += g * output[l2 + k];
                            output[l2 + k] += g * input[l1 + k];
                        }
                    }
                    for k in 0..dim {
                        input[l1 + k] += grad[k];
                    }
                }
            }
        }
    }
    EmbeddingModel::new(dim, vocab.into_iter().map(|(t, _)| t).collect(), input)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumeVector {
    pub resume_id: String,
    pub vector: Vec<f64>,
    pub n_keywords: usize,
    /// Set when no keyword was found; the vector is then all zeros.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Mean over every in-vocabulary token.
    AllTokens,
    /// Mean over in-vocabulary tokens covered by a skills lexicon match.
    SkillTokens,
}

/// Tokens selected for pooling: all in-vocabulary tokens, or the tokens of
/// every skill-lexicon match.
fn pooled_tokens<'a>(tokens: &'a TokenStream, skills: Option<&Lexicon>) -> Vec<&'a str> {
    match skills {
        None => tokens.iter().collect(),
        Some(lex) => lex
            .find_matches(&tokens.tokens)
            .into_iter()
            .flat_map(|(s, e)| tokens.tokens[s..e].iter().map(String::as_str))
            .collect(),
    }
}

/// Mean vector of the selected tokens and how many contributed.
pub fn mean_embedding<'a>(model: &EmbeddingModel, tokens: impl IntoIterator<Item = &'a str>) -> (Vec<f64>, usize) {
    let mut sum = vec![0.0; model.dim];
    let mut n = 0;
    for t in tokens {
        if let Some(v) = model.vector(t) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            n += 1;
        }
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    (sum, n)
}

pub fn document_vector(
    resume_id: &str,
    tokens: &TokenStream,
    model: &EmbeddingModel,
    pooling: Pooling,
    skills: &Lexicon,
) -> ResumeVector {
    let selected = match pooling {
        Pooling::AllTokens => pooled_tokens(tokens, None),
        Pooling::SkillTokens => pooled_tokens(tokens, Some(skills)),
    };
    let (vector, n_keywords) = mean_embedding(model, selected);
    ResumeVector {
        resume_id: resume_id.to_string(),
        vector,
        n_keywords,
        flagged: n_keywords == 0,
    }
}

/// Skill-space resume vector: mean over the resume's skill tokens.
pub fn resume_vector(resume: &crate::corpus::Resume, model: &EmbeddingModel, skills: &Lexicon) -> ResumeVector {
    let tokens = crate::text::tokenize(&resume.raw_text);
    document_vector(&resume.id, &tokens, model, Pooling::SkillTokens, skills)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderDirection {
    pub direction: Vec<f64>,
    /// Pairs that were found in the vocabulary and used.
    pub definitional_pairs: Vec<(String, String)>,
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Top eigenvector of a symmetric matrix by power iteration.
fn top_eigenvector(m: &[f64], dim: usize, start: &[f64]) -> Vec<f64> {
    let mut v = start.to_vec();
    normalize(&mut v);
    let mut next = vec![0.0; dim];
    for _ in 0..100_000 {
        for i in 0..dim {
            next[i] = dot(&m[i * dim..(i + 1) * dim], &v);
        }
        if normalize(&mut next) == 0.0 {
            break;
        }
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    v
}

/// Principal direction of the pair differences `v_a - v_b`. Each pair is
/// centered on its own midpoint, so the scatter matrix is `sum d d^T / 2`.
/// The sign is chosen so the direction points from the second token of the
/// first usable pair toward its first token.
pub fn gender_direction(model: &EmbeddingModel, pairs: &[(String, String)]) -> Result<GenderDirection> {
    let dim = model.dim;
    let mut used = Vec::new();
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    for (a, b) in pairs {
        if let (Some(va), Some(vb)) = (model.vector(a), model.vector(b)) {
            diffs.push(va.iter().zip(vb).map(|(x, y)| x - y).collect());
            used.push((a.clone(), b.clone()));
        }
    }
    if diffs.iter().all(|d| norm(d) == 0.0) {
        return Err(Error::InvalidInput(
            "no definitional pair has both tokens in the embedding vocabulary".into(),
        ));
    }
    let mut direction = if diffs.len() == 1 {
        diffs[0].clone()
    } else {
        let mut scatter = vec![0.0; dim * dim];
        for d in &diffs {
            for i in 0..dim {
                for j in 0..dim {
                    scatter[i * dim + j] += 0.5 * d[i] * d[j];
                }
            }
        }
        let start = diffs.iter().find(|d| norm(d) > 0.0).unwrap();
        top_eigenvector(&scatter, dim, start)
    };
    normalize(&mut direction);
    if dot(&direction, &diffs[0]) < 0.0 {
        direction.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(GenderDirection {
        direction,
        definitional_pairs: used,
    })
}

pub fn default_pairs() -> Vec<(String, String)> {
    DEFINITIONAL_PAIRS
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DebiasResult {
    pub model: EmbeddingModel,
    /// Tokens whose residual after projection was too small to renormalize.
    pub flagged: Vec<String>,
}

pub const NEAR_ZERO_RESIDUAL: f64 = 1e-9;

/// Neutralize: removes the component along `g` from every non-protected
/// vector and restores its original length.
pub fn hard_debias(model: &EmbeddingModel, g: &GenderDirection, protected: &BTreeSet<String>) -> Result<DebiasResult> {
    let dim = model.dim;
    if g.direction.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: g.direction.len(),
        });
    }
    let dir = &g.direction;
    let project_out = |v: &mut [f64]| {
        let p = dot(v, dir);
        v.iter_mut().zip(dir).for_each(|(x, d)| *x -= p * d);
    };
    let mut vectors = model.vectors.clone();
    let mut flagged = Vec::new();
    for (i, token) in model.vocab.iter().enumerate() {
        if protected.contains(token) {
            continue;
        }
        let v = &mut vectors[i * dim..(i + 1) * dim];
        let original = norm(v);
        project_out(v);
        let residual = norm(v);
        if residual < NEAR_ZERO_RESIDUAL {
            flagged.push(token.clone());
            continue;
        }
        v.iter_mut().for_each(|x| *x *= original / residual);
        project_out(v);
    }
    Ok(DebiasResult {
        model: EmbeddingModel::new(dim, model.vocab.clone(), vectors)?,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(rows: &[(&str, &[f64])]) -> EmbeddingModel {
        let dim = rows[0].1.len();
        EmbeddingModel::new(
            dim,
            rows.iter().map(|r| r.0.to_string()).collect(),
            rows.iter().flat_map(|r| r.1.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((cosine(&[1.0, 2.0], &[-1.0, -2.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
        let a = [0.3, -1.2, 2.0];
        let b = [1.0, 0.5, -0.7];
        let a2: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        let c = cosine(&a, &b).unwrap();
        assert_eq!(c, cosine(&b, &a).unwrap());
        assert!((c - cosine(&a2, &b).unwrap()).abs() < 1e-15);
    }

    fn cooccurrence_corpus() -> Vec<TokenStream> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fillers = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"];
        let mut docs = Vec::new();
        for i in 0..300 {
            let mut toks: Vec<&str> = (0..12).map(|_| fillers[rng.random_range(0..fillers.len())]).collect();
            if i % 2 == 0 {
                toks.splice(5..5, ["flask", "python"]);
            } else {
                toks.splice(5..5, ["ballet", "dance", "studio"]);
                toks.push("python");
            }
            docs.push(TokenStream::from_tokens(toks));
        }
        docs
    }

    fn small_cfg() -> SkipGramConfig {
        SkipGramConfig {
            dim: 16,
            window: 2,
            epochs: 5,
            min_count: 1,
            seed: 3,
            ..SkipGramConfig::default()
        }
    }

    #[test]
    fn skipgram_learns_cooccurrence() {
        let m = train_skipgram(&cooccurrence_corpus(), &small_cfg()).unwrap();
        let flask = m.vector("flask").unwrap();
        let near = cosine(flask, m.vector("python").unwrap()).unwrap();
        let far = cosine(flask, m.vector("ballet").unwrap()).unwrap();
        assert!(near > far, "{near} <= {far}");
        for t in m.vocab() {
            let v = m.vector(t).unwrap();
            assert!((cosine(v, v).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn skipgram_is_deterministic() {
        let c = cooccurrence_corpus();
        assert_eq!(train_skipgram(&c, &small_cfg()).unwrap(), train_skipgram(&c, &small_cfg()).unwrap());
    }

    #[test]
    fn skipgram_min_count_and_del() {
        let docs = vec![TokenStream::from_tokens(["a", "a", "[DEL]", "[DEL]", "b"])];
        let cfg = SkipGramConfig {
            min_count: 2,
            ..small_cfg()
        };
        let m = train_skipgram(&docs, &cfg).unwrap();
        assert_eq!(m.vocab(), ["a"]);
        let cfg = SkipGramConfig {
            min_count: 5,
            ..small_cfg()
        };
        assert!(matches!(train_skipgram(&docs, &cfg), Err(Error::EmptyVocabulary(_))));
    }

    #[test]
    fn resume_vector_means() {
        let m = model(&[("sql", &[1.0, 2.0]), ("rust", &[3.0, -2.0]), ("golf", &[9.0, 9.0])]);
        let skills = Lexicon::new("skills", ["sql", "rust", "data science"]).unwrap();
        let one = document_vector("r", &TokenStream::from_tokens(["i", "know", "sql"]), &m, Pooling::SkillTokens, &skills);
        assert_eq!(one.vector, vec![1.0, 2.0]);
        assert_eq!(one.n_keywords, 1);
        let two = document_vector("r", &TokenStream::from_tokens(["sql", "golf", "rust"]), &m, Pooling::SkillTokens, &skills);
        assert_eq!(two.vector, vec![2.0, 0.0]);
        let none = document_vector("r", &TokenStream::from_tokens(["golf"]), &m, Pooling::SkillTokens, &skills);
        assert!(none.flagged && none.vector == vec![0.0, 0.0] && none.n_keywords == 0);
        let all = document_vector("r", &TokenStream::from_tokens(["golf", "sql"]), &m, Pooling::AllTokens, &skills);
        assert_eq!(all.vector, vec![5.0, 5.5]);
    }

    #[test]
    fn resume_vector_linearity() {
        let m = model(&[("a", &[1.0, 0.0]), ("b", &[0.0, 4.0]), ("c", &[2.0, 2.0])]);
        let skills = Lexicon::new("skills", ["a", "b", "c"]).unwrap();
        let va = document_vector("x", &TokenStream::from_tokens(["a"]), &m, Pooling::SkillTokens, &skills);
        let vb = document_vector("y", &TokenStream::from_tokens(["b", "c"]), &m, Pooling::SkillTokens, &skills);
        let vu = document_vector("z", &TokenStream::from_tokens(["a", "b", "c"]), &m, Pooling::SkillTokens, &skills);
        for k in 0..2 {
            let expect = (va.vector[k] * va.n_keywords as f64 + vb.vector[k] * vb.n_keywords as f64) / 3.0;
            assert!((vu.vector[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_file_round_trip() {
        let m = model(&[("x", &[0.1, -2.5e-7, 3.0]), ("c++", &[1.0 / 3.0, 0.0, -1.0])]);
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"2 3\n"));
        let back = EmbeddingModel::read_from(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert!(EmbeddingModel::read_from(&b"2 3\nx 1 2 3\n"[..]).is_err());
        assert!(EmbeddingModel::read_from(&b"1 3\nx 1 2\n"[..]).is_err());
    }

    #[test]
    fn single_pair_direction() {
        let m = model(&[("she", &[1.0, 2.0, 0.0]), ("he", &[1.0, 0.0, 2.0])]);
        let g = gender_direction(&m, &default_pairs()).unwrap();
        let s = 8f64.sqrt();
        assert_eq!(g.definitional_pairs.len(), 1);
        for (a, b) in g.direction.iter().zip([0.0, 2.0 / s, -2.0 / s]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parallel_pairs_share_direction() {
        let m = model(&[
            ("a", &[2.0, 0.0]),
            ("b", &[0.0, 0.0]),
            ("c", &[5.0, 5.0]),
            ("d", &[8.0, 5.0]),
        ]);
        let pairs = vec![("a".into(), "b".into()), ("c".into(), "d".into())];
        let g = gender_direction(&m, &pairs).unwrap();
        assert!((g.direction[0].abs() - 1.0).abs() < 1e-12 && g.direction[1].abs() < 1e-12);
        assert!(g.direction[0] > 0.0);
    }

    #[test]
    fn no_usable_pair() {
        let m = model(&[("x", &[1.0, 0.0])]);
        assert!(gender_direction(&m, &default_pairs()).is_err());
    }

    #[test]
    fn debias_properties() {
        let g = GenderDirection {
            direction: vec![0.6, 0.8, 0.0],
            definitional_pairs: vec![],
        };
        let m = model(&[
            ("he", &[0.6, 0.8, 0.0]),
            ("x", &[0.6, 0.8, 0.0]),
            ("y", &[0.8, -0.6, 2.0]),
            ("z", &[1.0, 1.0, 1.0]),
        ]);
        let protected: BTreeSet<String> = ["he".to_string()].into();
        let out = hard_debias(&m, &g, &protected).unwrap();
        assert_eq!(out.flagged, vec!["x".to_string()]);
        assert_eq!(out.model.vector("he").unwrap(), m.vector("he").unwrap());
        assert!(norm(out.model.vector("x").unwrap()) < 1e-9);
        for t in ["y", "z"] {
            let v = out.model.vector(t).unwrap();
            assert!(dot(v, &g.direction).abs() <= 1e-9);
            assert!((norm(v) - norm(m.vector(t).unwrap())).abs() <= 1e-9);
        }
        for (a, b) in out.model.vector("y").unwrap().iter().zip(m.vector("y").unwrap()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}
