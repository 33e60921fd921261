//! Lexicon-driven redaction passes and redaction plans.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Resume;
use crate::data;
use crate::error::{Error, Result};
use crate::text::{self, tokenize, PiiRedactor, TokenStream, DEL};

/// A named set of lowercase tokens and space-joined token phrases.
#[derive(Clone, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    entries: BTreeSet<String>,
    /// First token -> phrases (as token lists) starting with it, longest first.
    by_first: HashMap<String, Vec<Vec<String>>>,
}

impl fmt::Debug for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lexicon")
            .field("name", &self.name)
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl Lexicon {
    pub fn new<I, S>(name: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let mut set = BTreeSet::new();
        for raw in entries {
            let entry = raw.as_ref().split_whitespace().collect::<Vec<_>>().join(" ");
            if entry.is_empty() {
                continue;
            }
            if entry != entry.to_lowercase() {
                return Err(Error::InvalidInput(format!(
                    "lexicon {name}: entry {entry:?} is not lowercase"
                )));
            }
            if entry.split(' ').any(|t| t == DEL) {
                return Err(Error::InvalidInput(format!(
                    "lexicon {name}: entries may not contain {DEL}"
                )));
            }
            set.insert(entry);
        }
        if set.is_empty() {
            return Err(Error::InvalidInput(format!("lexicon {name} has no entries")));
        }
        let mut by_first: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for e in &set {
            let toks: Vec<String> = e.split(' ').map(str::to_string).collect();
            by_first.entry(toks[0].clone()).or_default().push(toks);
        }
        for phrases in by_first.values_mut() {
            phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        Ok(Lexicon {
            name,
            entries: set,
            by_first,
        })
    }

    /// Parses lexicon file contents: one entry per line, `#` comments.
    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let name = name.into();
        let lines: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Lexicon::new(name, lines)
    }

    pub fn load(name: impl Into<String>, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::from_text(name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &BTreeSet<String> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, entry: &str) -> bool {
        self.entries.contains(entry)
    }

    pub fn single_tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str).filter(|e| !e.contains(' '))
    }

    /// Length (in tokens) of the longest entry matching at `tokens[at..]`.
    pub fn longest_match(&self, tokens: &[String], at: usize) -> Option<usize> {
        let phrases = self.by_first.get(&tokens[at])?;
        phrases
            .iter()
            .find(|p| {
                at + p.len() <= tokens.len() && p.iter().zip(&tokens[at..]).all(|(a, b)| a == b)
            })
            .map(Vec::len)
    }

    /// Token index ranges of maximal matches, scanning left to right.
    pub fn find_matches(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.longest_match(tokens, i) {
                Some(len) => {
                    out.push((i, i + len));
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}

/// Replaces every maximal lexicon match with a single `[DEL]` token.
pub fn redact_lexicon(tokens: &TokenStream, lex: &Lexicon) -> TokenStream {
    let matches = lex.find_matches(&tokens.tokens);
    let mut out = TokenStream::default();
    let mut cursor = 0;
    for (s, e) in matches {
        out.tokens.extend_from_slice(&tokens.tokens[cursor..s]);
        out.source_spans.extend_from_slice(&tokens.source_spans[cursor..s]);
        out.tokens.push(DEL.to_string());
        out.source_spans
            .push((tokens.source_spans[s].0, tokens.source_spans[e - 1].1));
        cursor = e;
    }
    out.tokens.extend_from_slice(&tokens.tokens[cursor..]);
    out.source_spans.extend_from_slice(&tokens.source_spans[cursor..]);
    out
}

/// Text-level variant of [`redact_lexicon`]: layout outside matches is kept.
pub fn redact_lexicon_text(text: &str, lex: &Lexicon) -> String {
    let stream = tokenize(text);
    let spans: Vec<(usize, usize)> = lex
        .find_matches(&stream.tokens)
        .into_iter()
        .map(|(s, e)| (stream.source_spans[s].0, stream.source_spans[e - 1].1))
        .collect();
    if spans.is_empty() {
        return text.to_string();
    }
    text::replace_spans(text, &spans)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "pass", content = "arg", rename_all = "snake_case")]
pub enum Pass {
    Pii,
    Lexicon(String),
    TokenList(PathBuf),
}

impl Pass {
    pub fn name(&self) -> String {
        match self {
            Pass::Pii => "pii".into(),
            Pass::Lexicon(n) => n.clone(),
            Pass::TokenList(p) => format!("tokens:{}", p.display()),
        }
    }
}

impl FromStr for Pass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidConfig("empty pass name".into()));
        }
        Ok(match s.split_once(':') {
            Some(("tokens" | "token_list", path)) => Pass::TokenList(PathBuf::from(path)),
            _ if s == "pii" => Pass::Pii,
            _ => Pass::Lexicon(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionPlan {
    passes: Vec<Pass>,
}

impl RedactionPlan {
    pub fn new(passes: Vec<Pass>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &passes {
            if !seen.insert(p.name()) {
                return Err(Error::InvalidConfig(format!(
                    "pass {:?} appears twice in the plan",
                    p.name()
                )));
            }
        }
        Ok(RedactionPlan { passes })
    }

    pub fn empty() -> Self {
        RedactionPlan::default()
    }

    /// Comma-separated pass list, e.g. `pii,gender_words,tokens:top.csv`.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec.trim().is_empty() || spec.trim() == "none" {
            return Ok(RedactionPlan::empty());
        }
        RedactionPlan::new(spec.split(',').map(str::parse).collect::<Result<_>>()?)
    }

    pub fn passes(&self) -> &[Pass] {
        &self.passes
    }

    pub fn is_empty(&self) -> bool {
        self.passes.is_empty()
    }

    pub fn with_pass(&self, pass: Pass) -> Result<Self> {
        let mut passes = self.passes.clone();
        passes.push(pass);
        RedactionPlan::new(passes)
    }

    pub fn describe(&self) -> String {
        if self.passes.is_empty() {
            return "none".into();
        }
        self.passes.iter().map(Pass::name).collect::<Vec<_>>().join(",")
    }
}

/// Named lexicons available to plans.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    lexicons: BTreeMap<String, Lexicon>,
}

impl LexiconSet {
    /// Bundled `gender_words`, `hobbies` and `skills` lexicons.
    pub fn bundled() -> Self {
        let mut set = LexiconSet::default();
        set.insert(data::gender_words());
        set.insert(data::hobbies());
        set.insert(data::skills());
        set
    }

    pub fn insert(&mut self, lex: Lexicon) {
        self.lexicons.insert(lex.name().to_string(), lex);
    }

    pub fn get(&self, name: &str) -> Option<&Lexicon> {
        self.lexicons.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.lexicons.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
enum Step {
    Pii,
    Lexicon(Lexicon),
}

/// A plan whose lexicons and token lists are loaded, ready to apply.
#[derive(Debug, Clone)]
pub struct Redactor {
    pii: PiiRedactor,
    steps: Vec<Step>,
}

impl Redactor {
    pub fn new(plan: &RedactionPlan, lexicons: &LexiconSet) -> Result<Self> {
        Redactor::with_pii(plan, lexicons, PiiRedactor::default())
    }

    pub fn with_pii(plan: &RedactionPlan, lexicons: &LexiconSet, pii: PiiRedactor) -> Result<Self> {
        let steps = plan
            .passes()
            .iter()
            .map(|p| {
                Ok(match p {
                    Pass::Pii => Step::Pii,
                    Pass::Lexicon(name) => Step::Lexicon(
                        lexicons
                            .get(name)
                            .cloned()
                            .ok_or_else(|| Error::UnknownLexicon(name.clone()))?,
                    ),
                    Pass::TokenList(path) => Step::Lexicon(load_token_list(path)?),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Redactor { pii, steps })
    }

    /// Appends an in-memory lexicon pass.
    pub fn then(mut self, lex: Lexicon) -> Self {
        self.steps.push(Step::Lexicon(lex));
        self
    }

    pub fn redact_text(&self, text: &str, applicant_name: &str) -> String {
        let mut text = text.to_string();
        for step in &self.steps {
            text = match step {
                Step::Pii => self.pii.redact_text(&text, applicant_name).redacted_text,
                Step::Lexicon(lex) => redact_lexicon_text(&text, lex),
            };
        }
        text
    }

    pub fn apply(&self, resume: &Resume) -> Resume {
        Resume {
            raw_text: self.redact_text(&resume.raw_text, &resume.applicant_name),
            ..resume.clone()
        }
    }
}

/// Reads a token list: either a plain lexicon file or a ranking CSV whose
/// first column holds the tokens (header row `token,...` is skipped).
pub fn load_token_list(path: &Path) -> Result<Lexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = format!("tokens:{}", path.display());
    let is_csv = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.trim_start().starts_with("token,"));
    if !is_csv {
        return Lexicon::from_text(name, &text);
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut tokens = Vec::new();
    for rec in rdr.records() {
        tokens.push(rec?.get(0).unwrap_or_default().to_string());
    }
    Lexicon::new(name, tokens)
}

pub fn apply_plan(resume: &Resume, plan: &RedactionPlan, lexicons: &LexiconSet) -> Result<Resume> {
    Ok(Redactor::new(plan, lexicons)?.apply(resume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Degree, Field, Gender};
    use proptest::prelude::*;

    fn ts(tokens: &[&str]) -> TokenStream {
        TokenStream::from_tokens(tokens.iter().copied())
    }

    fn lex(entries: &[&str]) -> Lexicon {
        Lexicon::new("t", entries.iter().copied()).unwrap()
    }

    #[test]
    fn gender_word_replaced() {
        let out = redact_lexicon(&ts(&["head", "waitress", "at", "cafe"]), &data::gender_words());
        assert_eq!(out.tokens, ["head", DEL, "at", "cafe"]);
    }

    #[test]
    fn no_hits_is_identity() {
        let input = ts(&["built", "etl", "jobs"]);
        assert_eq!(redact_lexicon(&input, &data::gender_words()), input);
    }

    /// Independent scanner: tries every entry at every position, prefers the
    /// longest, and advances past it.
    fn brute_force(tokens: &[&str], entries: &[&str]) -> Vec<String> {
        let phrases: Vec<Vec<&str>> = entries.iter().map(|e| e.split(' ').collect()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let best = phrases
                .iter()
                .filter(|p| tokens[i..].starts_with(p))
                .map(|p| p.len())
                .max();
            match best {
                Some(n) => {
                    out.push(DEL.to_string());
                    i += n;
                }
                None => {
                    out.push(tokens[i].to_string());
                    i += 1;
                }
            }
        }
        out
    }

    #[test]
    fn phrase_match() {
        let hobbies = data::hobbies();
        let out = redact_lexicon(&ts(&["table", "tennis", "club"]), &hobbies);
        assert_eq!(out.tokens, [DEL, "club"]);
        let entries: Vec<&str> = hobbies.entries().iter().map(String::as_str).collect();
        assert_eq!(out.tokens, brute_force(&["table", "tennis", "club"], &entries));
    }

    #[test]
    fn longest_match_wins() {
        let l = lex(&["a", "a b", "a b c"]);
        let out = redact_lexicon(&ts(&["a", "b", "c", "a", "b", "a"]), &l);
        assert_eq!(out.tokens, [DEL, DEL, DEL]);
    }

    #[test]
    fn phrase_span_covers_all_tokens() {
        let text = "likes Table\n  Tennis, a lot";
        let out = redact_lexicon(&tokenize(text), &data::hobbies());
        assert_eq!(out.tokens, ["likes", DEL, "a", "lot"]);
        assert_eq!(redact_lexicon_text(text, &data::hobbies()), "likes [DEL], a lot");
    }

    #[test]
    fn lexicon_rejects_bad_entries() {
        assert!(Lexicon::new("x", ["Upper"]).is_err());
        assert!(Lexicon::new("x", [DEL]).is_err());
        assert!(Lexicon::new("x", Vec::<String>::new()).is_err());
    }

    fn sample() -> Resume {
        Resume {
            id: "R1".into(),
            applicant_name: "John Doe".into(),
            gender: Gender::Male,
            years_experience: 2,
            degree: Degree::Bachelors,
            field_of_study: Field::Technical,
            raw_text: "john doe\n123 center st. new york, ny\neducation\nb.s computer science nyu, ny - may 2015\n\
                       member of a fraternity; he was a waiter\nskills\nflask, python, keras and ajax"
                .into(),
        }
    }

    #[test]
    fn empty_plan_is_identity() {
        let r = sample();
        let out = apply_plan(&r, &RedactionPlan::empty(), &LexiconSet::bundled()).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn pii_then_gender_words() {
        let r = sample();
        let plan = RedactionPlan::parse("pii,gender_words").unwrap();
        let out = apply_plan(&r, &plan, &LexiconSet::bundled()).unwrap();
        assert!(out.raw_text.starts_with("[DEL] [DEL]\n"));
        let gw = data::gender_words();
        assert!(tokenize(&out.raw_text).iter().all(|t| !gw.contains(t)));
        assert_eq!(Resume { raw_text: r.raw_text.clone(), ..out }, r);
    }

    #[test]
    fn unknown_lexicon_is_named() {
        let plan = RedactionPlan::parse("pii,nope").unwrap();
        let err = apply_plan(&sample(), &plan, &LexiconSet::bundled()).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn duplicate_pass_rejected() {
        assert!(RedactionPlan::parse("pii,hobbies,pii").is_err());
    }

    #[test]
    fn token_list_from_ranking_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rank.csv");
        std::fs::write(&p, "token,mean_abs,signed_mean,direction\nfoo,1,1,male_leaning\nbar,0.5,-0.5,female_leaning\n").unwrap();
        let l = load_token_list(&p).unwrap();
        assert_eq!(l.entries().iter().collect::<Vec<_>>(), ["bar", "foo"]);
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g", "h"]).prop_map(String::from)
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            tokens in prop::collection::vec(word(), 0..30),
            entries in prop::collection::btree_set(prop::collection::vec(word(), 1..4).prop_map(|v| v.join(" ")), 1..6),
        ) {
            let entries: Vec<&str> = entries.iter().map(String::as_str).collect();
            let toks: Vec<&str> = tokens.iter().map(String::as_str).collect();
            let l = lex(&entries);
            let out = redact_lexicon(&ts(&toks), &l);
            prop_assert_eq!(&out.tokens, &brute_force(&toks, &entries));
            // Token count shrinks by (len - 1) per match.
            let removed: usize = l.find_matches(&tokens).iter().map(|(s, e)| e - s - 1).sum();
            prop_assert_eq!(out.len(), tokens.len() - removed);
            // Idempotent.
            prop_assert_eq!(&redact_lexicon(&out, &l).tokens, &out.tokens);
            // Single-token entries never survive.
            for t in &out.tokens {
                prop_assert!(!l.single_tokens().any(|e| e == t));
            }
        }

        #[test]
        fn disjoint_lexicons_commute(
            tokens in prop::collection::vec(word(), 0..30),
            split in prop::collection::vec(0u8..3, 8),
        ) {
            let letters = ["a", "b", "c", "d", "e", "f", "g", "h"];
            let a: Vec<&str> = letters.iter().zip(&split).filter(|(_, s)| **s == 1).map(|(l, _)| *l).collect();
            let b: Vec<&str> = letters.iter().zip(&split).filter(|(_, s)| **s == 2).map(|(l, _)| *l).collect();
            prop_assume!(!a.is_empty() && !b.is_empty());
            let (la, lb) = (lex(&a), lex(&b));
            let text = tokens.join(" ");
            let ab = redact_lexicon_text(&redact_lexicon_text(&text, &la), &lb);
            let ba = redact_lexicon_text(&redact_lexicon_text(&text, &lb), &la);
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn text_and_token_paths_agree(
            tokens in prop::collection::vec(word(), 0..20),
            seps in prop::collection::vec(prop::sample::select(vec![" ", ", ", "\n", " - ", ". "]), 20),
        ) {
            let mut text = String::new();
            for (t, s) in tokens.iter().zip(&seps) {
                text.push_str(t);
                text.push_str(s);
            }
            let l = lex(&["a b", "c", "d e f"]);
            let via_text = tokenize(&redact_lexicon_text(&text, &l)).tokens;
            let via_tokens = redact_lexicon(&tokenize(&text), &l).tokens;
            prop_assert_eq!(via_text, via_tokens);
        }
    }
}
