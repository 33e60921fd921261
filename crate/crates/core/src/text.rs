//! Tokenization and PII redaction.
//!
//! Tokens are lowercased. Whitespace-delimited chunks that look like an
//! email address or a URL are kept whole so that PII detection sees them as
//! a single unit; everything else is split into word tokens. The redaction
//! marker `[DEL]` always tokenizes to itself.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Resume;
use crate::data;
use crate::lexicon::Lexicon;

/// Replacement marker for every redacted token.
pub const DEL: &str = "[DEL]";

static WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\[del\]|[\p{L}\p{N}]+(?:[.'\-][\p{L}\p{N}]+)*[+#]*").unwrap()
});

const CHUNK_TRIM: &[char] = &[
    ',', ';', ':', '(', ')', '<', '>', '"', '\'', '[', ']', '{', '}', '|', '!', '?',
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    /// Byte ranges into the source text, one per token.
    pub source_spans: Vec<(usize, usize)>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Builds a stream without source positions (spans are synthesized as
    /// consecutive single-space separated offsets).
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut spans = Vec::with_capacity(tokens.len());
        let mut pos = 0;
        for t in &tokens {
            spans.push((pos, pos + t.len()));
            pos += t.len() + 1;
        }
        TokenStream {
            tokens,
            source_spans: spans,
        }
    }

    /// Space-joined tokens; tokenizing the result gives back the same tokens.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// `local@domain.tld`: exactly one `@`, non-empty local part, and a dotted
/// domain whose labels are all non-empty.
pub fn is_email(token: &str) -> bool {
    let mut parts = token.split('@');
    let (Some(local), Some(domain), None) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    !local.is_empty()
        && domain.contains('.')
        && domain.split('.').all(|label| !label.is_empty())
        && !token.chars().any(char::is_whitespace)
}

pub fn is_linkedin(token: &str) -> bool {
    token.to_lowercase().contains("linkedin.com")
}

pub fn is_url(token: &str) -> bool {
    let t = token.to_lowercase();
    t.starts_with("http://")
        || t.starts_with("https://")
        || t.starts_with("www.")
        || t.contains("linkedin.com/")
}

fn trim_chunk(text: &str, start: usize, end: usize) -> (usize, usize) {
    let chunk = &text[start..end];
    let lead = chunk.len() - chunk.trim_start_matches(CHUNK_TRIM).len();
    let mut trimmed = &chunk[lead..];
    // Trailing sentence punctuation.
    trimmed = trimmed.trim_end_matches(CHUNK_TRIM).trim_end_matches('.');
    trimmed = trimmed.trim_end_matches(CHUNK_TRIM);
    (start + lead, start + lead + trimmed.len())
}

pub fn tokenize(text: &str) -> TokenStream {
    let mut out = TokenStream::default();
    let push = |out: &mut TokenStream, s: usize, e: usize| {
        let raw = &text[s..e];
        let tok = if raw.eq_ignore_ascii_case(DEL) {
            DEL.to_string()
        } else {
            raw.to_lowercase()
        };
        out.tokens.push(tok);
        out.source_spans.push((s, e));
    };

    let mut offset = 0;
    for chunk in text.split_inclusive(char::is_whitespace) {
        let start = offset;
        offset += chunk.len();
        let body = chunk.trim_end_matches(char::is_whitespace);
        if body.is_empty() {
            continue;
        }
        let (s, e) = trim_chunk(text, start, start + body.len());
        if s < e {
            let candidate = &text[s..e];
            if is_email(candidate) || is_url(candidate) || is_linkedin(candidate) {
                push(&mut out, s, e);
                continue;
            }
        }
        for m in WORD.find_iter(body) {
            push(&mut out, start + m.start(), start + m.end());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiiCategory {
    Name,
    Email,
    Url,
    LinkedinId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionResult {
    pub redacted_text: String,
    pub n_replaced: usize,
    pub replaced_categories: BTreeMap<PiiCategory, usize>,
}

/// Replaces each listed byte span of `text` with `[DEL]`. Spans must be
/// sorted and non-overlapping.
pub(crate) fn replace_spans(text: &str, spans: &[(usize, usize)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for &(s, e) in spans {
        out.push_str(&text[cursor..s]);
        out.push_str(DEL);
        cursor = e;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Name-, email-, URL- and LinkedIn-based redaction.
#[derive(Debug, Clone)]
pub struct PiiRedactor {
    first_names: BTreeSet<String>,
}

impl Default for PiiRedactor {
    fn default() -> Self {
        PiiRedactor::new(data::first_name_dictionary())
    }
}

impl PiiRedactor {
    pub fn new(first_names: &Lexicon) -> Self {
        PiiRedactor {
            first_names: first_names.entries().iter().cloned().collect(),
        }
    }

    pub fn classify(&self, token: &str, name_parts: &BTreeSet<String>) -> Option<PiiCategory> {
        if token == DEL {
            None
        } else if is_email(token) {
            Some(PiiCategory::Email)
        } else if is_linkedin(token) {
            Some(PiiCategory::LinkedinId)
        } else if is_url(token) {
            Some(PiiCategory::Url)
        } else if name_parts.contains(token) || self.first_names.contains(token) {
            Some(PiiCategory::Name)
        } else {
            None
        }
    }

    pub fn redact_text(&self, text: &str, applicant_name: &str) -> RedactionResult {
        let name_parts = name_parts(applicant_name);
        let stream = tokenize(text);
        let mut spans = Vec::new();
        let mut categories = BTreeMap::new();
        for (tok, &span) in stream.tokens.iter().zip(&stream.source_spans) {
            if let Some(cat) = self.classify(tok, &name_parts) {
                spans.push(span);
                *categories.entry(cat).or_insert(0) += 1;
            }
        }
        RedactionResult {
            redacted_text: replace_spans(text, &spans),
            n_replaced: spans.len(),
            replaced_categories: categories,
        }
    }

    pub fn redact(&self, resume: &Resume) -> RedactionResult {
        self.redact_text(&resume.raw_text, &resume.applicant_name)
    }
}

/// Lowercased parts of an applicant name with at least two characters.
/// Hyphenated parts also contribute their pieces.
pub fn name_parts(applicant_name: &str) -> BTreeSet<String> {
    let mut parts = BTreeSet::new();
    for tok in tokenize(applicant_name).tokens {
        if tok == DEL {
            continue;
        }
        for piece in tok.split(['-', '\'', '.']) {
            if piece.chars().count() >= 2 {
                parts.insert(piece.to_string());
            }
        }
        if tok.chars().count() >= 2 {
            parts.insert(tok);
        }
    }
    parts
}

/// PII redaction with the bundled first-name dictionary.
pub fn redact_pii(resume: &Resume) -> RedactionResult {
    static DEFAULT: LazyLock<PiiRedactor> = LazyLock::new(PiiRedactor::default);
    DEFAULT.redact(resume)
}
