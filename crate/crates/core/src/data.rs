//! Bundled lexicons and name lists.
//!
//! Files are compiled into the binary; setting `DEGENDER_DATA_DIR` makes the
//! loaders read same-named files from that directory instead.

use std::path::PathBuf;
use std::sync::LazyLock;

use crate::lexicon::Lexicon;

pub const DATA_DIR_ENV: &str = "DEGENDER_DATA_DIR";

const GENDER_WORDS: &str = include_str!("../data/gender_words.txt");
const HOBBIES: &str = include_str!("../data/hobbies.txt");
const SKILLS: &str = include_str!("../data/skills.txt");
const NAMES_MALE: &str = include_str!("../data/first_names_male.txt");
const NAMES_FEMALE: &str = include_str!("../data/first_names_female.txt");
const NAMES_UNISEX: &str = include_str!("../data/first_names_unisex.txt");

fn bundled(file: &str, fallback: &'static str) -> String {
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let path = PathBuf::from(dir).join(file);
        match std::fs::read_to_string(&path) {
            Ok(text) => return text,
            Err(e) => log::warn!("{}: {e}; using bundled copy", path.display()),
        }
    }
    fallback.to_string()
}

/// Non-comment, non-blank lines, lowercased, in file order without duplicates.
pub fn parse_lines(text: &str) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .filter(|l| seen.insert(l.clone()))
        .collect()
}

fn lexicon(name: &str, file: &str, fallback: &'static str) -> Lexicon {
    Lexicon::from_text(name, &bundled(file, fallback))
        .unwrap_or_else(|e| panic!("bundled lexicon {file} is invalid: {e}"))
}

pub fn gender_words() -> Lexicon {
    lexicon("gender_words", "gender_words.txt", GENDER_WORDS)
}

pub fn hobbies() -> Lexicon {
    lexicon("hobbies", "hobbies.txt", HOBBIES)
}

pub fn skills() -> Lexicon {
    lexicon("skills", "skills.txt", SKILLS)
}

pub fn male_names() -> Vec<String> {
    parse_lines(&bundled("first_names_male.txt", NAMES_MALE))
}

pub fn female_names() -> Vec<String> {
    parse_lines(&bundled("first_names_female.txt", NAMES_FEMALE))
}

pub fn unisex_names() -> Vec<String> {
    parse_lines(&bundled("first_names_unisex.txt", NAMES_UNISEX))
}

static FIRST_NAMES: LazyLock<Lexicon> = LazyLock::new(|| {
    let mut all = male_names();
    all.extend(female_names());
    all.extend(unisex_names());
    Lexicon::new("first_names", all).expect("bundled first names")
});

/// Union of all bundled first-name lists.
pub fn first_name_dictionary() -> &'static Lexicon {
    &FIRST_NAMES
}
