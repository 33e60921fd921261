//! Synthetic resume corpora with planted, parameterized gendered signal.
//!
//! Signal sources, each independently controllable:
//! - applicant first names drawn from gendered name lists,
//! - gender-indicating words,
//! - gender-skewed hobbies,
//! - planted marker tokens whose presence odds differ by gender,
//! - a callback bias on the applicant's gender.
//!
//! Skills and filler vocabulary are drawn independently of gender. Callbacks
//! depend on a latent score counting in-demand skills on the resume.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Application, Corpus, Degree, Field, Gender, JobPosting, Resume};
use crate::data;
use crate::error::{Error, Result};
use crate::evaluation::auroc;
use crate::seed;

pub const MALE_GENDER_WORDS: &[&str] = &[
    "he", "him", "man", "men", "mens", "guy", "boy", "boys", "fraternity", "male", "waiter",
    "father", "chairman", "salesman",
];
pub const FEMALE_GENDER_WORDS: &[&str] = &[
    "she", "her", "woman", "women", "womens", "gal", "girl", "girls", "sorority", "female",
    "hostess", "waitress", "mother", "chairwoman", "saleswoman",
];

const LAST_NAMES: &[&str] = &[
    "smith", "johnson", "williams", "jones", "garcia", "miller", "davis", "rodriguez", "martinez",
    "hernandez", "lopez", "gonzalez", "wilson", "anderson", "moore", "jackson", "thompson",
    "harris", "sanchez", "clark", "ramirez", "lewis", "robinson", "walker", "allen", "nguyen",
    "torres", "flores", "rivera", "campbell", "mitchell", "roberts", "phillips", "evans",
    "turner", "diaz", "parker", "cruz", "edwards", "collins", "reyes", "stewart", "morris",
    "morales", "murphy", "cook", "rogers", "gutierrez", "ortiz", "morgan", "peterson", "bailey",
    "reed", "kelly", "howard", "ramos", "kim", "cox", "richardson", "watson", "brooks", "chavez",
    "bennett", "gray", "mendoza", "ruiz", "hughes", "price", "alvarez", "castillo", "sanders",
    "patel", "myers", "ross", "foster", "jimenez", "powell", "jenkins", "perry", "russell",
    "sullivan", "fisher", "henderson", "coleman", "simmons", "patterson", "jordan", "reynolds",
    "hamilton", "graham", "wallace", "gonzales", "chen", "wang", "singh", "kumar", "shah", "tanaka",
    "kowalski", "novak",
];

/// Neutral resume vocabulary, drawn independently of gender.
const FILLER: &[&str] = &[
    "managed", "developed", "team", "project", "projects", "client", "clients", "delivered",
    "improved", "implemented", "designed", "built", "led", "created", "maintained", "supported",
    "reduced", "increased", "analyzed", "reported", "coordinated", "collaborated", "worked",
    "responsible", "for", "with", "and", "the", "a", "to", "of", "in", "on", "across", "using",
    "within", "through", "new", "key", "daily", "weekly", "quarterly", "annual", "process",
    "processes", "system", "systems", "solutions", "services", "tools", "data", "reports",
    "requirements", "customers", "customer", "business", "internal", "external", "cross",
    "functional", "teams", "members", "senior", "junior", "staff", "department", "company",
    "organization", "initiatives", "initiative", "strategy", "strategic", "quality", "performance",
    "efficiency", "cost", "costs", "revenue", "growth", "results", "goals", "deadlines", "budget",
    "schedule", "timeline", "support", "operations", "production", "deployment", "release",
    "releases", "features", "feature", "components", "platform", "platforms", "infrastructure",
    "applications", "application", "pipelines", "pipeline", "workflows", "workflow", "standards",
    "policies", "procedures", "review", "reviews", "meetings", "presentations", "stakeholders",
    "partners", "vendors", "users", "user", "requests", "issues", "incidents", "tickets",
    "resolution", "resolved", "identified", "evaluated", "tested", "documented", "trained",
    "mentored", "established", "launched", "migrated", "integrated", "automated", "optimized",
    "streamlined", "enhanced", "ensured", "provided", "prepared", "conducted", "assisted",
    "participated", "contributed", "achieved", "exceeded", "completed", "executed", "oversaw",
    "directed", "planned", "organized", "monitored", "tracked", "measured", "updated", "upgraded",
    "configured", "installed", "administered", "handled", "served", "drove", "owned", "scaled",
    "multiple", "various", "several", "large", "small", "high", "low", "critical", "complex",
    "technical", "global", "regional", "local", "national", "enterprise", "commercial", "public",
    "private", "federal", "state", "city", "office", "site", "remote", "onsite", "clinic", "firm",
    "agency", "group", "unit", "division", "center", "program", "programs", "portfolio",
    "accounts", "account", "campaigns", "campaign", "content", "metrics", "kpis", "dashboards",
    "models", "studies", "experiments", "findings", "insights", "recommendations", "decisions",
    "planning", "execution", "delivery", "implementation", "integration", "maintenance",
    "improvement", "improvements", "changes", "transition", "rollout", "launch", "adoption",
    "percent", "million", "thousand", "hundreds", "dozens", "over", "under", "per", "by", "from",
    "as", "at", "into", "while", "including", "such", "both", "all", "each", "every", "also",
];

const SCHOOLS: &[&str] = &[
    "state university", "city college", "institute of technology", "community college",
    "polytechnic university", "national university", "metropolitan university",
];
const COMPANIES: &[&str] = &[
    "acme", "globex", "initech", "umbrella", "hooli", "vandelay", "stark", "wonka", "tyrell",
    "cyberdyne", "soylent", "aperture",
];
const JOB_TITLES: &[&str] = &[
    "software engineer", "data analyst", "data scientist", "product manager", "qa engineer",
    "systems administrator", "financial analyst", "research scientist", "legal counsel",
    "operations manager", "marketing specialist", "network engineer",
];
const BUSINESS_UNITS: &[&str] = &[
    "engineering", "finance", "legal", "marketing", "operations", "research", "it",
];
const EMPLOYMENT_TYPES: &[&str] = &["fulltime", "parttime", "contract", "internship"];
const LOCATIONS: &[&str] = &[
    "san francisco, ca", "new york, ny", "austin, tx", "seattle, wa", "boston, ma",
    "chicago, il", "denver, co", "atlanta, ga",
];
const SOURCES: &[&str] = &["jobsite", "referral", "career page", "agency"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameLists {
    pub male: Vec<String>,
    pub female: Vec<String>,
}

impl Default for NameLists {
    fn default() -> Self {
        NameLists {
            male: data::male_names(),
            female: data::female_names(),
        }
    }
}

impl NameLists {
    /// No gendered names: every applicant draws from the unisex list.
    pub fn disabled() -> Self {
        NameLists {
            male: Vec::new(),
            female: Vec::new(),
        }
    }

    pub fn enabled(&self) -> bool {
        !self.male.is_empty() && !self.female.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_resumes: usize,
    pub seed: u64,
    /// Token -> presence odds ratio (male odds / female odds). Values above 1
    /// favor male usage; `inf` means the token never appears for women.
    pub gendered_token_odds: BTreeMap<String, f64>,
    /// Presence probability of a planted token for the gender it favors.
    pub marker_rate: f64,
    pub planted_name_lists: NameLists,
    /// Probability that a resume carries one gender-indicating word of the
    /// applicant's gender.
    pub gender_word_rate: f64,
    /// Probability that each hobby is drawn from the applicant gender's half
    /// of the hobby list rather than the whole list.
    pub hobby_gender_skew: f64,
    pub hobbies_per_resume: usize,
    /// Additive effect of being male on callback log-odds.
    pub callback_bias: f64,
    pub callback_base_rate: f64,
    /// Log-odds increase per in-demand skill.
    pub callback_skill_weight: f64,
    /// When set, callback is exactly "the resume lists this skill".
    pub callback_token: Option<String>,
    pub skill_vocab_size: usize,
    pub skills_per_resume: usize,
    pub filler_per_resume: usize,
    pub n_jobs: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_resumes: 1000,
            seed: 0,
            gendered_token_odds: BTreeMap::new(),
            marker_rate: 0.5,
            planted_name_lists: NameLists::default(),
            gender_word_rate: 0.3,
            hobby_gender_skew: 0.5,
            hobbies_per_resume: 2,
            callback_bias: 0.0,
            callback_base_rate: 0.15,
            callback_skill_weight: 1.0,
            callback_token: None,
            skill_vocab_size: 100,
            skills_per_resume: 8,
            filler_per_resume: 40,
            n_jobs: 50,
        }
    }
}

impl SynthConfig {
    /// A configuration with every gendered signal switched off.
    pub fn neutral() -> Self {
        SynthConfig {
            planted_name_lists: NameLists::disabled(),
            gender_word_rate: 0.0,
            hobby_gender_skew: 0.0,
            ..SynthConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_resumes == 0 {
            return bad("n_resumes must be at least 1".into());
        }
        if self.n_jobs == 0 {
            return bad("n_jobs must be at least 1".into());
        }
        for (tok, &r) in &self.gendered_token_odds {
            if r.is_nan() || r <= 0.0 {
                return bad(format!("odds ratio for {tok:?} must be strictly positive, got {r}"));
            }
            if tok.is_empty() || tok.contains(char::is_whitespace) || *tok != tok.to_lowercase() {
                return bad(format!("planted token {tok:?} must be a single lowercase token"));
            }
        }
        for (name, p) in [
            ("marker_rate", self.marker_rate),
            ("gender_word_rate", self.gender_word_rate),
            ("hobby_gender_skew", self.hobby_gender_skew),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(0.0 < self.callback_base_rate && self.callback_base_rate < 1.0) {
            return bad("callback_base_rate must lie in (0, 1)".into());
        }
        if !(-1.0..=1.0).contains(&self.callback_bias) {
            return bad(format!("callback_bias must lie in [-1, 1], got {}", self.callback_bias));
        }
        let names = &self.planted_name_lists;
        if names.male.is_empty() != names.female.is_empty() {
            return bad("planted name lists must both be given or both be empty".into());
        }
        if self.skill_vocab_size < Field::ALL.len() {
            return bad(format!("skill_vocab_size must be at least {}", Field::ALL.len()));
        }
        Ok(())
    }
}

/// Presence probabilities `(p_male, p_female)` of a planted token.
///
/// The favored gender carries the token with probability `rate`; the other
/// gender's presence odds are the favored odds divided by the odds ratio.
pub fn presence_probs(odds_ratio: f64, rate: f64) -> (f64, f64) {
    let (favored_ratio, male_favored) = if odds_ratio >= 1.0 {
        (odds_ratio, true)
    } else {
        (1.0 / odds_ratio, false)
    };
    let other = if favored_ratio.is_infinite() {
        0.0
    } else {
        rate / (rate + favored_ratio * (1.0 - rate))
    };
    if male_favored {
        (rate, other)
    } else {
        (other, rate)
    }
}

struct Vocab {
    skills: Vec<String>,
    /// Skill indices per field cluster.
    clusters: Vec<Vec<usize>>,
    in_demand: Vec<bool>,
    hobbies: Vec<String>,
    filler: Vec<String>,
    male_first: Vec<String>,
    female_first: Vec<String>,
    unisex_first: Vec<String>,
}

impl Vocab {
    fn build(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let planted: BTreeSet<&str> = cfg.gendered_token_odds.keys().map(String::as_str).collect();
        let skills_lex = data::skills();
        let mut skills: Vec<String> = skills_lex
            .single_tokens()
            .filter(|s| !planted.contains(s))
            .map(str::to_string)
            .take(cfg.skill_vocab_size)
            .collect();
        if let Some(tok) = &cfg.callback_token {
            if !skills_lex.contains(tok) || tok.contains(' ') || planted.contains(tok.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "callback_token {tok:?} must be a single-token skill that is not a planted marker"
                )));
            }
            if !skills.contains(tok) {
                if let Some(last) = skills.last_mut() {
                    *last = tok.clone();
                }
                skills.sort();
            }
        }
        if skills.len() < cfg.skill_vocab_size {
            return Err(Error::InvalidConfig(format!(
                "skill_vocab_size {} exceeds the {} available skills",
                cfg.skill_vocab_size,
                skills.len()
            )));
        }
        let mut clusters = vec![Vec::new(); Field::ALL.len()];
        for i in 0..skills.len() {
            clusters[i % Field::ALL.len()].push(i);
        }
        let in_demand = (0..skills.len()).map(|_| rng.random_bool(0.3)).collect();

        let hobbies_lex = data::hobbies();
        let hobbies: Vec<String> = hobbies_lex
            .entries()
            .iter()
            .filter(|h| h.split(' ').all(|t| !planted.contains(t)))
            .cloned()
            .collect();

        let names = data::first_name_dictionary();
        let gender_words = data::gender_words();
        let hobby_tokens: BTreeSet<&str> = hobbies.iter().flat_map(|h| h.split(' ')).collect();
        let skill_tokens: BTreeSet<&str> =
            skills_lex.entries().iter().flat_map(|s| s.split(' ')).collect();
        let filler = FILLER
            .iter()
            .copied()
            .filter(|w| {
                !planted.contains(w)
                    && !names.contains(w)
                    && !gender_words.contains(w)
                    && !hobby_tokens.contains(w)
                    && !skill_tokens.contains(w)
            })
            .map(str::to_string)
            .collect();

        let unisex = data::unisex_names();
        Ok(Vocab {
            skills,
            clusters,
            in_demand,
            hobbies,
            filler,
            male_first: cfg.planted_name_lists.male.clone(),
            female_first: cfg.planted_name_lists.female.clone(),
            unisex_first: unisex,
        })
    }
}

fn title_case(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn degree_word(d: Degree) -> &'static str {
    match d {
        Degree::Associate => "associate",
        Degree::Bachelors => "bachelors",
        Degree::Masters => "masters",
        Degree::Doctorate => "doctorate",
    }
}

fn field_word(f: Field) -> &'static str {
    match f {
        Field::Technical => "engineering",
        Field::Science => "sciences",
        Field::Business => "management",
        Field::Law => "jurisprudence",
        Field::Other => "humanities",
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn make_jobs(cfg: &SynthConfig, vocab: &Vocab, rng: &mut ChaCha8Rng) -> Vec<JobPosting> {
    let width = cfg.n_jobs.to_string().len().max(4);
    (0..cfg.n_jobs)
        .map(|j| {
            let cluster = &vocab.clusters[j % vocab.clusters.len()];
            let mut skills: Vec<String> = cluster
                .choose_multiple(rng, 6.min(cluster.len()))
                .map(|&i| vocab.skills[i].clone())
                .collect();
            skills.sort();
            let keywords = vocab
                .filler
                .choose_multiple(rng, 3)
                .cloned()
                .collect();
            JobPosting {
                id: format!("J{j:0width$}"),
                company: format!("{} inc", COMPANIES.choose(rng).unwrap()),
                job_name: JOB_TITLES.choose(rng).unwrap().to_string(),
                business_unit: BUSINESS_UNITS.choose(rng).unwrap().to_string(),
                employment_type: EMPLOYMENT_TYPES.choose(rng).unwrap().to_string(),
                location: LOCATIONS.choose(rng).unwrap().to_string(),
                skills,
                keywords,
                source: Some(SOURCES.choose(rng).unwrap().to_string()),
            }
        })
        .collect()
}

struct Drawn {
    resume: Resume,
    n_in_demand: usize,
    skills: BTreeSet<String>,
}

fn make_resume(
    i: usize,
    width: usize,
    cfg: &SynthConfig,
    vocab: &Vocab,
    markers: &[(String, f64, f64)],
    rng: &mut ChaCha8Rng,
) -> Drawn {
    let gender = if i.is_multiple_of(2) { Gender::Male } else { Gender::Female };
    let first_pool = match (cfg.planted_name_lists.enabled(), gender) {
        (true, Gender::Male) => &vocab.male_first,
        (true, Gender::Female) => &vocab.female_first,
        (false, _) => &vocab.unisex_first,
    };
    let first = first_pool.choose(rng).unwrap().clone();
    let last = LAST_NAMES.choose(rng).unwrap().to_string();
    let years: u32 = rng.random_range(0..=30);
    let degree = *Degree::ALL.choose(rng).unwrap();
    let field = *Field::ALL.choose(rng).unwrap();
    let field_idx = Field::ALL.iter().position(|f| *f == field).unwrap();

    // Skills: mostly from the field's cluster.
    let mut skills = BTreeSet::new();
    let mut guard = 0;
    while skills.len() < cfg.skills_per_resume.min(vocab.skills.len()) && guard < 1000 {
        guard += 1;
        let idx = if rng.random_bool(0.8) {
            *vocab.clusters[field_idx].choose(rng).unwrap()
        } else {
            rng.random_range(0..vocab.skills.len())
        };
        skills.insert(idx);
    }
    let n_in_demand = skills.iter().filter(|&&s| vocab.in_demand[s]).count();
    let skill_names: Vec<String> = skills.iter().map(|&s| vocab.skills[s].clone()).collect();

    // Experience body.
    let mut body: Vec<String> = (0..cfg.filler_per_resume)
        .map(|_| vocab.filler.choose(rng).unwrap().clone())
        .collect();
    for s in skill_names.choose_multiple(rng, 3.min(skill_names.len())) {
        let at = rng.random_range(0..=body.len());
        body.insert(at, s.clone());
    }
    for (tok, p_m, p_f) in markers {
        let p = if gender == Gender::Male { *p_m } else { *p_f };
        if rng.random_bool(p) {
            let at = rng.random_range(0..=body.len());
            body.insert(at, tok.clone());
        }
    }
    if rng.random_bool(cfg.gender_word_rate) {
        let words = match gender {
            Gender::Male => MALE_GENDER_WORDS,
            Gender::Female => FEMALE_GENDER_WORDS,
        };
        let at = rng.random_range(0..=body.len());
        body.insert(at, words.choose(rng).unwrap().to_string());
    }

    let mut hobbies = Vec::new();
    if !vocab.hobbies.is_empty() {
        let parity = if gender == Gender::Male { 0 } else { 1 };
        for _ in 0..cfg.hobbies_per_resume {
            let h = if rng.random_bool(cfg.hobby_gender_skew) {
                let k = rng.random_range(0..vocab.hobbies.len().div_ceil(2));
                let idx = (2 * k + parity).min(vocab.hobbies.len() - 1);
                &vocab.hobbies[idx]
            } else {
                vocab.hobbies.choose(rng).unwrap()
            };
            if !hobbies.contains(h) {
                hobbies.push(h.clone());
            }
        }
    }

    let tag: u32 = rng.random_range(1..100);
    let school = SCHOOLS.choose(rng).unwrap();
    let grad_year = 2021 - years as i64 - rng.random_range(0..3);
    let mut text = String::new();
    text.push_str(&format!("{} {}\n", title_case(&first), title_case(&last)));
    text.push_str(&format!(
        "{first}.{last}{tag}@mail.com | linkedin.com/in/{first}{last}{tag}\n"
    ));
    text.push_str("education\n");
    text.push_str(&format!(
        "{} {}, {school} {grad_year}\n",
        degree_word(degree),
        field_word(field)
    ));
    text.push_str("experience\n");
    text.push_str(&format!("{years} years\n"));
    for line in body.chunks(12) {
        text.push_str(&line.join(" "));
        text.push_str(".\n");
    }
    text.push_str("skills\n");
    text.push_str(&skill_names.join(", "));
    text.push('\n');
    if !hobbies.is_empty() {
        text.push_str("hobbies\n");
        text.push_str(&hobbies.join(", "));
        text.push('\n');
    }

    Drawn {
        resume: Resume {
            id: format!("R{i:0width$}"),
            applicant_name: format!("{} {}", title_case(&first), title_case(&last)),
            gender,
            years_experience: years,
            degree,
            field_of_study: field,
            raw_text: text,
        },
        n_in_demand,
        skills: skill_names.into_iter().collect(),
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let vocab = Vocab::build(cfg, &mut rng)?;
    let markers: Vec<(String, f64, f64)> = cfg
        .gendered_token_odds
        .iter()
        .map(|(t, &r)| {
            let (pm, pf) = presence_probs(r, cfg.marker_rate);
            (t.clone(), pm, pf)
        })
        .collect();
    let jobs = make_jobs(cfg, &vocab, &mut rng);

    let expected_in_demand = {
        let share = vocab.in_demand.iter().filter(|&&d| d).count() as f64 / vocab.skills.len() as f64;
        share * cfg.skills_per_resume as f64
    };
    let intercept = logit(cfg.callback_base_rate);

    let width = cfg.n_resumes.to_string().len().max(5);
    let mut resumes = Vec::with_capacity(cfg.n_resumes);
    let mut applications = Vec::with_capacity(cfg.n_resumes);
    for i in 0..cfg.n_resumes {
        let drawn = make_resume(i, width, cfg, &vocab, &markers, &mut rng);
        let job = jobs.choose(&mut rng).unwrap();
        let callback = match &cfg.callback_token {
            Some(tok) => drawn.skills.contains(tok),
            None => {
                let male = if drawn.resume.gender == Gender::Male { 1.0 } else { 0.0 };
                let z = intercept
                    + cfg.callback_skill_weight * (drawn.n_in_demand as f64 - expected_in_demand)
                    + cfg.callback_bias * male;
                rng.random_bool(sigmoid(z))
            }
        };
        applications.push(Application {
            resume_id: drawn.resume.id.clone(),
            job_id: job.id.clone(),
            callback,
        });
        resumes.push(drawn.resume);
    }
    Corpus::new(resumes, jobs, applications)
}

/// Skill tokens the generator can place on resumes for this configuration.
pub fn skill_vocabulary(cfg: &SynthConfig) -> Result<Vec<String>> {
    let mut rng = seed::rng(cfg.seed);
    Ok(Vocab::build(cfg, &mut rng)?.skills)
}

/// Skills that raise callback odds for this configuration.
pub fn in_demand_skills(cfg: &SynthConfig) -> Result<Vec<String>> {
    let mut rng = seed::rng(cfg.seed);
    let v = Vocab::build(cfg, &mut rng)?;
    Ok(v.skills
        .iter()
        .zip(&v.in_demand)
        .filter(|(_, &d)| d)
        .map(|(s, _)| s.clone())
        .collect())
}

/// Log-likelihood ratio (male vs female) contributed by a planted token's
/// presence or absence.
fn marker_llr(p_m: f64, p_f: f64, present: bool) -> f64 {
    let (a, b) = if present { (p_m, p_f) } else { (1.0 - p_m, 1.0 - p_f) };
    match (a > 0.0, b > 0.0) {
        (true, true) => (a / b).ln(),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        // Impossible outcome under both genders; never sampled.
        (false, false) => 0.0,
    }
}

/// Bayes-optimal score from planted-token presence: the summed per-token
/// log-likelihood ratio, with ±inf collapsed to ±1e300 so sums stay ordered.
pub fn bayes_score(cfg: &SynthConfig, present: &dyn Fn(&str) -> bool) -> f64 {
    cfg.gendered_token_odds
        .iter()
        .map(|(t, &r)| {
            let (pm, pf) = presence_probs(r, cfg.marker_rate);
            marker_llr(pm, pf, present(t)).clamp(-1e300, 1e300)
        })
        .sum()
}

/// Monte-Carlo AUROC of the Bayes-optimal classifier that observes only the
/// planted tokens.
pub fn oracle_gender_auroc(cfg: &SynthConfig, n_mc: usize) -> Result<f64> {
    if n_mc < 10_000 {
        return Err(Error::InvalidInput(format!("n_mc must be at least 10^4, got {n_mc}")));
    }
    cfg.validate()?;
    let markers: Vec<(f64, f64)> = cfg
        .gendered_token_odds
        .values()
        .map(|&r| presence_probs(r, cfg.marker_rate))
        .collect();
    let mut rng = seed::stage_rng(cfg.seed, "oracle");
    let mut scores = Vec::with_capacity(2 * n_mc);
    let mut labels = Vec::with_capacity(2 * n_mc);
    for male in [true, false] {
        for _ in 0..n_mc {
            let s: f64 = markers
                .iter()
                .map(|&(pm, pf)| {
                    let present = rng.random_bool(if male { pm } else { pf });
                    marker_llr(pm, pf, present).clamp(-1e300, 1e300)
                })
                .sum();
            scores.push(s);
            labels.push(u8::from(male));
        }
    }
    auroc(&scores, &labels)
}

/// Shuffles a copy of the application labels; used for no-signal controls.
pub fn shuffle_callbacks(corpus: &Corpus, seed: u64) -> Corpus {
    let mut c = corpus.clone();
    let mut labels: Vec<bool> = c.applications.iter().map(|a| a.callback).collect();
    labels.shuffle(&mut seed::stage_rng(seed, "shuffle_callbacks"));
    for (a, l) in c.applications.iter_mut().zip(labels) {
        a.callback = l;
    }
    c
}
