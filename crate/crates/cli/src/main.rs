use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use degender::pipeline::{
    parse_grid, rerun, Invocation, PipelineConfig, EMBEDDINGS_FILE, GENDER_MODEL_FILE, PAIRS_FILE, RANKING_FILE,
    SCREENING_MODEL_FILE, SPLIT_FILE,
};
use degender::synth::{NameLists, SynthConfig};
use degender::{Error, ErrorClass, Result};

/// Measure and remove gender signal from resumes, and track what removing it
/// costs a screening model.
#[derive(Debug, Parser)]
#[command(name = "degender", version)]
struct Cli {
    /// Worker threads for the parallel stages (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted gender signal.
    Synth(SynthArgs),
    /// Apply a redaction plan to every resume of a corpus.
    Redact(RedactArgs),
    /// Train word embeddings and build the matched male/female sample.
    Match(StageArgs),
    /// Split, apply the base plan, and train the gender and screening models.
    Train(TrainArgs),
    /// Rank tokens by their attribution to the gender model.
    Attribute(AttributeArgs),
    /// Run the obfuscation ladder and write the trade-off table.
    Eval(EvalArgs),
    /// Run match, train, attribute and eval in sequence.
    Pipeline(StageArgs),
    /// Re-execute the command recorded in a run manifest.
    Rerun {
        /// Path to a `*.manifest.json` file.
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output corpus file.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with generator settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of resumes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Planted token and its male/female presence odds ratio, e.g. `softball=9`
    /// (repeatable; `inf` makes the token exclusive to men).
    #[arg(long, value_name = "TOKEN=RATIO")]
    odds: Vec<String>,
    /// Presence probability of a planted token for the favored gender.
    #[arg(long)]
    marker_rate: Option<f64>,
    /// Additive male effect on callback log-odds.
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long)]
    callback_base_rate: Option<f64>,
    /// Make callback exactly "resume lists this skill".
    #[arg(long)]
    callback_token: Option<String>,
    #[arg(long)]
    gender_word_rate: Option<f64>,
    #[arg(long)]
    hobby_gender_skew: Option<f64>,
    /// Draw every applicant name from the unisex list.
    #[arg(long)]
    no_gendered_names: bool,
    /// Number of job postings.
    #[arg(long)]
    postings: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

/// Settings shared by the analysis stages.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML file with pipeline settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base redaction plan, comma separated (`pii`, lexicon names, `tokens:<file>`), or `none`.
    #[arg(long)]
    plan: Option<String>,
    /// Ladder grid: counts, percentages of ranked features, or `all`, e.g. `100,5%,all`.
    #[arg(long)]
    grid: Option<String>,
    /// Candidate regularization strengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    min_df: Option<usize>,
    /// Retrain both models at every ladder step.
    #[arg(long)]
    retrain: bool,
    /// Also write reports as line-delimited JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Replace or add a lexicon, e.g. `hobbies=my_hobbies.txt` (repeatable).
    #[arg(long, value_name = "NAME=PATH")]
    lexicon: Vec<String>,
    /// Split individual resumes instead of matched pairs.
    #[arg(long)]
    no_matching: bool,
    /// Skip the raw vs debiased embedding comparison.
    #[arg(long)]
    no_embedding_comparison: bool,
    /// Skip-gram training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Args)]
struct StageArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for all artifacts and manifests.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct RedactArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    plan: String,
    #[arg(long, value_name = "NAME=PATH")]
    lexicon: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    stage: StageArgs,
    /// Matched pairs (defaults to `<out-dir>/pairs.csv` unless --no-matching).
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    #[command(flatten)]
    stage: StageArgs,
    /// Defaults to `<out-dir>/split.json`.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Gender model, defaults to `<out-dir>/gender_model.json`.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    stage: StageArgs,
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    gender_model: Option<PathBuf>,
    #[arg(long)]
    screening_model: Option<PathBuf>,
    #[arg(long)]
    ranking: Option<PathBuf>,
    /// Embeddings for the comparison, defaults to `<out-dir>/embeddings.vec` when present.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_assignment(s: &str, what: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok((k.trim().into(), v.trim().into())),
        _ => Err(Error::InvalidConfig(format!("{what} must look like name=value, got {s:?}"))),
    }
}

fn lexicon_overrides(specs: &[String]) -> Result<BTreeMap<String, PathBuf>> {
    specs
        .iter()
        .map(|s| parse_assignment(s, "--lexicon").map(|(k, v)| (k, PathBuf::from(v))))
        .collect()
}

fn synth_config(a: &SynthArgs) -> Result<SynthConfig> {
    let mut c = match &a.config {
        Some(p) => SynthConfig::from_toml(&read_file(p)?)?,
        None => SynthConfig::default(),
    };
    if let Some(n) = a.n {
        c.n_resumes = n;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    for o in &a.odds {
        let (tok, r) = parse_assignment(o, "--odds")?;
        let r: f64 = r
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("--odds ratio for {tok:?} is not a number")))?;
        c.gendered_token_odds.insert(tok, r);
    }
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => { $(if let Some(v) = a.$flag.clone() { c.$field = v; })* };
    }
    set!(marker_rate <- marker_rate, callback_bias <- bias, callback_base_rate <- callback_base_rate,
         gender_word_rate <- gender_word_rate, hobby_gender_skew <- hobby_gender_skew, n_jobs <- postings);
    if a.callback_token.is_some() {
        c.callback_token = a.callback_token.clone();
    }
    if a.no_gendered_names {
        c.planted_name_lists = NameLists::disabled();
    }
    c.validate()?;
    Ok(c)
}

fn pipeline_config(a: &ConfigArgs) -> Result<PipelineConfig> {
    let mut c = match &a.config {
        Some(p) => PipelineConfig::from_toml(&read_file(p)?)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(p) = &a.plan {
        c.plan = p.clone();
    }
    if let Some(g) = &a.grid {
        c.grid = parse_grid(g)?;
    }
    if let Some(al) = &a.alphas {
        c.alphas = al.clone();
    }
    if let Some(m) = a.min_df {
        c.min_df = m;
    }
    if let Some(e) = a.epochs {
        c.skipgram.epochs = e;
    }
    if let Some(d) = a.dim {
        c.skipgram.dim = d;
    }
    c.retrain |= a.retrain;
    if let Some(f) = a.format {
        c.jsonl = f == Format::Jsonl;
    }
    c.lexicons.extend(lexicon_overrides(&a.lexicon)?);
    if a.no_matching {
        c.use_matching = false;
    }
    if a.no_embedding_comparison {
        c.embedding_comparison = false;
    }
    c.validate()?;
    Ok(c)
}

fn invocation(cmd: Command) -> Result<Invocation> {
    let or_default = |p: Option<PathBuf>, dir: &Path, name: &str| p.unwrap_or_else(|| dir.join(name));
    Ok(match cmd {
        Command::Synth(a) => Invocation::Synth {
            config: synth_config(&a)?,
            out: a.out,
        },
        Command::Redact(a) => {
            degender::lexicon::RedactionPlan::parse(&a.plan)?;
            Invocation::Redact {
                corpus: a.corpus,
                plan: a.plan,
                lexicons: lexicon_overrides(&a.lexicon)?,
                out: a.out,
            }
        }
        Command::Match(a) => Invocation::Match {
            config: pipeline_config(&a.config)?,
            corpus: a.corpus,
            out_dir: a.out_dir,
        },
        Command::Train(a) => {
            let config = pipeline_config(&a.stage.config)?;
            let pairs = match a.pairs {
                Some(p) => Some(p),
                None if config.use_matching => Some(a.stage.out_dir.join(PAIRS_FILE)),
                None => None,
            };
            Invocation::Train {
                corpus: a.stage.corpus,
                pairs,
                out_dir: a.stage.out_dir,
                config,
            }
        }
        Command::Attribute(a) => {
            let dir = a.stage.out_dir;
            Invocation::Attribute {
                config: pipeline_config(&a.stage.config)?,
                corpus: a.stage.corpus,
                split: or_default(a.split, &dir, SPLIT_FILE),
                model: or_default(a.model, &dir, GENDER_MODEL_FILE),
                out_dir: dir,
            }
        }
        Command::Eval(a) => {
            let dir = a.stage.out_dir;
            let config = pipeline_config(&a.stage.config)?;
            let embeddings = a.embeddings.or_else(|| {
                let p = dir.join(EMBEDDINGS_FILE);
                (config.embedding_comparison && p.exists()).then_some(p)
            });
            Invocation::Eval {
                corpus: a.stage.corpus,
                split: or_default(a.split, &dir, SPLIT_FILE),
                gender_model: or_default(a.gender_model, &dir, GENDER_MODEL_FILE),
                screening_model: or_default(a.screening_model, &dir, SCREENING_MODEL_FILE),
                ranking: or_default(a.ranking, &dir, RANKING_FILE),
                embeddings,
                out_dir: dir,
                config,
            }
        }
        Command::Pipeline(a) => Invocation::Pipeline {
            config: pipeline_config(&a.config)?,
            corpus: a.corpus,
            out_dir: a.out_dir,
        },
        Command::Rerun { .. } => unreachable!("handled before"),
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    match cli.command {
        Command::Rerun { manifest } => rerun(&manifest),
        cmd => invocation(cmd)?.run(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Internal => 3,
            })
        }
    }
}
