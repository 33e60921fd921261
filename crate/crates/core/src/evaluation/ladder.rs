//! The obfuscation ladder: cumulative redaction of the test slice, scored
//! by fixed gender and screening models.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{auroc, within_job_auroc, LadderRow};
use crate::attribution::{top_k_tokens, FeatureRanking};
use crate::classifier::{TextClassifier, TrainConfig};
use crate::corpus::{Application, Resume};
use crate::error::{Error, Result};
use crate::lexicon::{LexiconSet, RedactionPlan, Redactor};
use crate::screening::{score_applications, train_screening, ScreeningInstance, ScreeningModel};
use crate::text::tokenize;

/// Training material for the retraining variant of the ladder.
#[derive(Debug, Clone, Copy)]
pub struct RetrainData<'a> {
    pub resumes: &'a [Resume],
    pub instances: &'a [ScreeningInstance],
    pub gender_config: TrainConfig,
    pub screening_config: TrainConfig,
    pub min_df: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LadderInputs<'a> {
    /// Held-out resumes before any redaction.
    pub test_resumes: &'a [Resume],
    /// Applications of the held-out resumes, for within-job AUROC.
    pub test_applications: &'a [Application],
    pub gender_model: &'a TextClassifier,
    pub screening_model: Option<&'a ScreeningModel>,
    pub screening_instances: &'a [ScreeningInstance],
    pub ranking: &'a FeatureRanking,
    pub lexicons: &'a LexiconSet,
    pub retrain: Option<RetrainData<'a>>,
}

#[derive(Debug, Clone)]
pub struct LadderOptions {
    /// Number of top-ranked features removed at each step, ascending.
    pub grid: Vec<usize>,
    pub base_plan: RedactionPlan,
}

fn label(plan: &RedactionPlan, k: usize) -> String {
    let base = plan.describe();
    if k == 0 {
        base
    } else {
        format!("{base}+top{k}")
    }
}

fn redact_resumes(resumes: &[Resume], redactor: &Redactor) -> Vec<Resume> {
    resumes.par_iter().map(|r| redactor.apply(r)).collect()
}

fn gender_scores(model: &TextClassifier, resumes: &[Resume]) -> Result<Vec<f64>> {
    resumes.par_iter().map(|r| model.score(&tokenize(&r.raw_text))).collect()
}

fn evaluate_step(inputs: &LadderInputs<'_>, plan: &RedactionPlan, k: usize) -> Result<LadderRow> {
    let mut redactor = Redactor::new(plan, inputs.lexicons)?;
    if k > 0 {
        redactor = redactor.then(top_k_tokens(inputs.ranking, k)?);
    }
    let test = redact_resumes(inputs.test_resumes, &redactor);

    let retrained;
    let (gender, screening): (&TextClassifier, Option<&ScreeningModel>) = match &inputs.retrain {
        None => (inputs.gender_model, inputs.screening_model),
        Some(data) => {
            let train = redact_resumes(data.resumes, &redactor);
            let docs: Vec<_> = train.par_iter().map(|r| tokenize(&r.raw_text)).collect();
            let labels: Vec<u8> = train.iter().map(|r| r.gender.label()).collect();
            let g = TextClassifier::fit(&docs, &labels, data.min_df, &data.gender_config)?;
            let s = match inputs.screening_model {
                None => None,
                Some(_) => {
                    let inst: Vec<ScreeningInstance> = data
                        .instances
                        .par_iter()
                        .map(|i| ScreeningInstance::new(&i.application, &redactor.apply(&i.resume), &i.job))
                        .collect();
                    Some(train_screening(&inst, &data.screening_config, data.min_df)?)
                }
            };
            retrained = (g, s);
            (&retrained.0, retrained.1.as_ref())
        }
    };

    let scores = gender_scores(gender, &test)?;
    let labels: Vec<u8> = test.iter().map(|r| r.gender.label()).collect();
    let gender_auroc = auroc(&scores, &labels)?;

    let by_id: BTreeMap<&str, (f64, u8)> = test
        .iter()
        .zip(scores.iter().zip(&labels))
        .map(|(r, (&s, &l))| (r.id.as_str(), (s, l)))
        .collect();
    let scored: Vec<(&str, f64, u8)> = inputs
        .test_applications
        .iter()
        .filter_map(|a| by_id.get(a.resume_id.as_str()).map(|&(s, l)| (a.job_id.as_str(), s, l)))
        .collect();
    let gender_within_job_auroc = within_job_auroc(&scored)?.within_job_auroc;

    let screening_auroc = match screening {
        Some(model) if !inputs.screening_instances.is_empty() => {
            let s = score_applications(model, inputs.screening_instances, Some(&redactor))?;
            let scores: Vec<f64> = s.iter().map(|x| x.score).collect();
            let labels: Vec<u8> = s.iter().map(|x| u8::from(x.callback)).collect();
            match auroc(&scores, &labels) {
                Ok(a) => Some(a),
                Err(Error::SingleClass) => None,
                Err(e) => return Err(e),
            }
        }
        _ => None,
    };

    Ok(LadderRow {
        experiment_label: label(plan, k),
        k_removed: k,
        gender_auroc,
        gender_within_job_auroc,
        screening_auroc,
    })
}

/// One row per grid entry: the base plan plus the top-k ranked tokens,
/// applied to the held-out slice only. Entries above the ranking length are
/// clamped with a warning.
pub fn run_ladder(inputs: &LadderInputs<'_>, options: &LadderOptions) -> Result<Vec<LadderRow>> {
    if options.grid.is_empty() {
        return Err(Error::InvalidConfig("ladder grid is empty".into()));
    }
    if options.grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("ladder grid must be ascending".into()));
    }
    let max_k = inputs.ranking.len();
    let grid: Vec<usize> = options
        .grid
        .iter()
        .map(|&k| {
            if k > max_k {
                log::warn!("k = {k} exceeds the {max_k} ranked features; clamping");
                max_k
            } else {
                k
            }
        })
        .collect();
    if inputs.ranking.is_empty() && grid.iter().any(|&k| k > 0) {
        log::warn!("feature ranking is empty; every ladder step reduces to the base plan");
    }
    grid.par_iter()
        .map(|&k| evaluate_step(inputs, &options.base_plan, k).map_err(|e| e.in_stage("ladder")))
        .collect()
}

/// Grid entries for the given percentages of `n_ranked`, each at least 1,
/// deduplicated and ascending.
pub fn percent_grid(percentages: &[f64], n_ranked: usize) -> Vec<usize> {
    let mut out: Vec<usize> = percentages
        .iter()
        .map(|p| ((p / 100.0 * n_ranked as f64).round() as usize).clamp(1, n_ranked.max(1)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub const DEFAULT_GRID_PERCENT: [f64; 8] = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_grid_rounds_and_dedups() {
        assert_eq!(percent_grid(&DEFAULT_GRID_PERCENT, 1000), vec![10, 20, 50, 100, 200, 400, 600, 800]);
        assert_eq!(percent_grid(&[1.0, 2.0], 10), vec![1]);
        assert_eq!(percent_grid(&[50.0], 0), vec![1]);
    }

    #[test]
    fn labels() {
        let plan = RedactionPlan::parse("pii,gender_words").unwrap();
        assert_eq!(label(&plan, 0), plan.describe());
        assert!(label(&plan, 5).ends_with("+top5"));
        assert_eq!(label(&RedactionPlan::empty(), 0), "none");
    }
}
