//! AUROC, within-job AUROC and the obfuscation-ladder report.

mod ladder;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ladder::{percent_grid, run_ladder, LadderInputs, LadderOptions, RetrainData, DEFAULT_GRID_PERCENT};

/// Mann-Whitney AUROC: the fraction of (positive, negative) pairs where the
/// positive scores higher, with half credit for ties.
///
/// Computed from midranks in doubled integer arithmetic so the result is the
/// same rational number, rounded once, as exhaustive pair counting.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("AUROC scores contain NaN".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("AUROC labels must be 0 or 1".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of doubled midranks over positives.
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share the midrank (i+1+j)/2.
        let doubled_mid = (i + 1 + j) as u64;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        doubled_rank_sum += doubled_mid * pos_in_group;
        i = j;
    }
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(doubled_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobAuroc {
    pub job_id: String,
    pub auroc: f64,
    pub n_applicants: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub within_job_auroc: Option<f64>,
    pub n_test: usize,
    pub per_job: Vec<JobAuroc>,
    /// Jobs left out of the within-job average for lacking one class.
    pub skipped_jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinJob {
    pub within_job_auroc: Option<f64>,
    pub per_job: Vec<JobAuroc>,
    pub skipped_jobs: usize,
}

impl WithinJob {
    /// Recomputes the applicant-weighted mean from `per_job`.
    pub fn weighted_mean(per_job: &[JobAuroc]) -> Option<f64> {
        let n: usize = per_job.iter().map(|j| j.n_applicants).sum();
        (n > 0).then(|| {
            per_job
                .iter()
                .map(|j| j.auroc * j.n_applicants as f64)
                .sum::<f64>()
                / n as f64
        })
    }
}

/// Per-job AUROC averaged with weights equal to each job's applicant count.
/// Jobs without both classes are skipped and counted.
pub fn within_job_auroc<S: AsRef<str>>(scored: &[(S, f64, u8)]) -> Result<WithinJob> {
    let mut by_job: BTreeMap<&str, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for (job, score, label) in scored {
        let e = by_job.entry(job.as_ref()).or_default();
        e.0.push(*score);
        e.1.push(*label);
    }
    let mut per_job = Vec::new();
    let mut skipped = 0;
    for (job, (scores, labels)) in by_job {
        match auroc(&scores, &labels) {
            Ok(a) => per_job.push(JobAuroc {
                job_id: job.to_string(),
                auroc: a,
                n_applicants: scores.len(),
            }),
            Err(Error::SingleClass) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if per_job.is_empty() {
        log::warn!("within-job AUROC undefined: no job has applicants of both classes");
    }
    Ok(WithinJob {
        within_job_auroc: WithinJob::weighted_mean(&per_job),
        per_job,
        skipped_jobs: skipped,
    })
}

pub fn evaluate<S: AsRef<str>>(scored: &[(S, f64, u8)]) -> Result<EvalReport> {
    let scores: Vec<f64> = scored.iter().map(|s| s.1).collect();
    let labels: Vec<u8> = scored.iter().map(|s| s.2).collect();
    let wj = within_job_auroc(scored)?;
    Ok(EvalReport {
        auroc: auroc(&scores, &labels)?,
        within_job_auroc: wj.within_job_auroc,
        n_test: scored.len(),
        per_job: wj.per_job,
        skipped_jobs: wj.skipped_jobs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub experiment_label: String,
    pub k_removed: usize,
    pub gender_auroc: f64,
    pub gender_within_job_auroc: Option<f64>,
    pub screening_auroc: Option<f64>,
}

pub const TRADEOFF_HEADER: [&str; 5] = [
    "experiment_label",
    "k_removed",
    "gender_auroc",
    "gender_within_job_auroc",
    "screening_auroc",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_tradeoff<W: Write>(rows: &[LadderRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRADEOFF_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.experiment_label.clone(),
            r.k_removed.to_string(),
            r.gender_auroc.to_string(),
            opt(r.gender_within_job_auroc),
            opt(r.screening_auroc),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<tradeoff>", e))?;
    Ok(())
}

/// Writes the trade-off CSV (and, when `jsonl` is set, a sibling `.jsonl`).
pub fn emit_tradeoff(rows: &[LadderRow], path: &Path, jsonl: bool) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no ladder rows to emit".into()));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_tradeoff(rows, std::io::BufWriter::new(file))?;
    if jsonl {
        let p = path.with_extension("jsonl");
        let mut out = String::new();
        for r in rows {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        std::fs::write(&p, out).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn read_tradeoff<R: std::io::Read>(r: R) -> Result<Vec<LadderRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRADEOFF_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected trade-off header {header:?}"),
        });
    }
    let parse_f = |s: &str, line: usize| -> Result<f64> {
        s.parse().map_err(|e| Error::Parse {
            line,
            message: format!("{s:?}: {e}"),
        })
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let opt_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f(s, line).map(Some)
            }
        };
        rows.push(LadderRow {
            experiment_label: rec[0].to_string(),
            k_removed: rec[1].parse().map_err(|e| Error::Parse {
                line,
                message: format!("k_removed: {e}"),
            })?,
            gender_auroc: parse_f(&rec[2], line)?,
            gender_within_job_auroc: opt_f(&rec[3])?,
            screening_auroc: opt_f(&rec[4])?,
        });
    }
    Ok(rows)
}

/// One-line text sparkline of a column, for terminal summaries.
pub fn sparkline(values: &[f64]) -> String {
    const BARS: [char; 8] = ['▁', '▂', '▃', '▄', '▅', '▆', '▇', '█'];
    values
        .iter()
        .map(|&v| {
            let t = ((v - 0.5) / 0.5).clamp(0.0, 1.0);
            BARS[((t * 7.0).round() as usize).min(7)]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive pair counting, doubled: 2 per win, 1 per tie.
    fn pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut doubled = 0u64;
        let (mut np, mut nn) = (0u64, 0u64);
        for (i, &li) in labels.iter().enumerate() {
            if li == 1 {
                np += 1;
            } else {
                nn += 1;
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj == 0 {
                    doubled += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 2,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => 0,
                    };
                }
            }
        }
        doubled as f64 / (2 * np * nn) as f64
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(auroc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn all_ties() {
        assert_eq!(auroc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn hand_enumerated() {
        let s = [0.9, 0.6, 0.4, 0.2];
        let l = [1, 0, 1, 0];
        assert_eq!(pairwise(&s, &l), 0.75);
        assert_eq!(auroc(&s, &l).unwrap(), 0.75);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(auroc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
        assert!(auroc(&[0.1], &[1, 0]).is_err());
        assert!(auroc(&[f64::NAN, 0.2], &[1, 0]).is_err());
    }

    #[test]
    fn single_separable_job() {
        let wj = within_job_auroc(&[("J1", 0.9, 1), ("J1", 0.1, 0)]).unwrap();
        assert_eq!(wj.within_job_auroc, Some(1.0));
    }

    #[test]
    fn weighted_two_jobs() {
        let scored = [
            ("A", 0.9, 1),
            ("A", 0.8, 1),
            ("A", 0.2, 0),
            ("A", 0.1, 0),
            ("B", 0.5, 1),
            ("B", 0.5, 0),
        ];
        let wj = within_job_auroc(&scored).unwrap();
        let v = wj.within_job_auroc.unwrap();
        assert!((v - (1.0 * 4.0 + 0.5 * 2.0) / 6.0).abs() <= 1e-12);
        assert_eq!(WithinJob::weighted_mean(&wj.per_job), Some(v));
    }

    #[test]
    fn single_gender_jobs_skipped() {
        let wj = within_job_auroc(&[("A", 0.9, 1), ("B", 0.1, 0), ("C", 0.3, 0)]).unwrap();
        assert_eq!(wj.within_job_auroc, None);
        assert_eq!(wj.skipped_jobs, 3);
    }

    fn row(label: &str, k: usize, s: Option<f64>) -> LadderRow {
        LadderRow {
            experiment_label: label.into(),
            k_removed: k,
            gender_auroc: 0.7123456789012345,
            gender_within_job_auroc: Some(0.1 + 0.2),
            screening_auroc: s,
        }
    }

    #[test]
    fn tradeoff_single_row() {
        let mut buf = Vec::new();
        write_tradeoff(&[row("base", 0, None)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            "experiment_label,k_removed,gender_auroc,gender_within_job_auroc,screening_auroc"
        );
    }

    #[test]
    fn tradeoff_round_trip() {
        let rows = vec![row("base", 0, Some(0.8)), row("top, 5", 5, None)];
        let mut buf = Vec::new();
        write_tradeoff(&rows, &mut buf).unwrap();
        assert_eq!(read_tradeoff(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn emit_to_unwritable_path_fails() {
        let rows = [row("base", 0, None)];
        assert!(emit_tradeoff(&rows, Path::new("/nonexistent/dir/t.csv"), false).is_err());
        assert!(emit_tradeoff(&[], Path::new("/tmp/x.csv"), false).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..=60).prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 4.0), n),
                prop::collection::vec(0u8..=1, n),
            )
        })
    }

    proptest! {
        #[test]
        fn equals_pairwise((scores, labels) in instance()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            prop_assert_eq!(auroc(&scores, &labels).unwrap().to_bits(), pairwise(&scores, &labels).to_bits());
        }

        #[test]
        fn complement_and_monotone_invariance((scores, labels) in instance()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let a = auroc(&scores, &labels).unwrap();
            let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
            prop_assert!((a + auroc(&scores, &flipped).unwrap() - 1.0).abs() < 1e-12);
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(a, auroc(&transformed, &labels).unwrap());
        }
    }
}
