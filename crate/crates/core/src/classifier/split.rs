use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitUnit {
    Resume,
    MatchedPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: (f64, f64, f64),
    pub seed: u64,
    pub unit: SplitUnit,
}

impl SplitSpec {
    pub fn new(seed: u64, unit: SplitUnit) -> Self {
        SplitSpec {
            fractions: (0.8, 0.1, 0.1),
            seed,
            unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must be non-negative and sum to 1, got {:?}",
                self.fractions
            )));
        }
        Ok(())
    }

    /// Slice sizes for `n` units: train and eval take the floor of their
    /// share, test takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = (self.fractions.0 * n as f64 + 1e-9).floor() as usize;
        let eval = ((self.fractions.1 * n as f64 + 1e-9).floor() as usize).min(n - train);
        (train, eval, n - train - eval)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub eval: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Split<T> {
    pub fn map<U>(self, mut f: impl FnMut(Vec<T>) -> Vec<U>) -> Split<U> {
        Split {
            train: f(self.train),
            eval: f(self.eval),
            test: f(self.test),
        }
    }
}

fn shuffle_slices<T: Clone>(units: &[T], spec: &SplitSpec) -> Result<Split<T>> {
    spec.validate()?;
    let mut order: Vec<T> = units.to_vec();
    order.shuffle(&mut seed::rng(spec.seed));
    let (a, b, _) = spec.sizes(order.len());
    let test = order.split_off(a + b);
    let eval = order.split_off(a);
    Ok(Split {
        train: order,
        eval,
        test,
    })
}

/// Seeded shuffle followed by contiguous slices. Ids are sorted first so the
/// result does not depend on input order.
pub fn split(ids: &[String], spec: &SplitSpec) -> Result<Split<String>> {
    let sorted: BTreeSet<&String> = ids.iter().collect();
    if sorted.len() != ids.len() {
        return Err(Error::InvalidInput("split ids must be unique".into()));
    }
    let sorted: Vec<String> = sorted.into_iter().cloned().collect();
    shuffle_slices(&sorted, spec)
}

/// Pair-unit split: both members of a pair land in the same slice.
pub fn split_pairs(pairs: &[(String, String)], spec: &SplitSpec) -> Result<Split<String>> {
    let mut seen = BTreeSet::new();
    for (m, f) in pairs {
        if !seen.insert(m) || !seen.insert(f) {
            return Err(Error::InvalidInput("split ids must be unique".into()));
        }
    }
    let mut sorted = pairs.to_vec();
    sorted.sort();
    let s = shuffle_slices(&sorted, spec)?;
    Ok(s.map(|v| v.into_iter().flat_map(|(m, f)| [m, f]).collect()))
}
