//! Elastic-net logistic regression trained by monotone accelerated proximal
//! gradient (MFISTA) with backtracking.
//!
//! Objective, with the bias left unpenalized:
//!
//! ```text
//! F(w, b) = mean_i [softplus(z_i) - y_i z_i] + alpha * (lambda |w|_1 + (1 - lambda)/2 |w|_2^2)
//! z_i = w . x_i + b
//! ```
//!
//! The smooth part is everything except the L1 term, which is handled by
//! soft-thresholding. Iterates only move when the objective does not
//! increase, so the recorded objective trace is non-increasing.

use serde::{Deserialize, Serialize};

use super::sparse::SparseVec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub mixing_lambda: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1e-3,
            mixing_lambda: 0.5,
            max_iters: 1000,
            tolerance: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn with_alpha(self, alpha: f64) -> Self {
        TrainConfig { alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.mixing_lambda) {
            return Err(Error::InvalidConfig(format!(
                "mixing_lambda must lie in [0, 1], got {}",
                self.mixing_lambda
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }

    fn l1(&self) -> f64 {
        self.alpha * self.mixing_lambda
    }

    fn l2(&self) -> f64 {
        self.alpha * (1.0 - self.mixing_lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpace {
    Tfidf { vocab_size: usize },
    Embedding { dim: usize },
}

impl FeatureSpace {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureSpace::Tfidf { vocab_size } => vocab_size,
            FeatureSpace::Embedding { dim } => dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_space: FeatureSpace,
}

impl LinearModel {
    pub fn decision(&self, x: &SparseVec) -> Result<f64> {
        if x.dim != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.dim,
            });
        }
        Ok(x.dot(&self.weights) + self.bias)
    }

    pub fn n_nonzero(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn predict_proba(model: &LinearModel, x: &SparseVec) -> Result<f64> {
    model.decision(x).map(sigmoid)
}

fn check_data(x: &[SparseVec], y: &[u8], dim: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two training rows".into()));
    }
    if let Some(r) = x.iter().find(|r| r.dim != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: r.dim,
        });
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn margins(x: &[SparseVec], w: &[f64], b: f64) -> Vec<f64> {
    x.iter().map(|r| r.dot(w) + b).collect()
}

fn mean_loss(z: &[f64], y: &[u8]) -> f64 {
    z.iter()
        .zip(y)
        .map(|(&zi, &yi)| softplus(zi) - f64::from(yi) * zi)
        .sum::<f64>()
        / z.len() as f64
}

fn sq_norm(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum()
}

fn l1_norm(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

/// Mean logistic loss plus the L2 share of the penalty.
pub fn smooth_objective(x: &[SparseVec], y: &[u8], w: &[f64], b: f64, cfg: &TrainConfig) -> f64 {
    mean_loss(&margins(x, w, b), y) + 0.5 * cfg.l2() * sq_norm(w)
}

/// Full objective including the L1 term.
pub fn objective(x: &[SparseVec], y: &[u8], w: &[f64], b: f64, cfg: &TrainConfig) -> f64 {
    smooth_objective(x, y, w, b, cfg) + cfg.l1() * l1_norm(w)
}

/// Analytic gradient of [`smooth_objective`]: `(d/dw, d/db)`.
pub fn smooth_gradient(
    x: &[SparseVec],
    y: &[u8],
    w: &[f64],
    b: f64,
    cfg: &TrainConfig,
) -> (Vec<f64>, f64) {
    let z = margins(x, w, b);
    gradient_at(x, y, &z, w, cfg)
}

fn gradient_at(x: &[SparseVec], y: &[u8], z: &[f64], w: &[f64], cfg: &TrainConfig) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|wj| cfg.l2() * wj).collect();
    let mut gb = 0.0;
    for ((row, &zi), &yi) in x.iter().zip(z).zip(y) {
        let r = (sigmoid(zi) - f64::from(yi)) / n;
        gb += r;
        for (j, v) in row.iter() {
            gw[j] += r * v;
        }
    }
    (gw, gb)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: LinearModel,
    /// Objective at the accepted iterate: the starting point, then one entry
    /// per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fit_logistic(
    x: &[SparseVec],
    y: &[u8],
    feature_space: FeatureSpace,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let dim = feature_space.dim();
    check_data(x, y, dim)?;
    let n = x.len() as f64;
    let base_rate = y.iter().filter(|&&l| l == 1).count() as f64 / n;

    let mut w = vec![0.0; dim];
    let mut b = (base_rate / (1.0 - base_rate)).ln();
    let mut f_x = objective(x, y, &w, b, cfg);
    let mut trace = vec![f_x];

    // Lipschitz bound of the smooth gradient; start optimistic and backtrack.
    let max_row_sq = x.iter().map(|r| r.norm().powi(2)).fold(0.0, f64::max);
    let lipschitz = 0.25 * (max_row_sq + 1.0) + cfg.l2();
    let mut step = 16.0 / lipschitz;

    let (mut yw, mut yb) = (w.clone(), b);
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let zy = margins(x, &yw, yb);
        let f_y = mean_loss(&zy, y) + 0.5 * cfg.l2() * sq_norm(&yw);
        let (gw, gb) = gradient_at(x, y, &zy, &yw, cfg);

        let (zw, zb, f_z_smooth) = loop {
            let zw: Vec<f64> = yw
                .iter()
                .zip(&gw)
                .map(|(v, g)| soft_threshold(v - step * g, step * cfg.l1()))
                .collect();
            let zb = yb - step * gb;
            let f_z = smooth_objective(x, y, &zw, zb, cfg);
            let mut lin = (zb - yb) * gb;
            let mut dist = (zb - yb).powi(2);
            for ((a, c), g) in zw.iter().zip(&yw).zip(&gw) {
                lin += (a - c) * g;
                dist += (a - c).powi(2);
            }
            if f_z <= f_y + lin + dist / (2.0 * step) + 1e-15 * f_y.abs() || step < 1e-20 {
                break (zw, zb, f_z);
            }
            step *= 0.5;
        };
        let f_z = f_z_smooth + cfg.l1() * l1_norm(&zw);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accepted = f_z <= f_x;
        let (prev_w, prev_b) = (w.clone(), b);
        let f_prev = f_x;
        if accepted {
            w.clone_from(&zw);
            b = zb;
            f_x = f_z;
        }
        // y = x_k + (t/t')(z - x_k) + ((t - 1)/t')(x_k - x_{k-1})
        let c1 = t / t_next;
        let c2 = (t - 1.0) / t_next;
        for j in 0..dim {
            yw[j] = w[j] + c1 * (zw[j] - w[j]) + c2 * (w[j] - prev_w[j]);
        }
        yb = b + c1 * (zb - b) + c2 * (b - prev_b);
        t = t_next;
        trace.push(f_x);

        if accepted && f_prev - f_x <= cfg.tolerance * f_prev.abs().max(1.0) {
            converged = true;
            break;
        }
        if step < 1e-20 {
            break;
        }
    }

    Ok(FitResult {
        model: LinearModel {
            weights: w,
            bias: b,
            feature_space,
        },
        objective_trace: trace,
        iterations,
        converged,
    })
}

pub fn train_logistic(
    x: &[SparseVec],
    y: &[u8],
    feature_space: FeatureSpace,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    fit_logistic(x, y, feature_space, cfg).map(|r| r.model)
}
