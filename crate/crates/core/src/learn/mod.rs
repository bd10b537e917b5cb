//! Regularized logistic regression trained from scratch, ROC AUC with tie
//! handling, stratified cross-validation, and the prediction experiments.

pub mod experiments;
pub mod quality;

use crate::behavior::{self, UserFeatures};
use crate::stats::StatsError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("single-class training set")]
    SingleClass,
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few instances: have {have}, need {need}")]
    TooFewInstances { have: usize, need: usize },
    #[error("empty bigram vocabulary")]
    EmptyVocabulary,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("feature assembly: {0}")]
    Feature(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Row-sparse design matrix: each row holds `(column, value)` entries.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    rows: Vec<Vec<(u32, f64)>>,
    n_cols: usize,
}

impl DesignMatrix {
    pub fn from_dense(rows: &[Vec<f64>]) -> DesignMatrix {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| (j as u32, v))
                    .collect()
            })
            .collect();
        DesignMatrix { rows, n_cols }
    }

    pub fn from_sparse(rows: Vec<Vec<(u32, f64)>>, n_cols: usize) -> DesignMatrix {
        DesignMatrix { rows, n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    fn subset(&self, keep: &[usize]) -> DesignMatrix {
        DesignMatrix {
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            n_cols: self.n_cols,
        }
    }
}

/// Gradient-descent options. `lambda` is the L2 strength on the weights
/// (bias unpenalized); training stops when the gradient infinity-norm drops
/// below `tol` or after `max_iter` iterations.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            lambda: 1.0,
            tol: 1e-6,
            max_iter: 10_000,
            standardize: true,
        }
    }
}

/// A trained linear model with the training-side standardization baked in.
/// Constant features are flagged and their weights forced to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub constant: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vocabulary: Option<BTreeMap<String, u32>>,
}

pub const LOGIT_CLAMP: f64 = 30.0;

fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

impl LinearModel {
    fn offset(&self) -> f64 {
        let mut off = 0.0;
        for j in 0..self.weights.len() {
            if !self.constant[j] && self.means[j] != 0.0 {
                off += self.weights[j] * self.means[j] / self.sds[j];
            }
        }
        off
    }

    /// Probability of the positive class for a dense feature vector.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.weights.len() {
            return Err(LearnError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite("feature vector".to_string()));
        }
        let mut z = self.bias;
        for j in 0..x.len() {
            if !self.constant[j] {
                z += self.weights[j] * (x[j] - self.means[j]) / self.sds[j];
            }
        }
        Ok(sigmoid(z))
    }

    /// Probability of the positive class for a sparse row; absent entries
    /// are zeros.
    pub fn predict_sparse(&self, row: &[(u32, f64)]) -> f64 {
        let mut z = self.bias - self.offset();
        for &(j, v) in row {
            let j = j as usize;
            if !self.constant[j] {
                z += self.weights[j] * v / self.sds[j];
            }
        }
        sigmoid(z)
    }
}

struct Problem<'a> {
    x: &'a DesignMatrix,
    y: Vec<f64>,
    sw: Vec<f64>,
    lambda: f64,
    means: Vec<f64>,
    scales: Vec<f64>,
    constant: Vec<bool>,
}

impl Problem<'_> {
    fn logits(&self, w: &[f64], b: f64) -> Vec<f64> {
        let offset: f64 = (0..w.len())
            .map(|j| {
                if self.constant[j] {
                    0.0
                } else {
                    w[j] * self.means[j] * self.scales[j]
                }
            })
            .sum();
        self.x
            .rows
            .iter()
            .map(|row| {
                let mut z = b - offset;
                for &(j, v) in row {
                    let j = j as usize;
                    if !self.constant[j] {
                        z += w[j] * v * self.scales[j];
                    }
                }
                z
            })
            .collect()
    }

    fn loss(&self, logits: &[f64], w: &[f64]) -> f64 {
        let mut nll = 0.0;
        for (i, &z) in logits.iter().enumerate() {
            let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
            // max(z,0) - z*y + ln(1 + exp(-|z|))
            nll += self.sw[i] * (z.max(0.0) - z * self.y[i] + (-z.abs()).exp().ln_1p());
        }
        nll + 0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn grad(&self, logits: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
        let d = w.len();
        let mut acc = vec![0.0; d];
        let mut resid_sum = 0.0;
        for (i, row) in self.x.rows.iter().enumerate() {
            let res = self.sw[i] * (sigmoid(logits[i]) - self.y[i]);
            resid_sum += res;
            for &(j, v) in row {
                acc[j as usize] += res * v;
            }
        }
        let mut gw = vec![0.0; d];
        for j in 0..d {
            if self.constant[j] {
                gw[j] = self.lambda * w[j];
            } else {
                gw[j] = self.scales[j] * (acc[j] - self.means[j] * resid_sum) + self.lambda * w[j];
            }
        }
        (gw, resid_sum)
    }
}

/// Minimizes the weighted negative log-likelihood plus an L2 penalty by
/// full-batch gradient descent with Armijo backtracking (c = 1e-4,
/// shrink 0.5). Features are standardized internally from the training data
/// unless `opts.standardize` is off.
pub fn train_logreg(
    x: &DesignMatrix,
    y: &[bool],
    sample_weights: Option<&[f64]>,
    feature_names: Option<Vec<String>>,
    opts: &TrainOptions,
) -> Result<LinearModel, LearnError> {
    let n = x.n_rows();
    let d = x.n_cols();
    if y.len() != n {
        return Err(LearnError::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < 2 || d == 0 {
        return Err(LearnError::TooFewInstances { have: n, need: 2 });
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        return Err(LearnError::SingleClass);
    }
    let sw: Vec<f64> = match sample_weights {
        Some(w) => {
            if w.len() != n {
                return Err(LearnError::DimensionMismatch { expected: n, got: w.len() });
            }
            if w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(LearnError::InvalidArgument(
                    "sample weights must be positive and finite".to_string(),
                ));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    for row in &x.rows {
        for &(j, v) in row {
            if j as usize >= d {
                return Err(LearnError::DimensionMismatch { expected: d, got: j as usize + 1 });
            }
            if !v.is_finite() {
                return Err(LearnError::NonFinite(format!("feature column {j}")));
            }
        }
    }
    let names = match feature_names {
        Some(names) => {
            if names.len() != d {
                return Err(LearnError::DimensionMismatch { expected: d, got: names.len() });
            }
            names
        }
        None => (0..d).map(|j| format!("f{j}")).collect(),
    };

    // Column means and population SDs over the training rows.
    let mut sums = vec![0.0; d];
    let mut sq_sums = vec![0.0; d];
    for row in &x.rows {
        for &(j, v) in row {
            sums[j as usize] += v;
            sq_sums[j as usize] += v * v;
        }
    }
    let nf = n as f64;
    let mut means = vec![0.0; d];
    let mut sds = vec![1.0; d];
    let mut constant = vec![false; d];
    for j in 0..d {
        let m = sums[j] / nf;
        let var = (sq_sums[j] / nf - m * m).max(0.0);
        let sd = var.sqrt();
        if opts.standardize {
            if sd < 1e-12 {
                constant[j] = true;
                means[j] = m;
            } else {
                means[j] = m;
                sds[j] = sd;
            }
        }
    }
    let scales: Vec<f64> = sds.iter().map(|s| 1.0 / s).collect();

    let problem = Problem {
        x,
        y: y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        sw,
        lambda: opts.lambda,
        means: means.clone(),
        scales,
        constant: constant.clone(),
    };

    let mut w = vec![0.0; d];
    // Start the bias at the weighted-prior logit; with zero weights this is
    // already the optimum of the bias coordinate.
    let prior = {
        let wsum: f64 = problem.sw.iter().sum();
        let pos: f64 = problem.sw.iter().zip(&problem.y).map(|(s, y)| s * y).sum();
        (pos / wsum).clamp(1e-6, 1.0 - 1e-6)
    };
    let mut b = (prior / (1.0 - prior)).ln();
    let mut logits = problem.logits(&w, b);
    let mut loss = problem.loss(&logits, &w);
    let mut step = 1.0f64;
    const ARMIJO_C: f64 = 1e-4;

    for _ in 0..opts.max_iter {
        let (gw, gb) = problem.grad(&logits, &w);
        let g_inf = gw
            .iter()
            .fold(gb.abs(), |acc, v| acc.max(v.abs()));
        if g_inf < opts.tol {
            break;
        }
        let g_sq: f64 = gw.iter().map(|v| v * v).sum::<f64>() + gb * gb;
        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        while step > 1e-18 {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let bt = b - step * gb;
            let lt_logits = problem.logits(&wt, bt);
            let lt = problem.loss(&lt_logits, &wt);
            if lt.is_finite() && lt <= loss - ARMIJO_C * step * g_sq {
                w = wt;
                b = bt;
                logits = lt_logits;
                loss = lt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !loss.is_finite() {
        return Err(LearnError::NonFinite("training loss".to_string()));
    }

    Ok(LinearModel {
        format_version: 1,
        feature_names: names,
        weights: w,
        bias: b,
        means,
        sds,
        constant,
        vocabulary: None,
    })
}

/// The training objective and analytic gradient, exposed for verification
/// against finite differences.
pub fn loss_and_grad(
    x: &DesignMatrix,
    y: &[bool],
    sample_weights: Option<&[f64]>,
    lambda: f64,
    w: &[f64],
    b: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows();
    let problem = Problem {
        x,
        y: y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        sw: sample_weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec),
        lambda,
        means: vec![0.0; x.n_cols()],
        scales: vec![1.0; x.n_cols()],
        constant: vec![false; x.n_cols()],
    };
    let logits = problem.logits(w, b);
    let loss = problem.loss(&logits, w);
    let (gw, gb) = problem.grad(&logits, w);
    (loss, gw, gb)
}

/// Mann–Whitney AUC with average ranks for ties:
/// `(sum of positive ranks - n+(n+1)/2) / (n+ n-)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, LearnError> {
    if scores.len() != labels.len() {
        return Err(LearnError::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[pos]] {
            end += 1;
        }
        let avg_rank = (pos + 1 + end + 1) as f64 / 2.0;
        for &idx in &order[pos..=end] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        pos = end + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Per-fold evaluation metrics at the 0.5 decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub auc: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub recall_pos: f64,
    pub recall_neg: f64,
}

/// Cross-validated (or single-split) evaluation report. Aggregate metrics
/// are the means of the per-fold metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub recall_pos: f64,
    pub recall_neg: f64,
    pub folds: usize,
    pub per_fold: Vec<FoldMetrics>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub group_recall: BTreeMap<String, f64>,
}

pub fn fold_metrics(scores: &[f64], labels: &[bool]) -> Result<FoldMetrics, LearnError> {
    let auc = auc(scores, labels)?;
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let pred = s >= 0.5;
        match (pred, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => tn += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / labels.len() as f64;
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall_pos = if tp + fne > 0 { tp as f64 / (tp + fne) as f64 } else { 0.0 };
    let recall_neg = if tn + fp > 0 { tn as f64 / (tn + fp) as f64 } else { 0.0 };
    let f1 = if precision + recall_pos > 0.0 {
        2.0 * precision * recall_pos / (precision + recall_pos)
    } else {
        0.0
    };
    Ok(FoldMetrics { auc, accuracy, f1, recall_pos, recall_neg })
}

/// Deterministic stratified fold assignment: within each class, instances
/// are shuffled by the seed and dealt round-robin, so fold sizes differ by
/// at most one per class.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidArgument("k must be at least 2".to_string()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos < k || n_neg < k {
        return Err(LearnError::TooFewInstances { have: n_pos.min(n_neg), need: k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = pos % k;
        }
    }
    Ok(assignment)
}

fn aggregate_report(
    per_fold: Vec<FoldMetrics>,
    group_recall: BTreeMap<String, f64>,
) -> EvalReport {
    let k = per_fold.len() as f64;
    let mean_of = |f: fn(&FoldMetrics) -> f64| per_fold.iter().map(f).sum::<f64>() / k;
    EvalReport {
        auc: mean_of(|m| m.auc),
        accuracy: mean_of(|m| m.accuracy),
        f1: mean_of(|m| m.f1),
        recall_pos: mean_of(|m| m.recall_pos),
        recall_neg: mean_of(|m| m.recall_neg),
        folds: per_fold.len(),
        per_fold,
        group_recall,
    }
}

/// Stratified k-fold cross-validation over an arbitrary design matrix.
/// `group_tags` adds pooled per-group recall (fraction of the group
/// predicted as its own label) to the report.
pub fn cv_matrix(
    x: &DesignMatrix,
    y: &[bool],
    sample_weights: Option<&[f64]>,
    group_tags: Option<&[String]>,
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<EvalReport, LearnError> {
    let folds = stratified_folds(y, k, seed)?;
    let mut per_fold = Vec::with_capacity(k);
    let mut group_hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for fold in 0..k {
        let train_idx: Vec<usize> = (0..y.len()).filter(|i| folds[*i] != fold).collect();
        let test_idx: Vec<usize> = (0..y.len()).filter(|i| folds[*i] == fold).collect();
        let xt = x.subset(&train_idx);
        let yt: Vec<bool> = train_idx.iter().map(|&i| y[i]).collect();
        let wt: Option<Vec<f64>> =
            sample_weights.map(|w| train_idx.iter().map(|&i| w[i]).collect());
        let model = train_logreg(&xt, &yt, wt.as_deref(), None, opts)?;
        let scores: Vec<f64> = test_idx.iter().map(|&i| model.predict_sparse(x.row(i))).collect();
        let labels: Vec<bool> = test_idx.iter().map(|&i| y[i]).collect();
        per_fold.push(fold_metrics(&scores, &labels)?);
        if let Some(tags) = group_tags {
            for (pos, &i) in test_idx.iter().enumerate() {
                let entry = group_hits.entry(tags[i].clone()).or_insert((0, 0));
                entry.1 += 1;
                if (scores[pos] >= 0.5) == labels[pos] {
                    entry.0 += 1;
                }
            }
        }
    }
    let group_recall = group_hits
        .into_iter()
        .map(|(g, (hit, total))| (g, hit as f64 / total as f64))
        .collect();
    Ok(aggregate_report(per_fold, group_recall))
}

/// Which columns of the 35-entry feature vector a model sees, following the
/// incremental feature-set evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMask {
    Post,
    PlusActivity,
    PlusCommunity,
    All,
    ModeratorOnly,
    PropDeletedOnly,
}

impl FeatureMask {
    pub fn columns(self) -> Vec<usize> {
        match self {
            FeatureMask::Post => behavior::POST_BLOCK.collect(),
            FeatureMask::PlusActivity => (0..behavior::ACTIVITY_BLOCK.end).collect(),
            FeatureMask::PlusCommunity => (0..behavior::COMMUNITY_BLOCK.end).collect(),
            FeatureMask::All => (0..behavior::FEATURE_COUNT).collect(),
            FeatureMask::ModeratorOnly => behavior::MODERATOR_BLOCK.collect(),
            FeatureMask::PropDeletedOnly => vec![behavior::MODERATOR_BLOCK.start],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureMask::Post => "post",
            FeatureMask::PlusActivity => "+activity",
            FeatureMask::PlusCommunity => "+community",
            FeatureMask::All => "all",
            FeatureMask::ModeratorOnly => "moderator-only",
            FeatureMask::PropDeletedOnly => "prop-deleted-only",
        }
    }
}

impl std::str::FromStr for FeatureMask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "post" => Ok(FeatureMask::Post),
            "+activity" | "post+activity" => Ok(FeatureMask::PlusActivity),
            "+community" | "post+activity+community" => Ok(FeatureMask::PlusCommunity),
            "all" | "+moderator" => Ok(FeatureMask::All),
            "moderator-only" => Ok(FeatureMask::ModeratorOnly),
            "prop-deleted-only" => Ok(FeatureMask::PropDeletedOnly),
            other => Err(format!("unknown feature mask: {other}")),
        }
    }
}

/// Masked dense rows from assembled user features.
pub fn masked_rows(features: &[UserFeatures], mask: FeatureMask) -> (Vec<Vec<f64>>, Vec<String>) {
    let cols = mask.columns();
    let rows = features
        .iter()
        .map(|f| cols.iter().map(|&c| f.values[c]).collect())
        .collect();
    let names = cols
        .iter()
        .map(|&c| behavior::FEATURE_NAMES[c].to_string())
        .collect();
    (rows, names)
}

/// Stratified k-fold cross-validation over assembled user features.
pub fn kfold_cv(
    features: &[UserFeatures],
    mask: FeatureMask,
    k: usize,
    seed: u64,
    sample_weights: Option<&[f64]>,
    opts: &TrainOptions,
) -> Result<EvalReport, LearnError> {
    let (rows, _) = masked_rows(features, mask);
    let y: Vec<bool> = features.iter().map(|f| f.label).collect();
    let x = DesignMatrix::from_dense(&rows);
    cv_matrix(&x, &y, sample_weights, None, k, seed, opts)
}

/// Trains one model on the full feature set given.
pub fn train_on_features(
    features: &[UserFeatures],
    mask: FeatureMask,
    sample_weights: Option<&[f64]>,
    opts: &TrainOptions,
) -> Result<LinearModel, LearnError> {
    let (rows, names) = masked_rows(features, mask);
    let y: Vec<bool> = features.iter().map(|f| f.label).collect();
    train_logreg(&DesignMatrix::from_dense(&rows), &y, sample_weights, Some(names), opts)
}

/// Scores assembled features with a trained model.
pub fn score_features(
    model: &LinearModel,
    features: &[UserFeatures],
    mask: FeatureMask,
) -> Result<Vec<f64>, LearnError> {
    let (rows, _) = masked_rows(features, mask);
    rows.iter().map(|r| model.predict_proba(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn toy_problem() -> (DesignMatrix, Vec<bool>) {
        let rows = vec![
            vec![0.0, 1.0],
            vec![0.2, 0.8],
            vec![0.9, 0.1],
            vec![1.0, 0.0],
        ];
        let y = vec![false, false, true, true];
        (DesignMatrix::from_dense(&rows), y)
    }

    #[test]
    fn separable_data_reaches_training_auc_one() {
        let (x, y) = toy_problem();
        let model = train_logreg(&x, &y, None, None, &TrainOptions::default()).unwrap();
        let scores: Vec<f64> = (0..x.n_rows()).map(|i| model.predict_sparse(x.row(i))).collect();
        assert_abs_diff_eq!(auc(&scores, &y).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        let y = vec![true, true];
        assert!(matches!(
            train_logreg(&DesignMatrix::from_dense(&rows), &y, None, None, &TrainOptions::default()),
            Err(LearnError::SingleClass)
        ));
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = LinearModel {
            format_version: 1,
            feature_names: vec!["a".to_string(), "b".to_string()],
            weights: vec![0.0, 0.0],
            bias: 0.0,
            means: vec![0.0, 0.0],
            sds: vec![1.0, 1.0],
            constant: vec![false, false],
            vocabulary: None,
        };
        assert_abs_diff_eq!(model.predict_proba(&[3.0, -1.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn huge_bias_saturates_but_stays_finite() {
        let model = LinearModel {
            format_version: 1,
            feature_names: vec!["a".to_string()],
            weights: vec![0.0],
            bias: 1e9,
            means: vec![0.0],
            sds: vec![1.0],
            constant: vec![false],
            vocabulary: None,
        };
        let p = model.predict_proba(&[0.0]).unwrap();
        assert!(p.is_finite() && p <= 1.0 && p > 0.999);
    }

    #[test]
    fn predict_hand_computed_two_features() {
        let model = LinearModel {
            format_version: 1,
            feature_names: vec!["a".to_string(), "b".to_string()],
            weights: vec![0.5, -1.0],
            bias: 0.25,
            means: vec![1.0, 2.0],
            sds: vec![2.0, 4.0],
            constant: vec![false, false],
            vocabulary: None,
        };
        // z = 0.5*(3-1)/2 - 1*(4-2)/4 + 0.25 = 0.5 - 0.5 + 0.25 = 0.25
        let expect = 1.0 / (1.0 + (-0.25f64).exp());
        assert_abs_diff_eq!(model.predict_proba(&[3.0, 4.0]).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = LinearModel {
            format_version: 1,
            feature_names: vec!["a".to_string()],
            weights: vec![0.1],
            bias: 0.0,
            means: vec![0.0],
            sds: vec![1.0],
            constant: vec![false],
            vocabulary: None,
        };
        assert!(matches!(
            model.predict_proba(&[1.0, 2.0]),
            Err(LearnError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn sparse_and_dense_predictions_agree() {
        let (x, y) = toy_problem();
        let model = train_logreg(&x, &y, None, None, &TrainOptions::default()).unwrap();
        for i in 0..x.n_rows() {
            let dense: Vec<f64> = {
                let mut v = vec![0.0; x.n_cols()];
                for &(j, val) in x.row(i) {
                    v[j as usize] = val;
                }
                v
            };
            assert_abs_diff_eq!(
                model.predict_proba(&dense).unwrap(),
                model.predict_sparse(x.row(i)),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<bool> = (0..20).map(|_| rng.gen_bool(0.5)).collect();
            if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
                continue;
            }
            let x = DesignMatrix::from_dense(&rows);
            let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = rng.gen_range(-1.0..1.0);
            let (_, gw, gb) = loss_and_grad(&x, &y, None, 0.7, &w, b);
            let h = 1e-5;
            for j in 0..5 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let (lp, _, _) = loss_and_grad(&x, &y, None, 0.7, &wp, b);
                let (lm, _, _) = loss_and_grad(&x, &y, None, 0.7, &wm, b);
                let fd = (lp - lm) / (2.0 * h);
                let rel = (gw[j] - fd).abs() / fd.abs().max(1e-8);
                assert!(rel < 1e-4, "weight {j}: analytic {} vs fd {fd}", gw[j]);
            }
            let (lp, _, _) = loss_and_grad(&x, &y, None, 0.7, &w, b + h);
            let (lm, _, _) = loss_and_grad(&x, &y, None, 0.7, &w, b - h);
            let fd = (lp - lm) / (2.0 * h);
            assert!((gb - fd).abs() / fd.abs().max(1e-8) < 1e-4);
        }
    }

    #[test]
    fn strong_regularization_collapses_to_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let x = DesignMatrix::from_dense(&rows);
        let opts = TrainOptions { lambda: 1e9, ..TrainOptions::default() };
        let model = train_logreg(&x, &y, None, None, &opts).unwrap();
        for wj in &model.weights {
            assert!(wj.abs() < 1e-6, "weight not shrunk: {wj}");
        }
        let prior = 20.0 / 60.0;
        let p = model.predict_sparse(x.row(0));
        assert_abs_diff_eq!(p, prior, epsilon = 1e-3);
    }

    #[test]
    fn constant_feature_gets_zero_weight() {
        let rows = vec![
            vec![5.0, 0.1],
            vec![5.0, 0.9],
            vec![5.0, 0.2],
            vec![5.0, 0.8],
        ];
        let y = vec![false, true, false, true];
        let model =
            train_logreg(&DesignMatrix::from_dense(&rows), &y, None, None, &TrainOptions::default())
                .unwrap();
        assert!(model.constant[0]);
        assert_eq!(model.weights[0], 0.0);
    }

    #[test]
    fn training_standardization_ignores_unseen_rows() {
        let (x, y) = toy_problem();
        let model1 = train_logreg(&x, &y, None, None, &TrainOptions::default()).unwrap();
        // Evaluating wildly different rows must not affect a trained model.
        let test_rows = vec![vec![100.0, -50.0]];
        let _scores: Vec<f64> = test_rows.iter().map(|r| model1.predict_proba(r).unwrap()).collect();
        let model2 = train_logreg(&x, &y, None, None, &TrainOptions::default()).unwrap();
        assert_eq!(model1.weights, model2.weights);
        assert_eq!(model1.means, model2.means);
    }

    #[test]
    fn auc_brute_force_cases() {
        // one win, one loss
        let scores = [0.9, 0.8, 0.3];
        let labels = [true, false, true];
        assert_abs_diff_eq!(auc(&scores, &labels).unwrap(), 0.5, epsilon = 1e-12);
        // perfect separation
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        assert_abs_diff_eq!(auc(&scores, &labels).unwrap(), 1.0, epsilon = 1e-12);
        // total ties
        let scores = [0.5, 0.5, 0.5, 0.5];
        assert_abs_diff_eq!(auc(&scores, &labels).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn stratified_folds_are_balanced_and_deterministic() {
        let labels: Vec<bool> = (0..103).map(|i| i % 3 == 0).collect();
        let f1 = stratified_folds(&labels, 10, 9).unwrap();
        let f2 = stratified_folds(&labels, 10, 9).unwrap();
        assert_eq!(f1, f2);
        for class in [true, false] {
            let mut counts = vec![0usize; 10];
            for (i, &l) in labels.iter().enumerate() {
                if l == class {
                    counts[f1[i]] += 1;
                }
            }
            let min = counts.iter().min().unwrap();
            let max = counts.iter().max().unwrap();
            assert!(max - min <= 1, "{counts:?}");
        }
    }

    #[test]
    fn cv_rejects_k_above_class_count() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..8).map(|i| i < 3).collect();
        let err = cv_matrix(
            &DesignMatrix::from_dense(&rows),
            &y,
            None,
            None,
            5,
            0,
            &TrainOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LearnError::TooFewInstances { .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn auc_invariant_under_monotone_transform(
            scores in proptest::collection::vec(-3.0f64..3.0, 6..40),
            flips in proptest::collection::vec(proptest::bool::ANY, 6..40),
        ) {
            let n = scores.len().min(flips.len());
            let scores = &scores[..n];
            let labels = &flips[..n];
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let base = auc(scores, labels).unwrap();
            let transformed: Vec<f64> = scores.iter().map(|s| (s * 0.5).exp() + 1.0).collect();
            prop_assert!((auc(&transformed, labels).unwrap() - base).abs() < 1e-12);
            let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
            prop_assert!((auc(&negated, labels).unwrap() - (1.0 - base)).abs() < 1e-12);
        }
    }
}
