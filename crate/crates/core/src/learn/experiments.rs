//! The prediction experiments: balanced first-n-posts evaluation, the
//! first-N sweep, ban-relative sliding windows, cross-domain transfer, the
//! bag-of-words baseline, and Lo-FBU instance weighting.

use super::{
    cv_matrix, fold_metrics, stratified_folds, train_logreg, train_on_features, DesignMatrix,
    EvalReport, FeatureMask, LearnError, TrainOptions,
};
use crate::behavior::{self, UserFeatures};
use crate::corpus::{Cohort, Corpus};
use crate::learn::quality::bigram_key;
use crate::stats::{self, MatchedPairs};
use crate::textfeat::{self, LexiconSet};
use crate::trajectory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Activity-matched FBU/NBU instances, one feature row per matched user.
pub struct BalancedDataset {
    pub features: Vec<UserFeatures>,
    pub matched: MatchedPairs,
}

/// Assembles first-`n`-posts features for a list of users in parallel.
pub fn assemble_for_users(
    corpus: &Corpus,
    user_ids: &[String],
    n: usize,
    lex: &LexiconSet,
) -> Result<Vec<UserFeatures>, LearnError> {
    user_ids
        .par_iter()
        .map(|uid| {
            behavior::assemble_features(corpus, uid, n, lex)
                .map_err(|e| LearnError::Feature(e.to_string()))
        })
        .collect()
}

fn with_min_posts(corpus: &Corpus, ids: &[String], n: usize) -> Vec<String> {
    ids.iter()
        .filter(|id| corpus.user_post_indices(id).len() >= n)
        .cloned()
        .collect()
}

/// Activity-matches the cohort restricted to users with at least `min_posts`
/// posts, yielding an exactly balanced FBU/NBU user set.
pub fn build_balanced_dataset(
    corpus: &Corpus,
    cohort: &Cohort,
    min_posts: usize,
    n_features: usize,
    lex: &LexiconSet,
) -> Result<BalancedDataset, LearnError> {
    let fbus = with_min_posts(corpus, &cohort.fbu_ids, min_posts);
    let nbus = with_min_posts(corpus, &cohort.nbu_candidate_ids, min_posts);
    if fbus.is_empty() || nbus.is_empty() {
        return Err(LearnError::TooFewInstances { have: fbus.len().min(nbus.len()), need: 1 });
    }
    let matched = stats::match_on_activity(corpus, &fbus, &nbus)?;
    let users: Vec<String> = matched
        .pairs
        .iter()
        .flat_map(|p| [p.treated.clone(), p.control.clone()])
        .collect();
    let features = assemble_for_users(corpus, &users, n_features, lex)?;
    Ok(BalancedDataset { features, matched })
}

/// First-N sweep: one balanced evaluation per observation budget, over the
/// same matched user set (users must survive the largest N).
pub fn first_n_experiment(
    corpus: &Corpus,
    cohort: &Cohort,
    lex: &LexiconSet,
    n_values: &[usize],
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<BTreeMap<usize, EvalReport>, LearnError> {
    let max_n = *n_values
        .iter()
        .max()
        .ok_or_else(|| LearnError::InvalidArgument("empty n_values".to_string()))?;
    let base = build_balanced_dataset(corpus, cohort, max_n, max_n, lex)?;
    let users: Vec<String> = base.features.iter().map(|f| f.user_id.clone()).collect();
    let reports: Result<Vec<(usize, EvalReport)>, LearnError> = n_values
        .par_iter()
        .map(|&n| {
            let features = assemble_for_users(corpus, &users, n, lex)?;
            let report = super::kfold_cv(&features, FeatureMask::All, k, seed, None, opts)?;
            Ok((n, report))
        })
        .collect();
    Ok(reports?.into_iter().collect())
}

/// One sliding-window evaluation: `offset` posts back from the end of each
/// user's observed life, window of `width` posts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowReport {
    pub offset: usize,
    /// Cohort users with too few posts to supply this window.
    pub excluded_users: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlidingReport {
    pub width: usize,
    pub windows: Vec<WindowReport>,
}

/// Windows are aligned backwards from the ban (FBUs) or the last observed
/// post (NBUs); the same matched user population is evaluated at every
/// offset, so eligibility is set by the largest offset.
pub fn sliding_window_experiment(
    corpus: &Corpus,
    cohort: &Cohort,
    lex: &LexiconSet,
    width: usize,
    offsets: &[usize],
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<SlidingReport, LearnError> {
    if width < 2 {
        return Err(LearnError::InvalidArgument("window width must be at least 2".to_string()));
    }
    let max_offset = *offsets
        .iter()
        .max()
        .ok_or_else(|| LearnError::InvalidArgument("empty offsets".to_string()))?;
    let need = width + max_offset;
    let fbus = with_min_posts(corpus, &cohort.fbu_ids, need);
    let nbus = with_min_posts(corpus, &cohort.nbu_candidate_ids, need);
    if fbus.is_empty() || nbus.is_empty() {
        return Err(LearnError::TooFewInstances { have: fbus.len().min(nbus.len()), need: 1 });
    }
    let matched = stats::match_on_activity(corpus, &fbus, &nbus)?;
    let users: Vec<String> = matched
        .pairs
        .iter()
        .flat_map(|p| [p.treated.clone(), p.control.clone()])
        .collect();
    let all_cohort = cohort.fbu_ids.len() + cohort.nbu_candidate_ids.len();

    let windows: Result<Vec<WindowReport>, LearnError> = offsets
        .par_iter()
        .map(|&offset| {
            let features: Result<Vec<UserFeatures>, LearnError> = users
                .iter()
                .map(|uid| {
                    let idx = corpus.user_post_indices(uid);
                    let end = idx.len() - offset;
                    let window = &idx[end - width..end];
                    behavior::features_for_posts(corpus, uid, window, lex)
                        .map_err(|e| LearnError::Feature(e.to_string()))
                })
                .collect();
            let features = features?;
            let report = super::kfold_cv(&features, FeatureMask::All, k, seed, None, opts)?;
            let eligible = with_min_posts(corpus, &cohort.fbu_ids, width + offset).len()
                + with_min_posts(corpus, &cohort.nbu_candidate_ids, width + offset).len();
            Ok(WindowReport { offset, excluded_users: all_cohort - eligible, report })
        })
        .collect();
    Ok(SlidingReport { width, windows: windows? })
}

/// Trains on one community's balanced cohort and evaluates once on another's.
/// Standardization comes from the training side only.
pub fn cross_domain(
    train_corpus: &Corpus,
    train_cohort: &Cohort,
    test_corpus: &Corpus,
    test_cohort: &Cohort,
    lex: &LexiconSet,
    n: usize,
    opts: &TrainOptions,
) -> Result<EvalReport, LearnError> {
    let train = build_balanced_dataset(train_corpus, train_cohort, n, n, lex)?;
    let test = build_balanced_dataset(test_corpus, test_cohort, n, n, lex)?;
    let model = train_on_features(&train.features, FeatureMask::All, None, opts)?;
    let scores = super::score_features(&model, &test.features, FeatureMask::All)?;
    let labels: Vec<bool> = test.features.iter().map(|f| f.label).collect();
    let metrics = fold_metrics(&scores, &labels)?;
    Ok(EvalReport {
        auc: metrics.auc,
        accuracy: metrics.accuracy,
        f1: metrics.f1,
        recall_pos: metrics.recall_pos,
        recall_neg: metrics.recall_neg,
        folds: 1,
        per_fold: vec![metrics],
        group_recall: BTreeMap::new(),
    })
}

/// Balanced cross-validation with Lo-FBU instances up-weighted; reports
/// pooled recall for Hi-FBUs, Lo-FBUs, and NBUs alongside the usual metrics.
pub fn weighted_recall_experiment(
    corpus: &Corpus,
    cohort: &Cohort,
    lex: &LexiconSet,
    lo_weight: f64,
    n: usize,
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<EvalReport, LearnError> {
    if lo_weight < 1.0 || !lo_weight.is_finite() {
        return Err(LearnError::InvalidArgument("lo_weight must be >= 1".to_string()));
    }
    let base = build_balanced_dataset(corpus, cohort, n, n, lex)?;
    let mut weights = Vec::with_capacity(base.features.len());
    let mut tags = Vec::with_capacity(base.features.len());
    for f in &base.features {
        if f.label {
            let life = behavior::life_stats(corpus, &f.user_id)
                .map_err(|e| LearnError::Feature(e.to_string()))?;
            match trajectory::classify_hi_lo(life.deletion_fraction) {
                trajectory::FbuClass::Hi => {
                    weights.push(1.0);
                    tags.push("hi_fbu".to_string());
                }
                trajectory::FbuClass::Lo => {
                    weights.push(lo_weight);
                    tags.push("lo_fbu".to_string());
                }
            }
        } else {
            weights.push(1.0);
            tags.push("nbu".to_string());
        }
    }
    let (rows, _) = super::masked_rows(&base.features, FeatureMask::All);
    let y: Vec<bool> = base.features.iter().map(|f| f.label).collect();
    cv_matrix(
        &DesignMatrix::from_dense(&rows),
        &y,
        Some(&weights),
        Some(&tags),
        k,
        seed,
        opts,
    )
}

/// Bag-of-words baseline: per-user bigram counts over the first `n` posts,
/// with the vocabulary rebuilt from the training folds only.
pub fn bag_of_words_cv(
    corpus: &Corpus,
    cohort: &Cohort,
    n: usize,
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<EvalReport, LearnError> {
    let lex = LexiconSet::default_set();
    let base = build_balanced_dataset(corpus, cohort, n, n, &lex)?;
    let users: Vec<String> = base.features.iter().map(|f| f.user_id.clone()).collect();
    let labels: Vec<bool> = base.features.iter().map(|f| f.label).collect();
    let counts: Vec<BTreeMap<String, f64>> = users
        .par_iter()
        .map(|uid| {
            let idx = corpus.user_post_indices(uid);
            let mut counts = BTreeMap::new();
            for &i in &idx[..n] {
                if let Ok(t) = textfeat::tokenize(&corpus.posts[i].text) {
                    for (a, b) in textfeat::bigrams(&t) {
                        *counts.entry(bigram_key(&a, &b)).or_insert(0.0) += 1.0;
                    }
                }
            }
            counts
        })
        .collect();

    let folds = stratified_folds(&labels, k, seed)?;
    let mut per_fold = Vec::with_capacity(k);
    for fold in 0..k {
        let train_idx: Vec<usize> = (0..labels.len()).filter(|i| folds[*i] != fold).collect();
        let test_idx: Vec<usize> = (0..labels.len()).filter(|i| folds[*i] == fold).collect();
        let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in &train_idx {
            for (kk, v) in &counts[i] {
                *totals.entry(kk.as_str()).or_insert(0) += *v as usize;
            }
        }
        let vocab: BTreeMap<&str, u32> = totals
            .into_iter()
            .filter(|(_, c)| *c >= 2)
            .enumerate()
            .map(|(j, (kk, _))| (kk, j as u32))
            .collect();
        if vocab.is_empty() {
            return Err(LearnError::EmptyVocabulary);
        }
        let row_of = |i: usize| -> Vec<(u32, f64)> {
            counts[i]
                .iter()
                .filter_map(|(kk, v)| vocab.get(kk.as_str()).map(|&j| (j, *v)))
                .collect()
        };
        let train_rows: Vec<Vec<(u32, f64)>> = train_idx.iter().map(|&i| row_of(i)).collect();
        let yt: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
        let x = DesignMatrix::from_sparse(train_rows, vocab.len());
        let train_opts = TrainOptions { standardize: false, ..opts.clone() };
        let model = train_logreg(&x, &yt, None, None, &train_opts)?;
        let scores: Vec<f64> = test_idx.iter().map(|&i| model.predict_sparse(&row_of(i))).collect();
        let yv: Vec<bool> = test_idx.iter().map(|&i| labels[i]).collect();
        per_fold.push(fold_metrics(&scores, &yv)?);
    }
    let kf = per_fold.len() as f64;
    let mean_of = |f: fn(&super::FoldMetrics) -> f64| per_fold.iter().map(f).sum::<f64>() / kf;
    Ok(EvalReport {
        auc: mean_of(|m| m.auc),
        accuracy: mean_of(|m| m.accuracy),
        f1: mean_of(|m| m.f1),
        recall_pos: mean_of(|m| m.recall_pos),
        recall_neg: mean_of(|m| m.recall_neg),
        folds: per_fold.len(),
        per_fold,
        group_recall: BTreeMap::new(),
    })
}
