//! Two-sample and signed-rank tests with effect sizes, greedy matching on
//! activity and propensity, and the two longitudinal studies (community
//! tolerance, excessive censorship).

pub mod dist;

use crate::corpus::{Corpus, Post};
use crate::learn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("too few pairs: {have} usable, need {need}")]
    TooFewPairs { have: usize, need: usize },
    #[error("no pairs matched within the caliper")]
    NoMatches,
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("propensity model: {0}")]
    PropensityModel(String),
}

/// Outcome of a hypothesis test. `n` holds the two sample sizes for
/// two-sample tests and `[pairs_used]` for the signed-rank test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
    pub p_value: f64,
    /// Cohen's d for two-sample tests, r = |Z|/sqrt(n) for signed-rank.
    pub effect_size: f64,
    pub n: Vec<usize>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom and Cohen's d on the pooled standard deviation. The p-value uses
/// the normal approximation above 200 degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateSample(format!(
            "need at least 2 per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_var(a, ma), sample_var(b, mb));
    if va <= 0.0 && vb <= 0.0 {
        return Err(StatsError::DegenerateSample(
            "zero variance in both samples".to_string(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    let p = if df > 200.0 {
        dist::normal_two_sided_p(t)
    } else {
        dist::t_two_sided_p(t, df)
    };
    let pooled = (((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0)).sqrt();
    let d = if pooled > 0.0 { (ma - mb) / pooled } else { 0.0 };
    Ok(TestResult {
        method: "welch_t".to_string(),
        statistic: t,
        df: Some(df),
        p_value: p,
        effect_size: d,
        n: vec![a.len(), b.len()],
    })
}

/// Average ranks with ties.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[pos]] {
            end += 1;
        }
        let avg = (pos + 1 + end + 1) as f64 / 2.0;
        for &idx in &order[pos..=end] {
            ranks[idx] = avg;
        }
        pos = end + 1;
    }
    ranks
}

/// Two-sided exact p for the signed-rank statistic by enumerating all sign
/// assignments over the observed (tie-averaged) ranks.
fn wilcoxon_exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let total = 1u64 << n;
    let (mut cnt_le, mut cnt_ge) = (0u64, 0u64);
    for mask in 0..total {
        let mut w = 0.0;
        for (i, r) in ranks.iter().enumerate() {
            if mask >> i & 1 == 1 {
                w += r;
            }
        }
        if w <= w_plus + 1e-9 {
            cnt_le += 1;
        }
        if w >= w_plus - 1e-9 {
            cnt_ge += 1;
        }
    }
    (2.0 * cnt_le.min(cnt_ge) as f64 / total as f64).min(1.0)
}

/// Wilcoxon signed-rank test on paired observations. Zero differences are
/// discarded, tied magnitudes get average ranks, and the statistic is
/// W = min(W+, W-). Exact enumeration is used at n <= 10, otherwise the
/// tie-corrected normal approximation; the effect size is r = |Z|/sqrt(n)
/// in both cases.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<TestResult, StatsError> {
    let diffs: Vec<f64> = pairs.iter().map(|&(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < 6 {
        return Err(StatsError::TooFewPairs { have: n, need: 6 });
    }
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&mags);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let w_minus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d < 0.0)
        .map(|(r, _)| r)
        .sum();
    let w = w_plus.min(w_minus);

    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    {
        let mut sorted = mags.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w - mu) / var.sqrt();
    let p = if n <= 10 {
        wilcoxon_exact_p(&ranks, w_plus)
    } else {
        dist::normal_two_sided_p(z)
    };
    Ok(TestResult {
        method: "wilcoxon_signed_rank".to_string(),
        statistic: w,
        df: None,
        p_value: p,
        effect_size: z.abs() / nf.sqrt(),
        n: vec![n],
    })
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mx = mean(&rx);
    let my = mean(&ry);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Standardized mean difference with the conventional sqrt of the average
/// group variance in the denominator.
pub fn standardized_mean_difference(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let va = sample_var(a, ma);
    let vb = sample_var(b, mb);
    let pooled = ((va + vb) / 2.0).sqrt();
    if pooled <= 0.0 {
        return 0.0;
    }
    (ma - mb) / pooled
}

/// One treated/control pair and its matching distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub treated: String,
    pub control: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPairs {
    pub pairs: Vec<MatchedPair>,
    pub caliper: f64,
    pub unmatched_treated: usize,
}

/// Greedy nearest-neighbor matching without replacement: treated items in
/// the given order, each taking the closest unused control within the
/// caliper. Ties go to the lexicographically smallest control id.
fn greedy_match(
    treated: &[(String, Vec<f64>)],
    controls: &[(String, Vec<f64>)],
    caliper: f64,
) -> Result<MatchedPairs, StatsError> {
    let mut used = vec![false; controls.len()];
    let mut pairs = Vec::new();
    let mut unmatched = 0usize;
    for (tid, tx) in treated {
        let mut best: Option<(usize, f64)> = None;
        for (ci, (cid, cx)) in controls.iter().enumerate() {
            if used[ci] {
                continue;
            }
            let dist = tx
                .iter()
                .zip(cx)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let better = match best {
                None => true,
                Some((bi, bd)) => {
                    dist < bd - 1e-15
                        || ((dist - bd).abs() <= 1e-15 && cid < &controls[bi].0)
                }
            };
            if better {
                best = Some((ci, dist));
            }
        }
        match best {
            Some((ci, dist)) if dist <= caliper => {
                used[ci] = true;
                pairs.push(MatchedPair {
                    treated: tid.clone(),
                    control: controls[ci].0.clone(),
                    distance: dist,
                });
            }
            _ => unmatched += 1,
        }
    }
    if pairs.is_empty() {
        return Err(StatsError::NoMatches);
    }
    Ok(MatchedPairs { pairs, caliper, unmatched_treated: unmatched })
}

pub const ACTIVITY_CALIPER: f64 = 0.2;
pub const PROPENSITY_CALIPER: f64 = 0.05;

fn activity_covariates(corpus: &Corpus, user_id: &str) -> (f64, f64) {
    let idx = corpus.user_post_indices(user_id);
    let count = idx.len() as f64;
    let span_days = if idx.len() >= 2 {
        (corpus.posts[*idx.last().unwrap()].ts - corpus.posts[idx[0]].ts) as f64 / 86_400.0
    } else {
        0.0
    };
    let per_day = count / span_days.max(1.0);
    (count.ln(), per_day.ln())
}

/// Pairs each banned user with a similarly active never-banned user on
/// standardized (log post count, log posts/day), greedy without replacement,
/// treated processed in descending post count, caliper 0.2.
pub fn match_on_activity(
    corpus: &Corpus,
    fbu_ids: &[String],
    nbu_ids: &[String],
) -> Result<MatchedPairs, StatsError> {
    if fbu_ids.is_empty() || nbu_ids.is_empty() {
        return Err(StatsError::EmptyGroup("activity matching".to_string()));
    }
    let raw: Vec<(f64, f64)> = fbu_ids
        .iter()
        .chain(nbu_ids.iter())
        .map(|id| activity_covariates(corpus, id))
        .collect();
    let col = |f: fn(&(f64, f64)) -> f64| -> (f64, f64) {
        let xs: Vec<f64> = raw.iter().map(f).collect();
        let m = mean(&xs);
        let sd = sample_var(&xs, m).sqrt();
        (m, if sd > 0.0 { sd } else { 1.0 })
    };
    let (m0, s0) = col(|t| t.0);
    let (m1, s1) = col(|t| t.1);
    let standardize = |(a, b): (f64, f64)| vec![(a - m0) / s0, (b - m1) / s1];

    let mut treated: Vec<(String, Vec<f64>)> = fbu_ids
        .iter()
        .map(|id| (id.clone(), standardize(activity_covariates(corpus, id))))
        .collect();
    treated.sort_by(|a, b| {
        let ca = corpus.user_post_indices(&a.0).len();
        let cb = corpus.user_post_indices(&b.0).len();
        cb.cmp(&ca).then_with(|| a.0.cmp(&b.0))
    });
    let controls: Vec<(String, Vec<f64>)> = nbu_ids
        .iter()
        .map(|id| (id.clone(), standardize(activity_covariates(corpus, id))))
        .collect();
    greedy_match(&treated, &controls, ACTIVITY_CALIPER)
}

/// Pairs items across two groups on a propensity score estimated by logistic
/// regression of group membership on the covariate; greedy nearest neighbor,
/// caliper 0.05, treated processed in descending propensity.
pub fn propensity_match(
    group_a: &[(String, f64)],
    group_b: &[(String, f64)],
) -> Result<MatchedPairs, StatsError> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(StatsError::EmptyGroup("propensity matching".to_string()));
    }
    let rows: Vec<Vec<f64>> = group_a
        .iter()
        .chain(group_b.iter())
        .map(|(_, q)| vec![*q])
        .collect();
    let y: Vec<bool> = (0..rows.len()).map(|i| i < group_a.len()).collect();
    let x = learn::DesignMatrix::from_dense(&rows);
    let model = learn::train_logreg(&x, &y, None, None, &learn::TrainOptions::default())
        .map_err(|e| StatsError::PropensityModel(e.to_string()))?;
    let score = |q: f64| model.predict_proba(&[q]).expect("1-d model");

    let mut treated: Vec<(String, Vec<f64>)> = group_a
        .iter()
        .map(|(id, q)| (id.clone(), vec![score(*q)]))
        .collect();
    treated.sort_by(|a, b| {
        b.1[0]
            .partial_cmp(&a.1[0])
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    let controls: Vec<(String, Vec<f64>)> = group_b
        .iter()
        .map(|(id, q)| (id.clone(), vec![score(*q)]))
        .collect();
    greedy_match(&treated, &controls, PROPENSITY_CALIPER)
}

/// A study outcome: the signed-rank test plus the signed direction of the
/// mean difference (positive = later/heavier side larger).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub test: TestResult,
    pub direction: f64,
    pub pairs: usize,
}

/// Per-class results of the community-tolerance study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub fbu: StudyResult,
    pub nbu: StudyResult,
}

fn tolerance_side(
    corpus: &Corpus,
    user_ids: &[&str],
    scorer: &dyn Fn(&Post) -> f64,
    rng: &mut ChaCha8Rng,
) -> Result<StudyResult, StatsError> {
    let mut early = Vec::new();
    let mut late = Vec::new();
    for &uid in user_ids {
        let idx = corpus.user_post_indices(uid);
        let n = idx.len();
        let k = (n as f64 * 0.1).ceil() as usize;
        let e = idx[..k].choose(rng).copied().expect("k >= 1");
        let l = idx[n - k..].choose(rng).copied().expect("k >= 1");
        let ep = &corpus.posts[e];
        let lp = &corpus.posts[l];
        early.push((ep.post_id.clone(), scorer(ep)));
        late.push((lp.post_id.clone(), scorer(lp)));
    }
    let matched = propensity_match(&late, &early)?;
    let deleted = |pid: &str| -> f64 {
        let i = corpus.post_index(pid).expect("sampled post exists");
        if corpus.posts[i].deleted {
            1.0
        } else {
            0.0
        }
    };
    let pairs: Vec<(f64, f64)> = matched
        .pairs
        .iter()
        .map(|p| (deleted(&p.treated), deleted(&p.control)))
        .collect();
    let n_pairs = pairs.len();
    let direction = mean(&pairs.iter().map(|&(l, e)| l - e).collect::<Vec<_>>());
    let test = wilcoxon_signed_rank(&pairs)?;
    Ok(StudyResult { test, direction, pairs: n_pairs })
}

/// Samples one post from the first and last 10% of each user's life, pairs
/// early and late posts of similar predicted quality, and tests whether late
/// posts are more likely to be deleted. Run separately per class.
pub fn tolerance_bias_study(
    corpus: &Corpus,
    scorer: &dyn Fn(&Post) -> f64,
    min_posts: usize,
    seed: u64,
) -> Result<ToleranceReport, StatsError> {
    let mut fbus = Vec::new();
    let mut nbus = Vec::new();
    for (uid, rec) in &corpus.users {
        if corpus.user_post_indices(uid).len() >= min_posts {
            if rec.banned {
                fbus.push(uid.as_str());
            } else {
                nbus.push(uid.as_str());
            }
        }
    }
    if fbus.is_empty() {
        return Err(StatsError::EmptyGroup("banned users with enough posts".to_string()));
    }
    if nbus.is_empty() {
        return Err(StatsError::EmptyGroup("never-banned users with enough posts".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fbu = tolerance_side(corpus, &fbus, scorer, &mut rng)?;
    let nbu = tolerance_side(corpus, &nbus, scorer, &mut rng)?;
    Ok(ToleranceReport { fbu, nbu })
}

/// Splits users on early-deletion severity (4+ of the first five posts
/// deleted vs at most one), matches the groups on first-five predicted
/// quality, and compares the predicted quality of posts six through ten.
pub fn censorship_effect_study(
    corpus: &Corpus,
    scorer: &dyn Fn(&Post) -> f64,
    min_posts: usize,
) -> Result<StudyResult, StatsError> {
    let min_posts = min_posts.max(10);
    let mut heavy = Vec::new();
    let mut light = Vec::new();
    let mut later_quality = std::collections::HashMap::new();
    for (uid, _) in &corpus.users {
        let idx = corpus.user_post_indices(uid);
        if idx.len() < min_posts {
            continue;
        }
        let first5 = &idx[..5];
        let deleted = first5.iter().filter(|&&i| corpus.posts[i].deleted).count();
        let q15 = mean(&first5.iter().map(|&i| scorer(&corpus.posts[i])).collect::<Vec<_>>());
        let q610 = mean(&idx[5..10].iter().map(|&i| scorer(&corpus.posts[i])).collect::<Vec<_>>());
        later_quality.insert(uid.clone(), q610);
        if deleted >= 4 {
            heavy.push((uid.clone(), q15));
        } else if deleted <= 1 {
            light.push((uid.clone(), q15));
        }
    }
    if heavy.is_empty() {
        return Err(StatsError::EmptyGroup("heavily-deleted users".to_string()));
    }
    if light.is_empty() {
        return Err(StatsError::EmptyGroup("lightly-deleted users".to_string()));
    }
    let matched = propensity_match(&heavy, &light)?;
    let pairs: Vec<(f64, f64)> = matched
        .pairs
        .iter()
        .map(|p| (later_quality[&p.treated], later_quality[&p.control]))
        .collect();
    let n_pairs = pairs.len();
    let direction = mean(&pairs.iter().map(|&(h, l)| h - l).collect::<Vec<_>>());
    let test = wilcoxon_signed_rank(&pairs)?;
    Ok(StudyResult { test, direction, pairs: n_pairs })
}
