//! Per-user feature assembly: the 35-entry vector(post, activity, community,
//! moderator blocks) over a window of posts, plus whole-life summaries.

use crate::corpus::{Corpus, VoteDir};
use crate::textfeat::{self, LexiconSet};
use crate::trajectory;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::ops::Range;

pub const FEATURE_COUNT: usize = 35;
pub const POST_BLOCK: Range<usize> = 0..20;
pub const ACTIVITY_BLOCK: Range<usize> = 20..26;
pub const COMMUNITY_BLOCK: Range<usize> = 26..30;
pub const MODERATOR_BLOCK: Range<usize> = 30..35;

/// The frozen name of every feature vector entry, index-aligned.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    // post block (means of the per-post text features)
    "word_count",
    "chars_per_word",
    "sentence_count",
    "words_per_sentence",
    "ari",
    "flesch_kincaid_grade",
    "coleman_liau",
    "type_token_ratio",
    "uppercase_fraction",
    "punctuation_fraction",
    "positive_emotion",
    "negative_emotion",
    "swear",
    "tentative",
    "affect",
    "pronoun_first_singular",
    "pronoun_second",
    "negation",
    "question_mark_rate",
    "profane_emphasis",
    // activity block
    "posts_per_day",
    "posts_per_thread",
    "max_posts_in_thread",
    "fraction_replies",
    "votes_given_per_post",
    "upvote_fraction_given",
    // community block
    "votes_received_per_post",
    "upvote_fraction_received",
    "fraction_reported",
    "replies_per_post",
    // moderator block
    "fraction_deleted",
    "m1",
    "m2",
    "c1",
    "c2",
];

#[derive(Debug, thiserror::Error)]
pub enum BehaviorError {
    #[error("user {user_id}: has {have} posts, need {need}")]
    InsufficientPosts { user_id: String, have: usize, need: usize },
    #[error("unknown user: {0}")]
    UnknownUser(String),
}

/// One user's assembled feature vector over an observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatures {
    pub user_id: String,
    pub n_observed: usize,
    /// Exactly [`FEATURE_COUNT`] values in [`FEATURE_NAMES`] order.
    pub values: Vec<f64>,
    pub label: bool,
}

/// Whole-life summary used by the comparative analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLifeStats {
    pub user_id: String,
    pub total_posts: usize,
    pub lifespan_days: f64,
    pub deletion_fraction: f64,
    /// Mean over posts that have thread context; 0 when none do.
    pub mean_thread_context_similarity: f64,
    /// Number of posts that contributed to the context-similarity mean.
    pub context_posts: usize,
    pub mean_replies_received: f64,
    pub posts_per_thread: f64,
}

/// Feature vector over the user's first `n` posts.
pub fn assemble_features(
    corpus: &Corpus,
    user_id: &str,
    n: usize,
    lex: &LexiconSet,
) -> Result<UserFeatures, BehaviorError> {
    let idx = corpus.user_post_indices(user_id);
    if idx.len() < n {
        return Err(BehaviorError::InsufficientPosts {
            user_id: user_id.to_string(),
            have: idx.len(),
            need: n,
        });
    }
    features_for_posts(corpus, user_id, &idx[..n], lex)
}

/// Feature vector over an arbitrary contiguous window of a user's posts
/// (corpus indices in time order). Events are counted only up to the last
/// post of the window, so the result is independent of anything later.
pub fn features_for_posts(
    corpus: &Corpus,
    user_id: &str,
    window: &[usize],
    lex: &LexiconSet,
) -> Result<UserFeatures, BehaviorError> {
    let rec = corpus
        .users
        .get(user_id)
        .ok_or_else(|| BehaviorError::UnknownUser(user_id.to_string()))?;
    if window.len() < 2 {
        return Err(BehaviorError::InsufficientPosts {
            user_id: user_id.to_string(),
            have: window.len(),
            need: 2,
        });
    }
    let n = window.len() as f64;
    let cap_idx = *window.last().expect("non-empty window");
    let mut values = vec![0.0; FEATURE_COUNT];

    // Post block: mean of per-post text features.
    let mut post_sums = [0.0f64; 20];
    for &i in window {
        if let Ok(f) = textfeat::post_text_features(&corpus.posts[i].text, lex) {
            for (s, v) in post_sums.iter_mut().zip(f.0) {
                *s += v;
            }
        }
    }
    for (slot, s) in values[POST_BLOCK].iter_mut().zip(post_sums) {
        *slot = s / n;
    }

    // Activity block.
    let first_ts = corpus.posts[window[0]].ts;
    let last_ts = corpus.posts[cap_idx].ts;
    let span_days = (last_ts - first_ts) as f64 / 86_400.0;
    values[20] = n / span_days.max(1.0);
    let mut per_thread: HashMap<&str, usize> = HashMap::new();
    for &i in window {
        *per_thread.entry(corpus.posts[i].thread_id.as_str()).or_insert(0) += 1;
    }
    values[21] = n / per_thread.len() as f64;
    values[22] = per_thread.values().copied().max().unwrap_or(0) as f64;
    let replies = window
        .iter()
        .filter(|&&i| corpus.posts[i].parent_post_id.is_some())
        .count();
    values[23] = replies as f64 / n;
    let mut votes_given = 0usize;
    let mut upvotes_given = 0usize;
    for v in corpus.votes_by_user(user_id) {
        if let Some(ti) = corpus.post_index(&v.post_id) {
            if ti <= cap_idx && corpus.posts[ti].user_id != user_id {
                votes_given += 1;
                if v.dir == VoteDir::Up {
                    upvotes_given += 1;
                }
            }
        }
    }
    values[24] = votes_given as f64 / n;
    values[25] = if votes_given > 0 {
        upvotes_given as f64 / votes_given as f64
    } else {
        0.0
    };

    // Community block.
    let up: u64 = window.iter().map(|&i| u64::from(corpus.posts[i].up)).sum();
    let down: u64 = window.iter().map(|&i| u64::from(corpus.posts[i].down)).sum();
    values[26] = (up + down) as f64 / n;
    values[27] = if up + down > 0 { up as f64 / (up + down) as f64 } else { 0.0 };
    let reported = window.iter().filter(|&&i| corpus.posts[i].reported).count();
    values[28] = reported as f64 / n;
    let replies_received: usize = window
        .iter()
        .map(|&i| {
            corpus
                .child_indices(&corpus.posts[i].post_id)
                .iter()
                .filter(|&&c| c <= cap_idx)
                .count()
        })
        .sum();
    values[29] = replies_received as f64 / n;

    // Moderator block.
    let flags: Vec<bool> = window.iter().map(|&i| corpus.posts[i].deleted).collect();
    let deleted = flags.iter().filter(|&&d| d).count();
    values[30] = deleted as f64 / n;
    let n_buckets = flags.len().min(10);
    let buckets = trajectory::bucket_deletion_rates(&flags, n_buckets)
        .expect("window length >= bucket count");
    let fit = trajectory::two_phase_fit(&buckets);
    values[31] = fit.m1;
    values[32] = fit.m2;
    values[33] = fit.c1;
    values[34] = fit.c2;

    Ok(UserFeatures {
        user_id: user_id.to_string(),
        n_observed: window.len(),
        values,
        label: rec.banned,
    })
}

/// Whole-life aggregates; a banned user's life ends at the ban timestamp.
pub fn life_stats(corpus: &Corpus, user_id: &str) -> Result<UserLifeStats, BehaviorError> {
    let rec = corpus
        .users
        .get(user_id)
        .ok_or_else(|| BehaviorError::UnknownUser(user_id.to_string()))?;
    let idx = corpus.user_post_indices(user_id);
    if idx.is_empty() {
        return Err(BehaviorError::InsufficientPosts {
            user_id: user_id.to_string(),
            have: 0,
            need: 1,
        });
    }
    let total = idx.len();
    let first_ts = corpus.posts[idx[0]].ts;
    let end_ts = if rec.banned {
        rec.ban_ts.unwrap_or(corpus.posts[*idx.last().unwrap()].ts)
    } else {
        corpus.posts[*idx.last().unwrap()].ts
    };
    let deleted = idx.iter().filter(|&&i| corpus.posts[i].deleted).count();
    let mut sims = Vec::new();
    for &i in idx {
        if let Some(s) = textfeat::thread_context_similarity(corpus, i, 3) {
            sims.push(s);
        }
    }
    let mean_sim = if sims.is_empty() {
        0.0
    } else {
        sims.iter().sum::<f64>() / sims.len() as f64
    };
    let replies: usize = idx
        .iter()
        .map(|&i| corpus.child_indices(&corpus.posts[i].post_id).len())
        .sum();
    let mut threads: Vec<&str> = idx.iter().map(|&i| corpus.posts[i].thread_id.as_str()).collect();
    threads.sort_unstable();
    threads.dedup();
    Ok(UserLifeStats {
        user_id: user_id.to_string(),
        total_posts: total,
        lifespan_days: (end_ts - first_ts).max(0) as f64 / 86_400.0,
        deletion_fraction: deleted as f64 / total as f64,
        mean_thread_context_similarity: mean_sim,
        context_posts: sims.len(),
        mean_replies_received: replies as f64 / total as f64,
        posts_per_thread: total as f64 / threads.len() as f64,
    })
}
