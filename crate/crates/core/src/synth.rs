//! Seeded generative model of a discussion community with planted
//! antisocial users, the ground truth for end-to-end pipeline tests.
//!
//! Each user draws a class (FBU or NBU), an activity level, and a latent
//! quality trajectory. Posts sample tokens from a mixture of a per-thread
//! topic distribution and a global off-topic distribution; moderation
//! deletes a post when its latent quality (plus a class- and age-dependent
//! bias term and noise) falls below a threshold, and FBU-class users are
//! banned once their cumulative deletions cross a configured count.

use crate::corpus::{Corpus, Post, ThreadMeta, UserRecord, VoteDir, VoteEvent};
use crate::textfeat::LexiconSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::io::Write;

const EPOCH_START: i64 = 1_600_000_000;
const JOIN_WINDOW_DAYS: f64 = 90.0;
const MAX_POSTS_PER_USER: usize = 400;
const THREAD_MEMORY: usize = 5;

const POSITIVE_PLANT: [&str; 5] = ["good", "great", "thanks", "happy", "agree"];
const SWEAR_PLANT: [&str; 5] = ["damn", "stupid", "idiot", "crap", "hell"];

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Behavioral parameters of one user class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    /// Probability a token comes from the thread topic (vs off-topic).
    pub on_topic_mixing: f64,
    /// Mean of the latent quality scalar in [0, 1].
    pub base_quality: f64,
    /// Signed quality change per life decile.
    pub quality_drift_per_decile: f64,
    pub words_per_sentence: f64,
    pub reply_propensity: f64,
    pub upvote_fraction_received: f64,
    pub upvote_fraction_given: f64,
    pub positive_word_rate: f64,
    pub swear_word_rate: f64,
    /// Multiplier on `mean_posts_per_user`.
    pub activity_multiplier: f64,
    /// Number of favored threads; smaller pools concentrate activity.
    pub thread_pool_size: usize,
    /// Relative weight of this class's posts when others choose a parent.
    pub reply_attraction: f64,
    /// Probability a word is written in all caps.
    pub shout_rate: f64,
    /// Probability a sentence ends with a question mark.
    pub question_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub community_name: String,
    pub n_users: usize,
    pub fbu_fraction: f64,
    pub n_threads: usize,
    pub mean_posts_per_user: f64,
    pub vocabulary_size: usize,
    pub nbu: ClassParams,
    pub fbu: ClassParams,
    /// Extra deletion pressure per life decile applied to FBUs only.
    pub moderator_bias_gain: f64,
    pub deletion_threshold: f64,
    pub deletion_threshold_noise: f64,
    /// Latent-quality drop per prior deletion (excessive-censorship coupling).
    pub censorship_feedback: f64,
    /// Cumulative deletions after which an FBU-class user is banned.
    pub ban_after_deletions: usize,
    /// Fraction of FBU-class users that sprinkle URLs into posts.
    pub url_poster_fraction: f64,
    pub mean_words_per_post: f64,
    pub votes_received_rate: f64,
    pub vote_give_rate: f64,
    pub report_rate_deleted: f64,
    pub report_rate_kept: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            community_name: "synthetic".to_string(),
            n_users: 2000,
            fbu_fraction: 0.10,
            n_threads: 200,
            mean_posts_per_user: 40.0,
            vocabulary_size: 500,
            nbu: ClassParams {
                on_topic_mixing: 0.80,
                base_quality: 0.75,
                quality_drift_per_decile: 0.0,
                words_per_sentence: 8.0,
                reply_propensity: 0.45,
                upvote_fraction_received: 0.85,
                upvote_fraction_given: 0.90,
                positive_word_rate: 0.05,
                swear_word_rate: 0.004,
                activity_multiplier: 0.9,
                thread_pool_size: 12,
                reply_attraction: 1.0,
                shout_rate: 0.01,
                question_rate: 0.10,
            },
            fbu: ClassParams {
                on_topic_mixing: 0.30,
                base_quality: 0.62,
                quality_drift_per_decile: -0.025,
                words_per_sentence: 14.0,
                reply_propensity: 0.55,
                upvote_fraction_received: 0.45,
                upvote_fraction_given: 0.55,
                positive_word_rate: 0.012,
                swear_word_rate: 0.05,
                activity_multiplier: 1.8,
                thread_pool_size: 3,
                reply_attraction: 2.5,
                shout_rate: 0.06,
                question_rate: 0.20,
            },
            moderator_bias_gain: 0.012,
            deletion_threshold: 0.50,
            deletion_threshold_noise: 0.12,
            censorship_feedback: 0.0,
            ban_after_deletions: 12,
            url_poster_fraction: 0.0,
            mean_words_per_post: 26.0,
            votes_received_rate: 0.8,
            vote_give_rate: 0.35,
            report_rate_deleted: 0.45,
            report_rate_kept: 0.015,
            seed: 42,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let fraction_fields = [
            ("fbu_fraction", self.fbu_fraction),
            ("url_poster_fraction", self.url_poster_fraction),
            ("nbu.on_topic_mixing", self.nbu.on_topic_mixing),
            ("fbu.on_topic_mixing", self.fbu.on_topic_mixing),
            ("nbu.base_quality", self.nbu.base_quality),
            ("fbu.base_quality", self.fbu.base_quality),
            ("nbu.reply_propensity", self.nbu.reply_propensity),
            ("fbu.reply_propensity", self.fbu.reply_propensity),
            ("nbu.upvote_fraction_received", self.nbu.upvote_fraction_received),
            ("fbu.upvote_fraction_received", self.fbu.upvote_fraction_received),
            ("nbu.upvote_fraction_given", self.nbu.upvote_fraction_given),
            ("fbu.upvote_fraction_given", self.fbu.upvote_fraction_given),
        ];
        for (name, v) in fraction_fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::InvalidConfig(format!("{name} = {v} not in [0, 1]")));
            }
        }
        if self.n_users < 2 {
            return Err(SynthError::InvalidConfig("n_users must be at least 2".to_string()));
        }
        if self.vocabulary_size < 10 {
            return Err(SynthError::InvalidConfig(
                "vocabulary_size must be at least 10".to_string(),
            ));
        }
        if self.n_threads == 0 {
            return Err(SynthError::InvalidConfig("n_threads must be positive".to_string()));
        }
        if self.mean_posts_per_user <= 0.0 {
            return Err(SynthError::InvalidConfig(
                "mean_posts_per_user must be positive".to_string(),
            ));
        }
        if self.deletion_threshold_noise <= 0.0 {
            return Err(SynthError::InvalidConfig(
                "deletion_threshold_noise must be positive".to_string(),
            ));
        }
        if self.moderator_bias_gain < 0.0 {
            return Err(SynthError::InvalidConfig(
                "moderator_bias_gain must be non-negative".to_string(),
            ));
        }
        if self.ban_after_deletions == 0 {
            return Err(SynthError::InvalidConfig(
                "ban_after_deletions must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserClass {
    Fbu,
    Nbu,
}

/// Planted latent parameters of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTruth {
    pub class: UserClass,
    pub base_quality: f64,
    pub drift: f64,
    pub url_poster: bool,
    pub planned_posts: usize,
}

/// Everything the generator knows that the corpus does not say.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub users: BTreeMap<String, UserTruth>,
    /// Latent quality of every generated post.
    pub post_quality: BTreeMap<String, f64>,
}

impl GroundTruth {
    /// Writes the `{"user_id","class","base_quality","drift"}` JSONL file.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            user_id: &'a str,
            class: UserClass,
            base_quality: f64,
            drift: f64,
        }
        for (uid, t) in &self.users {
            let line = serde_json::to_string(&Line {
                user_id: uid,
                class: t.class,
                base_quality: t.base_quality,
                drift: t.drift,
            })
            .expect("serialize");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Scorer over the planted per-post latent quality.
    pub fn quality_scorer(&self) -> impl Fn(&Post) -> f64 + '_ {
        |p: &Post| self.post_quality.get(&p.post_id).copied().unwrap_or(0.5)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn lognormal(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> f64 {
    let mu = mean.ln() - 0.5 * sigma * sigma;
    (mu + sigma * normal(rng)).exp()
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    let l = (-lambda).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.gen_range(0.0..1.0f64);
        if p <= l || k > 10_000 {
            return k;
        }
        k += 1;
    }
}

/// Deterministic pseudo-word for vocabulary slot `i`.
fn pseudo_word(i: usize) -> String {
    const CONS: &[u8] = b"bcdfghjklmnprstvz";
    const VOW: &[u8] = b"aeiou";
    let n_syll = 2 + (i % 3);
    let mut word = String::new();
    let mut v = i;
    for _ in 0..n_syll {
        word.push(CONS[v % CONS.len()] as char);
        v /= CONS.len();
        word.push(VOW[v % VOW.len()] as char);
        v /= VOW.len();
        v = v.wrapping_mul(2654435761).wrapping_add(i);
    }
    word
}

struct Vocabulary {
    words: Vec<String>,
    zipf_cum: Vec<f64>,
}

impl Vocabulary {
    fn build(size: usize) -> Vocabulary {
        let lex = LexiconSet::default_set();
        let collides = |w: &str| {
            lex.category_names().any(|c| {
                let t = crate::textfeat::tokenize(w).expect("word");
                lex.proportion(c, &t) > 0.0
            })
        };
        let mut words = Vec::with_capacity(size);
        let mut cand = 0usize;
        while words.len() < size {
            let w = pseudo_word(cand);
            cand += 1;
            if !collides(&w) && !words.contains(&w) {
                words.push(w);
            }
        }
        let mut cum = Vec::with_capacity(size);
        let mut total = 0.0;
        for r in 0..size {
            total += 1.0 / ((r + 1) as f64).powf(1.1);
            cum.push(total);
        }
        for c in &mut cum {
            *c /= total;
        }
        Vocabulary { words, zipf_cum: cum }
    }

    /// Zipf-distributed rank sample.
    fn sample_rank(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen_range(0.0..1.0);
        self.zipf_cum.partition_point(|&c| c < u)
    }
}

struct UserState {
    id: String,
    class: UserClass,
    base_quality: f64,
    drift: f64,
    planned: usize,
    made: usize,
    deletions: usize,
    banned_at: Option<i64>,
    url_poster: bool,
    thread_pool: Vec<usize>,
}

/// A post already placed in a thread, available as a reply target.
struct RecentPost {
    post_id: String,
    author_idx: usize,
    attraction: f64,
}

/// Generates a corpus and its ground truth. Deterministic for a fixed seed:
/// one RNG stream, fixed iteration order throughout.
pub fn generate(config: &SynthConfig) -> Result<(Corpus, GroundTruth), SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = Vocabulary::build(config.vocabulary_size);

    // Threads with topic offsets into the shared Zipf ranking.
    let mut threads = Vec::with_capacity(config.n_threads);
    let mut topic_offsets = Vec::with_capacity(config.n_threads);
    for t in 0..config.n_threads {
        threads.push(ThreadMeta {
            thread_id: format!("t{t:05}"),
            article_id: None,
            created_ts: EPOCH_START + t as i64,
        });
        topic_offsets.push(rng.gen_range(0..config.vocabulary_size));
    }

    // Users and their planned posting schedules.
    let mut users = Vec::with_capacity(config.n_users);
    let mut events: Vec<(i64, usize, usize)> = Vec::new();
    for u in 0..config.n_users {
        let is_fbu = rng.gen_bool(config.fbu_fraction);
        let params = if is_fbu { &config.fbu } else { &config.nbu };
        let mean_posts = config.mean_posts_per_user * params.activity_multiplier;
        let planned = lognormal(&mut rng, mean_posts, 0.7)
            .round()
            .clamp(2.0, MAX_POSTS_PER_USER as f64) as usize;
        let rate_per_day = lognormal(&mut rng, 3.0, 0.6).max(0.05);
        let join_ts =
            EPOCH_START + rng.gen_range(0.0..JOIN_WINDOW_DAYS * 86_400.0) as i64;
        let base_quality = (params.base_quality + 0.07 * normal(&mut rng)).clamp(0.02, 0.98);
        let pool_size = params.thread_pool_size.min(config.n_threads).max(1);
        let mut thread_pool = Vec::with_capacity(pool_size);
        while thread_pool.len() < pool_size {
            let t = rng.gen_range(0..config.n_threads);
            if !thread_pool.contains(&t) {
                thread_pool.push(t);
            }
        }
        let url_poster = is_fbu && rng.gen_bool(config.url_poster_fraction);

        let mut ts = join_ts;
        for seq in 0..planned {
            let gap_days = -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln() / rate_per_day;
            ts += (gap_days * 86_400.0).max(1.0) as i64;
            events.push((ts, u, seq));
        }
        users.push(UserState {
            id: format!("u{u:05}"),
            class: if is_fbu { UserClass::Fbu } else { UserClass::Nbu },
            base_quality,
            drift: params.quality_drift_per_decile,
            planned,
            made: 0,
            deletions: 0,
            banned_at: None,
            url_poster,
            thread_pool,
        });
    }
    events.sort_unstable_by_key(|&(ts, u, seq)| (ts, u, seq));

    let mut posts: Vec<Post> = Vec::with_capacity(events.len());
    let mut votes: Vec<VoteEvent> = Vec::new();
    let mut post_quality: BTreeMap<String, f64> = BTreeMap::new();
    let mut recent: Vec<VecDeque<RecentPost>> =
        (0..config.n_threads).map(|_| VecDeque::new()).collect();
    let mut post_counter = 0usize;

    for (ts, u, _seq) in events {
        let banned = users[u].banned_at.is_some();
        if banned {
            continue;
        }
        let class = users[u].class;
        let params = if class == UserClass::Fbu { &config.fbu } else { &config.nbu };
        let i = users[u].made;
        let decile = (10 * i / users[u].planned).min(9) as f64;
        let quality = (users[u].base_quality + users[u].drift * decile
            - config.censorship_feedback * users[u].deletions as f64)
            .clamp(0.0, 1.0);

        // Thread choice: mostly the user's favored pool, occasionally anywhere.
        let thread = if rng.gen_bool(0.15) {
            rng.gen_range(0..config.n_threads)
        } else {
            let pool = &users[u].thread_pool;
            let weights: Vec<f64> =
                (0..pool.len()).map(|k| 1.0 / ((k + 1) as f64 * (k + 1) as f64)).collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.gen_range(0.0..total);
            let mut slot = 0;
            for (k, w) in weights.iter().enumerate() {
                if pick < *w {
                    slot = k;
                    break;
                }
                pick -= w;
            }
            pool[slot]
        };

        // Reply target, weighted toward attention-grabbing authors.
        let mut parent = None;
        if !recent[thread].is_empty() && rng.gen_bool(params.reply_propensity) {
            let total: f64 = recent[thread].iter().map(|r| r.attraction).sum();
            let mut pick = rng.gen_range(0.0..total);
            for r in &recent[thread] {
                if pick < r.attraction {
                    parent = Some(r.post_id.clone());
                    break;
                }
                pick -= r.attraction;
            }
        }

        let text = compose_text(
            &mut rng,
            config,
            params,
            &vocab,
            topic_offsets[thread],
            users[u].url_poster,
            post_counter,
        );

        // Moderation.
        let bias = if class == UserClass::Fbu {
            -config.moderator_bias_gain * decile
        } else {
            0.0
        };
        let noise = config.deletion_threshold_noise * normal(&mut rng);
        let deleted = quality + bias + noise < config.deletion_threshold;
        let reported = if deleted {
            rng.gen_bool(config.report_rate_deleted)
        } else {
            rng.gen_bool(config.report_rate_kept)
        };

        // Votes received.
        let n_votes = poisson(&mut rng, config.votes_received_rate);
        let mut up = 0u32;
        let mut down = 0u32;
        for _ in 0..n_votes {
            if rng.gen_bool(params.upvote_fraction_received) {
                up += 1;
            } else {
                down += 1;
            }
        }

        let post_id = format!("p{post_counter:07}");
        post_counter += 1;

        // An occasional vote cast by this user on someone else's recent post.
        if rng.gen_bool(config.vote_give_rate) {
            let candidates: Vec<&RecentPost> =
                recent[thread].iter().filter(|r| r.author_idx != u).collect();
            if !candidates.is_empty() {
                let target = candidates[rng.gen_range(0..candidates.len())];
                votes.push(VoteEvent {
                    user_id: users[u].id.clone(),
                    post_id: target.post_id.clone(),
                    dir: if rng.gen_bool(params.upvote_fraction_given) {
                        VoteDir::Up
                    } else {
                        VoteDir::Down
                    },
                });
            }
        }

        posts.push(Post {
            post_id: post_id.clone(),
            user_id: users[u].id.clone(),
            thread_id: format!("t{thread:05}"),
            ts,
            text,
            parent_post_id: parent,
            deleted,
            reported,
            up,
            down,
        });
        post_quality.insert(post_id.clone(), quality);

        recent[thread].push_back(RecentPost {
            post_id,
            author_idx: u,
            attraction: params.reply_attraction,
        });
        if recent[thread].len() > THREAD_MEMORY {
            recent[thread].pop_front();
        }

        users[u].made += 1;
        if deleted {
            users[u].deletions += 1;
            if class == UserClass::Fbu
                && users[u].deletions >= config.ban_after_deletions
                && users[u].banned_at.is_none()
            {
                users[u].banned_at = Some(ts);
            }
        }
    }

    let mut truth = GroundTruth { users: BTreeMap::new(), post_quality };
    let mut user_records = Vec::with_capacity(users.len());
    for u in &users {
        user_records.push(UserRecord {
            user_id: u.id.clone(),
            banned: u.banned_at.is_some(),
            ban_ts: u.banned_at,
            ban_count: u32::from(u.banned_at.is_some()),
            first_post_ts: None,
        });
        truth.users.insert(
            u.id.clone(),
            UserTruth {
                class: u.class,
                base_quality: u.base_quality,
                drift: u.drift,
                url_poster: u.url_poster,
                planned_posts: u.planned,
            },
        );
    }

    let corpus = Corpus::new(config.community_name.clone(), posts, user_records, threads, votes)
        .map_err(|e| SynthError::InvalidConfig(format!("generator bug: {e}")))?;
    Ok((corpus, truth))
}

fn compose_text(
    rng: &mut ChaCha8Rng,
    config: &SynthConfig,
    params: &ClassParams,
    vocab: &Vocabulary,
    topic_offset: usize,
    url_poster: bool,
    post_counter: usize,
) -> String {
    let n_words = poisson(rng, config.mean_words_per_post).max(3);
    let v = vocab.words.len();
    let mut text = String::new();
    let mut sentence_start = true;
    for w in 0..n_words {
        let word: String = {
            let r: f64 = rng.gen_range(0.0..1.0);
            if r < params.positive_word_rate {
                POSITIVE_PLANT[rng.gen_range(0..POSITIVE_PLANT.len())].to_string()
            } else if r < params.positive_word_rate + params.swear_word_rate {
                SWEAR_PLANT[rng.gen_range(0..SWEAR_PLANT.len())].to_string()
            } else if rng.gen_bool(params.on_topic_mixing) {
                let rank = vocab.sample_rank(rng);
                vocab.words[(topic_offset + rank) % v].clone()
            } else {
                vocab.words[rng.gen_range(0..v)].clone()
            }
        };
        let word = if rng.gen_bool(params.shout_rate) {
            word.to_uppercase()
        } else if sentence_start {
            let mut cs = word.chars();
            match cs.next() {
                Some(first) => first.to_uppercase().chain(cs).collect(),
                None => word,
            }
        } else {
            word
        };
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(&word);
        sentence_start = false;
        let last = w + 1 == n_words;
        if last || rng.gen_bool(1.0 / params.words_per_sentence.max(1.0)) {
            text.push(if rng.gen_bool(params.question_rate) { '?' } else { '.' });
            sentence_start = true;
        }
    }
    if url_poster && rng.gen_bool(0.3) {
        text.push_str(&format!(" http://spam.example/z{post_counter}"));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SynthConfig {
        SynthConfig {
            n_users: 120,
            n_threads: 30,
            mean_posts_per_user: 25.0,
            seed: 11,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_bytes_for_fixed_seed() {
        let cfg = small_config();
        let (c1, _) = generate(&cfg).unwrap();
        let (c2, _) = generate(&cfg).unwrap();
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        c1.write_to(&mut b1).unwrap();
        c2.write_to(&mut b2).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn zero_fbu_fraction_bans_nobody() {
        let cfg = SynthConfig { fbu_fraction: 0.0, ..small_config() };
        let (corpus, truth) = generate(&cfg).unwrap();
        assert!(corpus.users.values().all(|u| !u.banned));
        assert!(truth.users.values().all(|t| t.class == UserClass::Nbu));
    }

    #[test]
    fn planted_fbus_delete_more() {
        let (corpus, truth) = generate(&SynthConfig::default()).unwrap();
        let mut frac = |class: UserClass| {
            let mut rates = Vec::new();
            for (uid, t) in &truth.users {
                if t.class != class {
                    continue;
                }
                let idx = corpus.user_post_indices(uid);
                if idx.is_empty() {
                    continue;
                }
                let del = idx.iter().filter(|&&i| corpus.posts[i].deleted).count();
                rates.push(del as f64 / idx.len() as f64);
            }
            rates.iter().sum::<f64>() / rates.len() as f64
        };
        let fbu = frac(UserClass::Fbu);
        let nbu = frac(UserClass::Nbu);
        // regression baseline: the planted margin stays wide
        assert!(fbu > nbu + 0.2, "fbu {fbu} vs nbu {nbu}");
    }

    #[test]
    fn banned_users_have_enough_posts_for_windows() {
        let (corpus, _) = generate(&SynthConfig::default()).unwrap();
        let banned: Vec<_> = corpus.users.values().filter(|u| u.banned).collect();
        assert!(banned.len() > 50, "only {} banned users", banned.len());
        for u in &banned {
            let n = corpus.user_post_indices(&u.user_id).len();
            assert!(n >= 10, "banned user {} has {n} posts", u.user_id);
        }
    }

    #[test]
    fn url_posters_flagged_and_emitting() {
        let cfg = SynthConfig { url_poster_fraction: 0.5, ..small_config() };
        let (corpus, truth) = generate(&cfg).unwrap();
        let flagged: Vec<_> = truth
            .users
            .iter()
            .filter(|(_, t)| t.url_poster)
            .map(|(u, _)| u.clone())
            .collect();
        assert!(!flagged.is_empty());
        let with_url = flagged
            .iter()
            .filter(|uid| {
                corpus
                    .user_post_indices(uid)
                    .iter()
                    .any(|&i| corpus.posts[i].text.contains("http://"))
            })
            .count();
        assert!(with_url * 2 >= flagged.len(), "most flagged users should emit a URL");
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SynthConfig { fbu_fraction: 1.5, ..SynthConfig::default() };
        assert!(matches!(generate(&cfg), Err(SynthError::InvalidConfig(_))));
        let cfg = SynthConfig { vocabulary_size: 3, ..SynthConfig::default() };
        assert!(matches!(generate(&cfg), Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn ground_truth_file_schema() {
        let cfg = SynthConfig { n_users: 5, mean_posts_per_user: 4.0, ..small_config() };
        let (_, truth) = generate(&cfg).unwrap();
        let mut buf = Vec::new();
        truth.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("user_id").is_some());
            assert!(v.get("class").is_some());
            assert!(v.get("base_quality").is_some());
            assert!(v.get("drift").is_some());
        }
    }

    #[test]
    fn vocabulary_avoids_lexicon_collisions() {
        let vocab = Vocabulary::build(300);
        let lex = LexiconSet::default_set();
        for w in &vocab.words {
            let t = crate::textfeat::tokenize(w).unwrap();
            for cat in lex.category_names() {
                assert_eq!(lex.proportion(cat, &t), 0.0, "{w} collides with {cat}");
            }
        }
    }
}
