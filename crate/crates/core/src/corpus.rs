//! Canonical data model, JSONL interchange format, validation, and cohort
//! filtering for a discussion-community activity trace.
//!
//! A corpus file is UTF-8, one JSON record per `\n`-terminated line, each
//! carrying a `"kind"` discriminator:
//!
//! ```text
//! {"kind":"post","post_id":..,"user_id":..,"thread_id":..,"ts":..,"text":..,
//!  "parent_post_id"?,"deleted":..,"reported":..,"up":..,"down":..}
//! {"kind":"user","user_id":..,"banned":..,"ban_ts"?,"ban_count":..}
//! {"kind":"thread","thread_id":..,"article_id"?,"created_ts":..}
//! {"kind":"vote","user_id":..,"post_id":..,"dir":"up"|"down"}
//! ```
//!
//! Vote records are optional; without them the two vote-giving features are
//! zero and the corpus carries a warning. Users and threads that appear only
//! as references from posts are synthesized (never-banned user / bare thread
//! metadata), mirroring real dumps where only the ban list is explicit.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// One comment or reply event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    pub thread_id: String,
    /// Seconds since epoch.
    pub ts: i64,
    pub text: String,
    /// Absent for top-level comments.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parent_post_id: Option<String>,
    /// Removed by a moderator.
    pub deleted: bool,
    /// Flagged by another user.
    pub reported: bool,
    /// Up-vote tally received.
    pub up: u32,
    /// Down-vote tally received.
    pub down: u32,
}

/// Per-user ban record. `first_post_ts` is derived at load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub banned: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ban_ts: Option<i64>,
    pub ban_count: u32,
    #[serde(skip)]
    pub first_post_ts: Option<i64>,
}

/// Thread metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadMeta {
    pub thread_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub article_id: Option<String>,
    pub created_ts: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteDir {
    Up,
    Down,
}

/// A single vote cast by `user_id` on `post_id` (optional record kind; only
/// needed for the vote-giving features).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteEvent {
    pub user_id: String,
    pub post_id: String,
    pub dir: VoteDir,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Post(Post),
    User(UserRecord),
    Thread(ThreadMeta),
    Vote(VoteEvent),
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {cause}")]
    MalformedLine { line: usize, cause: String },
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("post {post_id}: dangling reference to {missing}")]
    DanglingReference { post_id: String, missing: String },
    #[error("post {post_id}: parent {parent_id} has a later timestamp")]
    InvalidParent { post_id: String, parent_id: String },
    #[error("empty cohort: {fbus} banned / {nbus} never-banned users survive the filter")]
    EmptyCohort { fbus: usize, nbus: usize },
}

/// Validated, time-ordered activity trace. Immutable after construction;
/// the derived indices make it safe and cheap to share across workers.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub community_name: String,
    /// Sorted by `(ts, post_id)`.
    pub posts: Vec<Post>,
    pub users: BTreeMap<String, UserRecord>,
    pub threads: BTreeMap<String, ThreadMeta>,
    /// Sorted by `(post_id, user_id, dir)`.
    pub votes: Vec<VoteEvent>,
    pub warnings: Vec<String>,
    index: CorpusIndex,
}

/// Lookup structures derived from the record data.
#[derive(Debug, Clone, Default)]
struct CorpusIndex {
    post_by_id: HashMap<String, usize>,
    /// Post indices per thread, in corpus (time) order.
    thread_posts: HashMap<String, Vec<usize>>,
    /// Post indices per author, in corpus (time) order.
    user_posts: HashMap<String, Vec<usize>>,
    /// Direct children per post, in corpus (time) order.
    children: HashMap<String, Vec<usize>>,
    /// Vote indices per voter.
    votes_by_user: HashMap<String, Vec<usize>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.community_name == other.community_name
            && self.posts == other.posts
            && self.users == other.users
            && self.threads == other.threads
            && self.votes == other.votes
    }
}

impl Corpus {
    /// Validates, sorts, and indexes raw records into a corpus.
    ///
    /// Missing user and thread records are synthesized; posts authored after
    /// their author's ban timestamp are dropped with a warning.
    pub fn new(
        community_name: impl Into<String>,
        mut posts: Vec<Post>,
        users: Vec<UserRecord>,
        threads: Vec<ThreadMeta>,
        mut votes: Vec<VoteEvent>,
    ) -> Result<Corpus, CorpusError> {
        let mut warnings = Vec::new();

        let mut user_map: BTreeMap<String, UserRecord> = BTreeMap::new();
        for u in users {
            let id = u.user_id.clone();
            if user_map.insert(id.clone(), u).is_some() {
                return Err(CorpusError::DuplicateId(id));
            }
        }
        let mut thread_map: BTreeMap<String, ThreadMeta> = BTreeMap::new();
        for t in threads {
            let id = t.thread_id.clone();
            if thread_map.insert(id.clone(), t).is_some() {
                return Err(CorpusError::DuplicateId(id));
            }
        }

        posts.sort_by(|a, b| (a.ts, &a.post_id).cmp(&(b.ts, &b.post_id)));

        // Drop posts written after the author's ban.
        let mut dropped = 0usize;
        posts.retain(|p| {
            let keep = match user_map.get(&p.user_id) {
                Some(u) if u.banned => u.ban_ts.map_or(true, |bt| p.ts <= bt),
                _ => true,
            };
            if !keep {
                dropped += 1;
            }
            keep
        });
        if dropped > 0 {
            warnings.push(format!("dropped {dropped} posts written after their author's ban"));
        }

        // Synthesize referenced-but-missing users and threads.
        for p in &posts {
            user_map.entry(p.user_id.clone()).or_insert_with(|| UserRecord {
                user_id: p.user_id.clone(),
                banned: false,
                ban_ts: None,
                ban_count: 0,
                first_post_ts: None,
            });
            thread_map.entry(p.thread_id.clone()).or_insert_with(|| ThreadMeta {
                thread_id: p.thread_id.clone(),
                article_id: None,
                created_ts: p.ts,
            });
        }
        for v in &votes {
            user_map.entry(v.user_id.clone()).or_insert_with(|| UserRecord {
                user_id: v.user_id.clone(),
                banned: false,
                ban_ts: None,
                ban_count: 0,
                first_post_ts: None,
            });
        }

        let mut index = CorpusIndex::default();
        for (i, p) in posts.iter().enumerate() {
            if index.post_by_id.insert(p.post_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(p.post_id.clone()));
            }
            index.thread_posts.entry(p.thread_id.clone()).or_default().push(i);
            index.user_posts.entry(p.user_id.clone()).or_default().push(i);
        }

        // Parent references: same thread, earlier-or-equal timestamp.
        for (i, p) in posts.iter().enumerate() {
            if let Some(parent_id) = &p.parent_post_id {
                let pi = match index.post_by_id.get(parent_id) {
                    Some(&pi) if posts[pi].thread_id == p.thread_id => pi,
                    _ => {
                        return Err(CorpusError::DanglingReference {
                            post_id: p.post_id.clone(),
                            missing: parent_id.clone(),
                        })
                    }
                };
                if posts[pi].ts > p.ts {
                    return Err(CorpusError::InvalidParent {
                        post_id: p.post_id.clone(),
                        parent_id: parent_id.clone(),
                    });
                }
                index.children.entry(parent_id.clone()).or_default().push(i);
            }
        }

        for v in &votes {
            if !index.post_by_id.contains_key(&v.post_id) {
                return Err(CorpusError::DanglingReference {
                    post_id: format!("vote by {}", v.user_id),
                    missing: v.post_id.clone(),
                });
            }
        }
        votes.sort_by(|a, b| {
            (&a.post_id, &a.user_id, a.dir as u8).cmp(&(&b.post_id, &b.user_id, b.dir as u8))
        });
        for (i, v) in votes.iter().enumerate() {
            index.votes_by_user.entry(v.user_id.clone()).or_default().push(i);
        }
        if votes.is_empty() {
            warnings.push(
                "corpus contains no vote records; vote-giving features will be zero".to_string(),
            );
        }

        // Derive first-post timestamps and check ban-record consistency.
        for u in user_map.values_mut() {
            u.first_post_ts = index
                .user_posts
                .get(&u.user_id)
                .and_then(|ids| ids.first())
                .map(|&i| posts[i].ts);
            if u.banned {
                let ban_ts = u.ban_ts.ok_or_else(|| CorpusError::MalformedLine {
                    line: 0,
                    cause: format!("user {}: banned without ban_ts", u.user_id),
                })?;
                if u.ban_count == 0 {
                    return Err(CorpusError::MalformedLine {
                        line: 0,
                        cause: format!("user {}: banned with ban_count 0", u.user_id),
                    });
                }
                if let Some(first) = u.first_post_ts {
                    if ban_ts < first {
                        return Err(CorpusError::MalformedLine {
                            line: 0,
                            cause: format!("user {}: ban_ts precedes first post", u.user_id),
                        });
                    }
                }
            }
        }

        Ok(Corpus {
            community_name: community_name.into(),
            posts,
            users: user_map,
            threads: thread_map,
            votes,
            warnings,
            index,
        })
    }

    /// Post indices of a thread, in time order.
    pub fn thread_post_indices(&self, thread_id: &str) -> &[usize] {
        self.index.thread_posts.get(thread_id).map_or(&[], |v| v.as_slice())
    }

    /// Post indices of an author, in time order.
    pub fn user_post_indices(&self, user_id: &str) -> &[usize] {
        self.index.user_posts.get(user_id).map_or(&[], |v| v.as_slice())
    }

    /// Indices of direct replies to a post, in time order.
    pub fn child_indices(&self, post_id: &str) -> &[usize] {
        self.index.children.get(post_id).map_or(&[], |v| v.as_slice())
    }

    /// Index of a post by id.
    pub fn post_index(&self, post_id: &str) -> Option<usize> {
        self.index.post_by_id.get(post_id).copied()
    }

    /// Vote events cast by a user.
    pub fn votes_by_user(&self, user_id: &str) -> impl Iterator<Item = &VoteEvent> {
        self.index
            .votes_by_user
            .get(user_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.votes[i])
    }

    pub fn min_ts(&self) -> Option<i64> {
        self.posts.first().map(|p| p.ts)
    }

    pub fn max_ts(&self) -> Option<i64> {
        self.posts.last().map(|p| p.ts)
    }

    /// Writes the canonical serialization: threads, then users, then posts,
    /// then votes, each group in its canonical sort order.
    pub fn write_to(&self, mut w: impl Write) -> Result<(), CorpusError> {
        for t in self.threads.values() {
            let rec = serde_json::to_string(&RecordRef::Thread(t)).expect("serialize");
            writeln!(w, "{rec}")?;
        }
        for u in self.users.values() {
            let rec = serde_json::to_string(&RecordRef::User(u)).expect("serialize");
            writeln!(w, "{rec}")?;
        }
        for p in &self.posts {
            let rec = serde_json::to_string(&RecordRef::Post(p)).expect("serialize");
            writeln!(w, "{rec}")?;
        }
        for v in &self.votes {
            let rec = serde_json::to_string(&RecordRef::Vote(v)).expect("serialize");
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }

    pub fn write_to_path(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RecordRef<'a> {
    Post(&'a Post),
    User(&'a UserRecord),
    Thread(&'a ThreadMeta),
    Vote(&'a VoteEvent),
}

// Keep the wire format free of nulls for absent optionals.
impl Post {
    fn validate_line(&self, line: usize) -> Result<(), CorpusError> {
        if self.text.trim().is_empty() {
            return Err(CorpusError::MalformedLine {
                line,
                cause: format!("post {}: text empty after trimming", self.post_id),
            });
        }
        Ok(())
    }
}

/// Loads and validates a corpus from a JSONL file. The community name is the
/// file stem.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path)?;
    load_corpus_from(BufReader::new(file), name)
}

/// Loads a corpus from any buffered reader.
pub fn load_corpus_from(
    reader: impl BufRead,
    community_name: impl Into<String>,
) -> Result<Corpus, CorpusError> {
    let mut posts = Vec::new();
    let mut users = Vec::new();
    let mut threads = Vec::new();
    let mut votes = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                line: lineno,
                cause: e.to_string(),
            })?;
        match rec {
            Record::Post(p) => {
                p.validate_line(lineno)?;
                posts.push(p);
            }
            Record::User(u) => users.push(u),
            Record::Thread(t) => threads.push(t),
            Record::Vote(v) => votes.push(v),
        }
    }
    Corpus::new(community_name, posts, users, threads, votes)
}

/// Thresholds applied when carving the analysis cohort out of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_posts: usize,
    pub join_after: i64,
    pub exclude_url_posters: bool,
    pub exclude_multi_banned: bool,
}

impl FilterConfig {
    pub fn new(min_posts: usize, join_after: i64) -> Self {
        FilterConfig {
            min_posts,
            join_after,
            exclude_url_posters: true,
            exclude_multi_banned: true,
        }
    }
}

/// The two sides of the analysis population: banned users that survive the
/// filters, and the never-banned candidate pool they are matched against.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub fbu_ids: Vec<String>,
    pub nbu_candidate_ids: Vec<String>,
    pub filter_config: FilterConfig,
}

fn token_is_url(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

fn contains_url(text: &str) -> bool {
    text.split_whitespace().any(token_is_url)
}

/// Selects banned users (≥ `min_posts` posts before their ban, joined after
/// the cutoff, optionally single-ban and URL-free) and the never-banned
/// candidate pool under the same activity floor.
///
/// All authored posts count toward the floor, deleted ones included.
pub fn filter_cohort(corpus: &Corpus, config: &FilterConfig) -> Result<Cohort, CorpusError> {
    let mut fbu_ids = Vec::new();
    let mut nbu_candidate_ids = Vec::new();
    for (user_id, rec) in &corpus.users {
        let post_count = corpus.user_post_indices(user_id).len();
        if post_count < config.min_posts {
            continue;
        }
        let first = match rec.first_post_ts {
            Some(ts) => ts,
            None => continue,
        };
        if first <= config.join_after {
            continue;
        }
        if rec.banned {
            if config.exclude_multi_banned && rec.ban_count != 1 {
                continue;
            }
            if config.exclude_url_posters
                && corpus
                    .user_post_indices(user_id)
                    .iter()
                    .any(|&i| contains_url(&corpus.posts[i].text))
            {
                continue;
            }
            fbu_ids.push(user_id.clone());
        } else {
            nbu_candidate_ids.push(user_id.clone());
        }
    }
    if fbu_ids.is_empty() || nbu_candidate_ids.is_empty() {
        return Err(CorpusError::EmptyCohort {
            fbus: fbu_ids.len(),
            nbus: nbu_candidate_ids.len(),
        });
    }
    Ok(Cohort {
        fbu_ids,
        nbu_candidate_ids,
        filter_config: config.clone(),
    })
}

/// Community-level summary counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub community_name: String,
    pub users: usize,
    pub banned_users: usize,
    pub banned_fraction: f64,
    pub threads: usize,
    pub posts: usize,
    pub deleted_posts: usize,
    pub deleted_fraction: f64,
    pub reported_posts: usize,
    pub reported_fraction: f64,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} users ({} banned, {:.1}%), {} threads, {} posts ({} deleted, {:.1}%; {} reported, {:.1}%)",
            self.community_name,
            self.users,
            self.banned_users,
            100.0 * self.banned_fraction,
            self.threads,
            self.posts,
            self.deleted_posts,
            100.0 * self.deleted_fraction,
            self.reported_posts,
            100.0 * self.reported_fraction,
        )
    }
}

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let deleted = corpus.posts.iter().filter(|p| p.deleted).count();
    let reported = corpus.posts.iter().filter(|p| p.reported).count();
    let banned = corpus.users.values().filter(|u| u.banned).count();
    CorpusStats {
        community_name: corpus.community_name.clone(),
        users: corpus.users.len(),
        banned_users: banned,
        banned_fraction: fraction(banned, corpus.users.len()),
        threads: corpus.threads.len(),
        posts: corpus.posts.len(),
        deleted_posts: deleted,
        deleted_fraction: fraction(deleted, corpus.posts.len()),
        reported_posts: reported,
        reported_fraction: fraction(reported, corpus.posts.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn post(id: &str, user: &str, thread: &str, ts: i64, text: &str) -> Post {
        Post {
            post_id: id.to_string(),
            user_id: user.to_string(),
            thread_id: thread.to_string(),
            ts,
            text: text.to_string(),
            parent_post_id: None,
            deleted: false,
            reported: false,
            up: 0,
            down: 0,
        }
    }

    fn banned_user(id: &str, ban_ts: i64) -> UserRecord {
        UserRecord {
            user_id: id.to_string(),
            banned: true,
            ban_ts: Some(ban_ts),
            ban_count: 1,
            first_post_ts: None,
        }
    }

    #[test]
    fn loads_posts_and_users() {
        let data = concat!(
            r#"{"kind":"post","post_id":"p1","user_id":"u1","thread_id":"t1","ts":10,"text":"hello","deleted":false,"reported":false,"up":0,"down":0}"#,
            "\n",
            r#"{"kind":"post","post_id":"p2","user_id":"u1","thread_id":"t1","ts":11,"text":"again","deleted":false,"reported":false,"up":1,"down":0}"#,
            "\n",
            r#"{"kind":"post","post_id":"p3","user_id":"u2","thread_id":"t1","ts":12,"text":"reply","parent_post_id":"p1","deleted":true,"reported":true,"up":0,"down":2}"#,
            "\n",
            r#"{"kind":"user","user_id":"u1","banned":false,"ban_count":0}"#,
            "\n",
            r#"{"kind":"user","user_id":"u2","banned":true,"ban_ts":100,"ban_count":1}"#,
            "\n",
        );
        let c = load_corpus_from(data.as_bytes(), "mini").unwrap();
        assert_eq!(c.posts.len(), 3);
        assert_eq!(c.users.len(), 2);
        assert!(c.users["u2"].banned);
        assert_eq!(c.users["u1"].first_post_ts, Some(10));
        // thread synthesized from references
        assert!(c.threads.contains_key("t1"));
        assert_eq!(c.child_indices("p1").len(), 1);
    }

    #[test]
    fn dangling_parent_rejected() {
        let data = concat!(
            r#"{"kind":"post","post_id":"p1","user_id":"u1","thread_id":"t1","ts":10,"text":"x","parent_post_id":"nope","deleted":false,"reported":false,"up":0,"down":0}"#,
            "\n",
        );
        let err = load_corpus_from(data.as_bytes(), "mini").unwrap_err();
        assert!(matches!(err, CorpusError::DanglingReference { .. }), "{err}");
    }

    #[test]
    fn parent_in_other_thread_rejected() {
        let posts = vec![
            post("p1", "u1", "t1", 10, "a"),
            Post {
                parent_post_id: Some("p1".to_string()),
                ..post("p2", "u1", "t2", 11, "b")
            },
        ];
        let err = Corpus::new("x", posts, vec![], vec![], vec![]).unwrap_err();
        assert!(matches!(err, CorpusError::DanglingReference { .. }));
    }

    #[test]
    fn duplicate_post_id_rejected() {
        let posts = vec![post("p1", "u1", "t1", 10, "a"), post("p1", "u2", "t1", 11, "b")];
        let err = Corpus::new("x", posts, vec![], vec![], vec![]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(_)));
    }

    #[test]
    fn malformed_line_carries_line_number() {
        let data = "{\"kind\":\"post\"}\n";
        let err = load_corpus_from(data.as_bytes(), "mini").unwrap_err();
        match err {
            CorpusError::MalformedLine { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn posts_after_ban_dropped_with_warning() {
        let posts = vec![post("p1", "u1", "t1", 10, "a"), post("p2", "u1", "t1", 50, "b")];
        let users = vec![banned_user("u1", 20)];
        let c = Corpus::new("x", posts, users, vec![], vec![]).unwrap();
        assert_eq!(c.posts.len(), 1);
        assert!(c.warnings.iter().any(|w| w.contains("dropped 1 posts")));
    }

    #[test]
    fn posts_sorted_by_ts_then_id() {
        let posts = vec![
            post("pb", "u1", "t1", 10, "b"),
            post("pa", "u1", "t1", 10, "a"),
            post("pc", "u1", "t1", 5, "c"),
        ];
        let c = Corpus::new("x", posts, vec![], vec![], vec![]).unwrap();
        let ids: Vec<_> = c.posts.iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["pc", "pa", "pb"]);
    }

    fn cohort_fixture() -> Corpus {
        // u1: banned, 5 posts; u2: banned, 4 posts (below floor);
        // u3: never banned, 5 posts; u4: banned twice, 5 posts;
        // u5: banned, 5 posts, posts a URL.
        let mut posts = Vec::new();
        for (user, n, text) in [
            ("u1", 5, "plain words"),
            ("u2", 4, "plain words"),
            ("u3", 5, "plain words"),
            ("u4", 5, "plain words"),
            ("u5", 5, "see www.example.com now"),
        ] {
            for k in 0..n {
                posts.push(post(&format!("{user}-{k}"), user, "t1", 100 + k as i64, text));
            }
        }
        let users = vec![
            banned_user("u1", 1000),
            banned_user("u2", 1000),
            UserRecord {
                user_id: "u3".to_string(),
                banned: false,
                ban_ts: None,
                ban_count: 0,
                first_post_ts: None,
            },
            UserRecord {
                ban_count: 2,
                ..banned_user("u4", 1000)
            },
            banned_user("u5", 1000),
        ];
        Corpus::new("x", posts, users, vec![], vec![]).unwrap()
    }

    #[test]
    fn cohort_filters_apply() {
        let c = cohort_fixture();
        let cohort = filter_cohort(&c, &FilterConfig::new(5, 0)).unwrap();
        assert_eq!(cohort.fbu_ids, ["u1"]);
        assert_eq!(cohort.nbu_candidate_ids, ["u3"]);

        // multi-ban exclusion off admits u4
        let mut cfg = FilterConfig::new(5, 0);
        cfg.exclude_multi_banned = false;
        let cohort = filter_cohort(&c, &cfg).unwrap();
        assert_eq!(cohort.fbu_ids, ["u1", "u4"]);

        // URL exclusion off admits u5
        let mut cfg = FilterConfig::new(5, 0);
        cfg.exclude_url_posters = false;
        let cohort = filter_cohort(&c, &cfg).unwrap();
        assert_eq!(cohort.fbu_ids, ["u1", "u5"]);
    }

    #[test]
    fn cohort_join_after_cutoff() {
        let c = cohort_fixture();
        // everyone's first post is at ts 100
        let err = filter_cohort(&c, &FilterConfig::new(5, 100)).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyCohort { .. }));
    }

    #[test]
    fn stats_fractions() {
        let mut posts: Vec<Post> = (0..10)
            .map(|k| post(&format!("p{k}"), "u1", "t1", k as i64, "x"))
            .collect();
        posts[0].deleted = true;
        posts[1].deleted = true;
        let c = Corpus::new("x", posts, vec![], vec![], vec![]).unwrap();
        let s = corpus_stats(&c);
        assert_eq!(s.posts, 10);
        assert!((s.deleted_fraction - 0.2).abs() < 1e-12);
        assert_eq!(s.reported_posts, 0);
    }

    #[test]
    fn stats_empty_corpus() {
        let c = Corpus::new("x", vec![], vec![], vec![], vec![]).unwrap();
        let s = corpus_stats(&c);
        assert_eq!(s.users, 0);
        assert_eq!(s.banned_fraction, 0.0);
        assert_eq!(s.deleted_fraction, 0.0);
    }

    #[test]
    fn url_detection_is_prefix_based() {
        assert!(contains_url("go to http://x.y"));
        assert!(contains_url("go to https://x.y"));
        assert!(contains_url("go to WWW.example.com"));
        assert!(!contains_url("wwwords are fine"));
        assert!(!contains_url("nothing here"));
    }
}
