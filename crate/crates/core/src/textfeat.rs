//! Text-derived measurements: tokenization, bag-of-words cosine similarity,
//! readability indices, lexicon-category proportions, and bigram extraction.

use crate::corpus::Corpus;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

/// Sentence-boundary marker used for single-token sentences in bigrams.
pub const BOUNDARY: &str = "<s>";

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("text is empty after trimming")]
    EmptyText,
    #[error("text has no words")]
    DegenerateText,
    #[error("lexicon line {line}: {cause}")]
    LexiconFormat { line: usize, cause: String },
    #[error("duplicate lexicon category: {0}")]
    DuplicateCategory(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One sentence's token span and whether its terminator run contained `?`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub question: bool,
}

/// Lowercased word tokens with sentence structure and character tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedPost {
    pub tokens: Vec<String>,
    /// Spans into `tokens`, one per sentence that contains at least one word.
    pub sentences: Vec<SentenceSpan>,
    pub sentence_count: usize,
    /// Alphanumeric characters in the raw text.
    pub char_count: usize,
    pub word_count: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

fn is_terminator(c: char) -> bool {
    c == '.' || c == '!' || c == '?'
}

fn push_tokens(segment: &str, tokens: &mut Vec<String>) {
    for raw in segment.split(|c: char| !is_word_char(c)) {
        if raw.chars().any(|c| c.is_alphanumeric()) {
            tokens.push(raw.to_lowercase());
        }
    }
}

/// Splits text into lowercased word tokens (maximal alphanumeric-or-apostrophe
/// runs) and sentences (segments between `.`/`!`/`?` runs, minimum one).
pub fn tokenize(text: &str) -> Result<TokenizedPost, TextError> {
    if text.trim().is_empty() {
        return Err(TextError::EmptyText);
    }
    let mut tokens = Vec::new();
    let mut sentences = Vec::new();
    let mut segment = String::new();
    let mut raw_segments = 0usize;

    let mut close_segment = |segment: &mut String, question: bool| {
        if segment.chars().any(|c| !c.is_whitespace()) {
            raw_segments += 1;
            let start = tokens.len();
            push_tokens(segment, &mut tokens);
            let end = tokens.len();
            if end > start {
                sentences.push(SentenceSpan { start, end, question });
            }
        }
        segment.clear();
    };

    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if is_terminator(c) {
            let mut question = c == '?';
            while let Some(&next) = chars.peek() {
                if is_terminator(next) {
                    question |= next == '?';
                    chars.next();
                } else {
                    break;
                }
            }
            close_segment(&mut segment, question);
        } else {
            segment.push(c);
        }
    }
    close_segment(&mut segment, false);

    let char_count = text.chars().filter(|c| c.is_alphanumeric()).count();
    let word_count = tokens.len();
    Ok(TokenizedPost {
        tokens,
        sentences,
        sentence_count: raw_segments.max(1),
        char_count,
        word_count,
    })
}

/// Raw term-frequency vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BagOfWords(pub BTreeMap<String, f64>);

impl BagOfWords {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a String>) -> Self {
        let mut map = BTreeMap::new();
        for t in tokens {
            *map.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        BagOfWords(map)
    }

    pub fn add(&mut self, other: &BagOfWords) {
        for (k, v) in &other.0 {
            *self.0.entry(k.clone()).or_insert(0.0) += v;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TokenizedPost {
    pub fn bag(&self) -> BagOfWords {
        BagOfWords::from_tokens(&self.tokens)
    }
}

/// Cosine of two raw count vectors over the union vocabulary.
/// An empty vector is degenerate and yields 0.
pub fn cosine_similarity(a: &BagOfWords, b: &BagOfWords) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut dot = 0.0;
    for (k, va) in &a.0 {
        if let Some(vb) = b.0.get(k) {
            dot += va * vb;
        }
    }
    let na: f64 = a.0.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.0.values().map(|v| v * v).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Cosine similarity between a post and the combined bag of the up-to-`k`
/// posts immediately preceding it in the same thread. `None` when the post
/// has no predecessor (excluded from averages).
pub fn thread_context_similarity(corpus: &Corpus, post_idx: usize, k: usize) -> Option<f64> {
    let post = &corpus.posts[post_idx];
    let order = corpus.thread_post_indices(&post.thread_id);
    let pos = order.iter().position(|&i| i == post_idx)?;
    if pos == 0 {
        return None;
    }
    let start = pos.saturating_sub(k);
    let mut context = BagOfWords::default();
    for &i in &order[start..pos] {
        if let Ok(t) = tokenize(&corpus.posts[i].text) {
            context.add(&t.bag());
        }
    }
    let own = tokenize(&post.text).ok()?.bag();
    Some(cosine_similarity(&own, &context))
}

/// The three readability grades computed from one tokenized post.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readability {
    pub ari: f64,
    pub flesch_kincaid_grade: f64,
    pub coleman_liau: f64,
}

fn syllables(word: &str) -> usize {
    let mut count = 0;
    let mut in_group = false;
    for c in word.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            count += 1;
        }
        in_group = vowel;
    }
    count.max(1)
}

/// ARI, Flesch–Kincaid grade (vowel-group syllables) and Coleman–Liau.
pub fn readability(t: &TokenizedPost) -> Result<Readability, TextError> {
    if t.word_count == 0 {
        return Err(TextError::DegenerateText);
    }
    let words = t.word_count as f64;
    let sents = t.sentence_count as f64;
    let chars = t.char_count as f64;
    let syls: usize = t.tokens.iter().map(|w| syllables(w)).sum();
    let ari = 4.71 * (chars / words) + 0.5 * (words / sents) - 21.43;
    let fk = 0.39 * (words / sents) + 11.8 * (syls as f64 / words) - 15.59;
    let l = 100.0 * chars / words;
    let s = 100.0 * sents / words;
    let cl = 0.0588 * l - 0.296 * s - 15.8;
    Ok(Readability {
        ari,
        flesch_kincaid_grade: fk,
        coleman_liau: cl,
    })
}

/// Word lists per category; entries ending in `*` match by prefix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconSet {
    categories: BTreeMap<String, Lexicon>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Lexicon {
    exact: HashSet<String>,
    prefixes: Vec<String>,
}

impl Lexicon {
    fn matches(&self, token: &str) -> bool {
        self.exact.contains(token) || self.prefixes.iter().any(|p| token.starts_with(p.as_str()))
    }
}

impl LexiconSet {
    /// Parses the `category: word word word*` line format.
    pub fn parse(input: &str) -> Result<LexiconSet, TextError> {
        let mut set = LexiconSet::default();
        for (lineno, line) in input.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, rest) = line.split_once(':').ok_or(TextError::LexiconFormat {
                line: lineno,
                cause: "expected `category: words...`".to_string(),
            })?;
            let name = name.trim().to_lowercase();
            if name.is_empty() {
                return Err(TextError::LexiconFormat {
                    line: lineno,
                    cause: "empty category name".to_string(),
                });
            }
            let mut lex = Lexicon::default();
            for w in rest.split_whitespace() {
                let w = w.to_lowercase();
                if let Some(prefix) = w.strip_suffix('*') {
                    if prefix.is_empty() {
                        return Err(TextError::LexiconFormat {
                            line: lineno,
                            cause: "bare `*` entry".to_string(),
                        });
                    }
                    lex.prefixes.push(prefix.to_string());
                } else {
                    lex.exact.insert(w);
                }
            }
            if lex.exact.is_empty() && lex.prefixes.is_empty() {
                return Err(TextError::LexiconFormat {
                    line: lineno,
                    cause: format!("category {name} has no entries"),
                });
            }
            if set.categories.insert(name.clone(), lex).is_some() {
                return Err(TextError::DuplicateCategory(name));
            }
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LexiconSet, TextError> {
        LexiconSet::parse(&std::fs::read_to_string(path)?)
    }

    /// The built-in replacement word lists used when no lexicon file is given.
    pub fn default_set() -> LexiconSet {
        LexiconSet::parse(DEFAULT_LEXICONS).expect("built-in lexicons parse")
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(|s| s.as_str())
    }

    pub fn proportion(&self, category: &str, t: &TokenizedPost) -> f64 {
        if t.word_count == 0 {
            return 0.0;
        }
        match self.categories.get(category) {
            Some(lex) => {
                let hits = t.tokens.iter().filter(|tok| lex.matches(tok)).count();
                hits as f64 / t.word_count as f64
            }
            None => 0.0,
        }
    }
}

/// Fraction of tokens matching each category.
pub fn lexicon_proportions(t: &TokenizedPost, lex: &LexiconSet) -> BTreeMap<String, f64> {
    lex.categories
        .keys()
        .map(|name| (name.clone(), lex.proportion(name, t)))
        .collect()
}

/// Adjacent token pairs within each sentence; a single-token sentence yields
/// one pair with the boundary marker.
pub fn bigrams(t: &TokenizedPost) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in &t.sentences {
        let toks = &t.tokens[s.start..s.end];
        if toks.len() == 1 {
            out.push((BOUNDARY.to_string(), toks[0].clone()));
        } else {
            for w in toks.windows(2) {
                out.push((w[0].clone(), w[1].clone()));
            }
        }
    }
    out
}

/// Names of the 20 per-post features, in frozen vector order.
pub const POST_FEATURE_NAMES: [&str; 20] = [
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
];

/// The 20-entry per-post feature block, in [`POST_FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostTextFeatures(pub [f64; 20]);

/// Computes the per-post feature block. Posts with no word tokens yield an
/// all-zero block rather than poisoning user-level means.
pub fn post_text_features(text: &str, lex: &LexiconSet) -> Result<PostTextFeatures, TextError> {
    let t = tokenize(text)?;
    let mut f = [0.0f64; 20];
    if t.word_count == 0 {
        return Ok(PostTextFeatures(f));
    }
    let words = t.word_count as f64;
    let r = readability(&t)?;

    let letters = text.chars().filter(|c| c.is_alphabetic()).count();
    let upper = text.chars().filter(|c| c.is_uppercase()).count();
    let non_ws = text.chars().filter(|c| !c.is_whitespace()).count();
    let punct = text
        .chars()
        .filter(|c| !c.is_whitespace() && !c.is_alphanumeric())
        .count();
    let distinct: HashSet<&str> = t.tokens.iter().map(|s| s.as_str()).collect();
    let question_sents = t.sentences.iter().filter(|s| s.question).count();

    f[0] = words;
    f[1] = t.char_count as f64 / words;
    f[2] = t.sentence_count as f64;
    f[3] = words / t.sentence_count as f64;
    f[4] = r.ari;
    f[5] = r.flesch_kincaid_grade;
    f[6] = r.coleman_liau;
    f[7] = distinct.len() as f64 / words;
    f[8] = if letters > 0 { upper as f64 / letters as f64 } else { 0.0 };
    f[9] = if non_ws > 0 { punct as f64 / non_ws as f64 } else { 0.0 };
    for (i, cat) in [
        "positive_emotion",
        "negative_emotion",
        "swear",
        "tentative",
        "affect",
        "pronoun_first_singular",
        "pronoun_second",
        "negation",
    ]
    .iter()
    .enumerate()
    {
        f[10 + i] = lex.proportion(cat, &t);
    }
    f[18] = question_sents as f64 / t.sentence_count as f64;
    f[19] = lex.proportion("profane_emphasis", &t);
    Ok(PostTextFeatures(f))
}

pub const DEFAULT_LEXICONS: &str = "\
positive_emotion: good great happy love like nice thanks thank awesome excellent agree best wonderful glad appreciate fun cool hope well kind
negative_emotion: bad sad angry hate awful terrible horrible worst annoying ugly fear worry wrong hurt lose losing
swear: damn hell crap shit fuck* ass bastard bitch* idiot* moron* stupid dumb
tentative: maybe perhaps possibly could might seem* appear* guess somewhat likely consider* probably wonder
affect: love hate good bad happy sad great terrible awesome awful angry glad fear hope fun nice worry wonderful horrible stupid
pronoun_first_singular: i me my mine myself i'm i've i'll i'd
pronoun_second: you your yours yourself you're you've you'll u
negation: no not never none nothing nobody neither nor can't don't won't isn't aren't wasn't didn't doesn't wouldn't couldn't shouldn't
profane_emphasis: fucking shit* goddamn motherfuck* wtf stfu
";

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tokenize_basic() {
        let t = tokenize("The cat sat.").unwrap();
        assert_eq!(t.tokens, ["the", "cat", "sat"]);
        assert_eq!(t.sentence_count, 1);
        assert_eq!(t.char_count, 9);
        assert_eq!(t.word_count, 3);
    }

    #[test]
    fn tokenize_two_sentences() {
        let t = tokenize("Hi! Hi!").unwrap();
        assert_eq!(t.sentence_count, 2);
        assert_eq!(t.tokens, ["hi", "hi"]);
    }

    #[test]
    fn tokenize_keeps_apostrophes() {
        let t = tokenize("don't go").unwrap();
        assert_eq!(t.tokens, ["don't", "go"]);
    }

    #[test]
    fn tokenize_empty_is_error() {
        assert!(matches!(tokenize("   "), Err(TextError::EmptyText)));
    }

    #[test]
    fn tokenize_terminator_runs_collapse() {
        let t = tokenize("What?! Really...").unwrap();
        assert_eq!(t.sentence_count, 2);
        assert!(t.sentences[0].question);
        assert!(!t.sentences[1].question);
    }

    #[test]
    fn cosine_identity_and_disjoint() {
        let a = BagOfWords::from_tokens(&["a".to_string(), "b".to_string()]);
        let b = BagOfWords::from_tokens(&["c".to_string(), "d".to_string()]);
        assert_abs_diff_eq!(cosine_similarity(&a, &a), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cosine_similarity(&a, &b), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cosine_hand_computed() {
        // [the, cat, sat] vs [the, dog, sat]: dot 2, norms sqrt(3)*sqrt(3)
        let a = tokenize("the cat sat").unwrap().bag();
        let b = tokenize("the dog sat").unwrap().bag();
        assert_abs_diff_eq!(cosine_similarity(&a, &b), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cosine_empty_degenerate() {
        let a = BagOfWords::default();
        let b = BagOfWords::from_tokens(&["x".to_string()]);
        assert_eq!(cosine_similarity(&a, &b), 0.0);
    }

    #[test]
    fn readability_hand_computed() {
        let t = tokenize("The cat sat.").unwrap();
        let r = readability(&t).unwrap();
        assert_abs_diff_eq!(r.ari, 4.71 * 3.0 + 0.5 * 3.0 - 21.43, epsilon = 1e-12);
        assert_abs_diff_eq!(r.ari, -5.80, epsilon = 1e-12);
        // syllables: the=1 cat=1 sat=1
        assert_abs_diff_eq!(r.flesch_kincaid_grade, 0.39 * 3.0 + 11.8 - 15.59, epsilon = 1e-12);
        let cl = 0.0588 * 300.0 - 0.296 * (100.0 / 3.0) - 15.8;
        assert_abs_diff_eq!(r.coleman_liau, cl, epsilon = 1e-12);
    }

    #[test]
    fn readability_scale_invariance() {
        // doubling every sentence verbatim keeps chars/word and words/sentence
        let t1 = tokenize("The cat sat. A dog ran.").unwrap();
        let t2 = tokenize("The cat sat. A dog ran. The cat sat. A dog ran.").unwrap();
        let r1 = readability(&t1).unwrap();
        let r2 = readability(&t2).unwrap();
        assert_abs_diff_eq!(r1.ari, r2.ari, epsilon = 1e-12);
    }

    #[test]
    fn readability_monotone_in_word_length() {
        let short = tokenize("an ox sat here now").unwrap();
        let long = tokenize("enormous creatures wandered nearby yesterday").unwrap();
        assert!(readability(&long).unwrap().ari > readability(&short).unwrap().ari);
    }

    #[test]
    fn lexicon_proportions_counts() {
        let lex =
            LexiconSet::parse("positive: happy\nnegative: sad\n").unwrap();
        let t = tokenize("happy sad happy").unwrap();
        let props = lexicon_proportions(&t, &lex);
        assert_abs_diff_eq!(props["positive"], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(props["negative"], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lexicon_prefix_matching() {
        let lex = LexiconSet::parse("sw: fuck*\n").unwrap();
        let t = tokenize("fucking unbelievable").unwrap();
        assert_abs_diff_eq!(lex.proportion("sw", &t), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lexicon_rejects_duplicates_and_empties() {
        assert!(matches!(
            LexiconSet::parse("a: x\na: y\n"),
            Err(TextError::DuplicateCategory(_))
        ));
        assert!(matches!(
            LexiconSet::parse("a:\n"),
            Err(TextError::LexiconFormat { .. })
        ));
    }

    #[test]
    fn bigrams_windows_within_sentences() {
        let t = tokenize("the cat sat").unwrap();
        let bg = bigrams(&t);
        assert_eq!(
            bg,
            vec![
                ("the".to_string(), "cat".to_string()),
                ("cat".to_string(), "sat".to_string())
            ]
        );
    }

    #[test]
    fn bigrams_single_token_sentence_gets_boundary() {
        let t = tokenize("hi").unwrap();
        assert_eq!(bigrams(&t), vec![(BOUNDARY.to_string(), "hi".to_string())]);
    }

    #[test]
    fn bigrams_do_not_span_sentences() {
        let t = tokenize("one two. three four").unwrap();
        let bg = bigrams(&t);
        assert!(!bg.contains(&("two".to_string(), "three".to_string())));
        assert_eq!(bg.len(), 2);
    }

    #[test]
    fn post_features_dim_and_ranges() {
        let lex = LexiconSet::default_set();
        let f = post_text_features("I love this? Damn you!", &lex).unwrap().0;
        assert_eq!(f.len(), 20);
        for i in [7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19] {
            assert!((0.0..=1.0).contains(&f[i]), "feature {i} = {}", f[i]);
        }
        assert!(f[18] > 0.0); // one of two sentences is a question
        assert!(f[12] > 0.0); // damn
    }

    #[test]
    fn default_lexicons_parse() {
        let lex = LexiconSet::default_set();
        assert!(lex.category_names().count() >= 9);
    }
}
