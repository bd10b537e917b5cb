//! Moderation analytics for discussion communities.
//!
//! The crate ingests a line-delimited JSON trace of posts, users, threads and
//! (optionally) vote events, and provides the full analysis pipeline on top of
//! it: per-user behavioral feature vectors, matched statistical comparisons
//! between future-banned and never-banned users, deletion-rate trajectory
//! typology, and a regularized logistic-regression classifier that predicts
//! bans from a user's first posts. A seeded synthetic-community generator
//! supplies ground truth for end-to-end testing.

pub mod behavior;
pub mod corpus;
pub mod learn;
pub mod stats;
pub mod synth;
pub mod textfeat;
pub mod trajectory;

pub use corpus::{Cohort, Corpus, CorpusError, CorpusStats, Post, UserRecord};
pub use synth::{GroundTruth, SynthConfig};
