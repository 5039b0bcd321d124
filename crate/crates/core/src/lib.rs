//! Popularity analysis over archived social-media posts.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`corpus`]: ingest archived posts, keep the ones matching any query
//!    filter, drop retweets, URL posts and duplicates, tokenize and encode.
//! 2. [`sentiment`]: score each post against a polarity lexicon and
//!    partition the set into positive, negative and neutral posts.
//! 3. [`topicmodel`]: fit LDA to the positive posts with a collapsed Gibbs
//!    sampler and choose the topic count by held-out log-likelihood.
//! 4. [`labeling`] and [`report`]: human coding of topics against an
//!    economic taxonomy, then a ranked label distribution.
//!
//! [`cli`] wires the stages together through files in an output directory.

pub mod cli;
pub mod corpus;
pub mod hashing;
pub mod labeling;
pub mod report;
pub mod sentiment;
pub mod synth;
pub mod topicmodel;

pub use corpus::{Corpus, Document, QueryFilter, RawPost, TokenRules, Vocabulary};
pub use labeling::{KeywordRules, Taxonomy, TopicLabeling, TopicStatus};
pub use report::{LabelDistribution, MassMode, TopicMassVector};
pub use sentiment::{Lexicon, Polarity, SentimentLabel, SentimentResult};
pub use topicmodel::{HeldOutEstimate, LdaConfig, LdaState, TopicModel};
