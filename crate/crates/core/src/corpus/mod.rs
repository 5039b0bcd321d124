//! Post ingestion, query filtering, cleaning, tokenization and integer
//! encoding.

mod dedup;
mod ingest;
mod query;
mod text;
mod vocab;

pub use dedup::{dedup, DedupStats};
pub use ingest::{ingest, write_record_lines, InputFormat, Ingested, RawPost};
pub use query::{matches, FilterSet, QueryFilter, QueryKind};
pub use text::{contains_url, is_retweet, normalize, tokenize, TokenRules};
pub use vocab::{
    build_vocabulary, default_stopwords, encode, encode_tokens, load_stopwords, Corpus,
    Document, Encoded, Vocabulary,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("delimited header is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("invalid query filter `{query}`: {reason}")]
    InvalidFilter { query: String, reason: String },
    #[error("min_token_len must be at least 1")]
    InvalidTokenRules,
    #[error("vocabulary line {line}: {reason}")]
    InvalidVocabulary { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
