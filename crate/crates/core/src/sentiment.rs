//! Lexicon sentiment: count positive and negative pattern hits per post and
//! partition posts by the larger count.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{tokenize, RawPost, TokenRules};

const DEMO_LEXICON: &str = include_str!("../data/demo_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon line {line}: `*` is only allowed as the final character of `{pattern}`")]
    WildcardPosition { line: usize, pattern: String },
    #[error("lexicon line {line}: wildcard `{pattern}` has an empty stem")]
    EmptyStem { line: usize, pattern: String },
    #[error("lexicon line {line}: unknown category `{category}`")]
    UnknownCategory { line: usize, category: String },
    #[error("lexicon line {line}: `{pattern}` is listed as both positive and negative")]
    ConflictingPattern { line: usize, pattern: String },
    #[error("lexicon line {line}: expected `pattern<TAB>category`")]
    Syntax { line: usize },
    #[error("lexicon read failed: {0}")]
    Io(String),
}

/// Exact patterns and `stem*` wildcard patterns, each with a polarity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    exact: HashMap<String, Polarity>,
    stems: HashMap<String, Polarity>,
    longest_stem: usize,
}

impl Lexicon {
    /// The 64-entry illustrative lexicon bundled with the crate.
    pub fn demo() -> Self {
        load_lexicon(DEMO_LEXICON.as_bytes()).expect("bundled lexicon is valid")
    }

    /// Add one pattern. `line` is only used for error messages.
    pub fn insert(&mut self, pattern: &str, polarity: Polarity, line: usize) -> Result<(), LexiconError> {
        let pattern = pattern.trim().to_lowercase();
        let (key, table) = match pattern.find('*') {
            None => (pattern.as_str(), &mut self.exact),
            Some(pos) if pos + 1 != pattern.len() => {
                return Err(LexiconError::WildcardPosition { line, pattern })
            }
            Some(0) => return Err(LexiconError::EmptyStem { line, pattern }),
            Some(pos) => (&pattern[..pos], &mut self.stems),
        };
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(LexiconError::Syntax { line });
        }
        match table.get(key) {
            Some(existing) if *existing != polarity => {
                return Err(LexiconError::ConflictingPattern { line, pattern })
            }
            Some(_) => {}
            None => {
                table.insert(key.to_string(), polarity);
            }
        }
        if pattern.ends_with('*') {
            self.longest_stem = self.longest_stem.max(key.len());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, polarity: Polarity) -> usize {
        self.exact
            .values()
            .chain(self.stems.values())
            .filter(|p| **p == polarity)
            .count()
    }

    /// Polarity of the pattern that claims `token`: an exact pattern first,
    /// otherwise the longest matching stem.
    pub fn lookup(&self, token: &str) -> Option<Polarity> {
        if let Some(p) = self.exact.get(token) {
            return Some(*p);
        }
        if self.stems.is_empty() {
            return None;
        }
        let limit = token.len().min(self.longest_stem);
        (1..=limit)
            .rev()
            .filter(|&end| token.is_char_boundary(end))
            .find_map(|end| self.stems.get(&token[..end]).copied())
    }

    /// Patterns in file syntax, sorted, with their polarity.
    pub fn patterns(&self) -> Vec<(String, Polarity)> {
        let mut out: Vec<(String, Polarity)> = self
            .exact
            .iter()
            .map(|(k, p)| (k.clone(), *p))
            .chain(self.stems.iter().map(|(k, p)| (format!("{k}*"), *p)))
            .collect();
        out.sort();
        out
    }
}

/// Parse `pattern<TAB>category` lines; `#` comments and blank lines are
/// skipped.
pub fn load_lexicon<R: BufRead>(source: R) -> Result<Lexicon, LexiconError> {
    let mut lexicon = Lexicon::default();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| LexiconError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (pattern, category) = trimmed
            .split_once('\t')
            .ok_or(LexiconError::Syntax { line: line_no })?;
        let polarity = match category.trim() {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            other => {
                return Err(LexiconError::UnknownCategory {
                    line: line_no,
                    category: other.to_string(),
                })
            }
        };
        lexicon.insert(pattern, polarity, line_no)?;
    }
    Ok(lexicon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub pos_hits: usize,
    pub neg_hits: usize,
    pub label: SentimentLabel,
}

impl SentimentResult {
    pub fn from_hits(pos_hits: usize, neg_hits: usize) -> Self {
        let label = match pos_hits.cmp(&neg_hits) {
            std::cmp::Ordering::Greater => SentimentLabel::Positive,
            std::cmp::Ordering::Less => SentimentLabel::Negative,
            std::cmp::Ordering::Equal => SentimentLabel::Neutral,
        };
        SentimentResult {
            pos_hits,
            neg_hits,
            label,
        }
    }
}

/// Count hits over `tokens`; each token contributes at most one hit.
pub fn score<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> SentimentResult {
    let (mut pos, mut neg) = (0, 0);
    for token in tokens {
        match lexicon.lookup(token.as_ref()) {
            Some(Polarity::Positive) => pos += 1,
            Some(Polarity::Negative) => neg += 1,
            None => {}
        }
    }
    SentimentResult::from_hits(pos, neg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

impl fmt::Display for PartitionCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {} / {}", self.positive, self.negative, self.neutral)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Partition {
    pub positive: Vec<RawPost>,
    pub negative: Vec<RawPost>,
    pub neutral: Vec<RawPost>,
}

impl Partition {
    pub fn counts(&self) -> PartitionCounts {
        PartitionCounts {
            positive: self.positive.len(),
            negative: self.negative.len(),
            neutral: self.neutral.len(),
        }
    }
}

/// Tokenize and score every post, then split the posts by label. Order
/// within each part follows the input.
pub fn partition<I>(posts: I, lexicon: &Lexicon, rules: &TokenRules) -> Partition
where
    I: IntoIterator<Item = RawPost>,
{
    let mut out = Partition::default();
    for post in posts {
        let result = score(&tokenize(&post.text, rules), lexicon);
        match result.label {
            SentimentLabel::Positive => out.positive.push(post),
            SentimentLabel::Negative => out.negative.push(post),
            SentimentLabel::Neutral => out.neutral.push(post),
        }
    }
    out
}
