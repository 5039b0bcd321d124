use std::collections::HashSet;
use std::fmt;

use super::text::{tokenize_into, TokenRules};
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Mention,
    Hashtag,
    Keyword,
    Conjunction,
}

/// One collection query: `@name`, `#tag`, `word` or `a AND b [AND ...]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryFilter {
    kind: QueryKind,
    terms: Vec<String>,
}

impl QueryFilter {
    pub fn new(kind: QueryKind, terms: Vec<String>) -> Result<Self, CorpusError> {
        let terms: Vec<String> = terms.into_iter().map(|t| t.trim().to_lowercase()).collect();
        let bad = |reason: &str| CorpusError::InvalidFilter {
            query: terms.join(" AND "),
            reason: reason.to_string(),
        };
        if terms.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(bad("terms must be non-empty single words"));
        }
        match kind {
            QueryKind::Conjunction if terms.len() < 2 => Err(bad("conjunction needs at least two terms")),
            QueryKind::Mention | QueryKind::Hashtag | QueryKind::Keyword if terms.len() != 1 => {
                Err(bad("expected exactly one term"))
            }
            _ => Ok(QueryFilter { kind, terms }),
        }
    }

    pub fn mention(term: &str) -> Result<Self, CorpusError> {
        Self::new(QueryKind::Mention, vec![term.to_string()])
    }

    pub fn hashtag(term: &str) -> Result<Self, CorpusError> {
        Self::new(QueryKind::Hashtag, vec![term.to_string()])
    }

    pub fn keyword(term: &str) -> Result<Self, CorpusError> {
        Self::new(QueryKind::Keyword, vec![term.to_string()])
    }

    pub fn conjunction<S: AsRef<str>>(terms: &[S]) -> Result<Self, CorpusError> {
        Self::new(
            QueryKind::Conjunction,
            terms.iter().map(|t| t.as_ref().to_string()).collect(),
        )
    }

    /// Parse the query syntax used in config files.
    pub fn parse(query: &str) -> Result<Self, CorpusError> {
        let query = query.trim();
        let parts: Vec<&str> = query.split(" AND ").map(str::trim).collect();
        if parts.len() > 1 {
            return Self::conjunction(&parts).map_err(|e| with_query(e, query));
        }
        let result = if let Some(rest) = query.strip_prefix('@') {
            Self::mention(rest)
        } else if let Some(rest) = query.strip_prefix('#') {
            Self::hashtag(rest)
        } else {
            Self::keyword(query)
        };
        result.map_err(|e| with_query(e, query))
    }

    pub fn kind(&self) -> QueryKind {
        self.kind
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Match against an already tokenized post.
    pub fn matches_tokens(&self, tokens: &HashSet<&str>) -> bool {
        let term = &self.terms[0];
        match self.kind {
            QueryKind::Mention => tokens.contains(format!("@{term}").as_str()),
            QueryKind::Hashtag => tokens.contains(format!("#{term}").as_str()),
            QueryKind::Keyword => tokens.contains(term.as_str()),
            QueryKind::Conjunction => self.terms.iter().all(|t| tokens.contains(t.as_str())),
        }
    }

    /// Case-insensitive token match of this filter against `text`.
    pub fn matches(&self, text: &str) -> bool {
        let tokens = match_tokens(text);
        self.matches_tokens(&tokens.iter().map(String::as_str).collect())
    }
}

fn with_query(err: CorpusError, query: &str) -> CorpusError {
    match err {
        CorpusError::InvalidFilter { reason, .. } => CorpusError::InvalidFilter {
            query: query.to_string(),
            reason,
        },
        other => other,
    }
}

impl fmt::Display for QueryFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            QueryKind::Mention => write!(f, "@{}", self.terms[0]),
            QueryKind::Hashtag => write!(f, "#{}", self.terms[0]),
            QueryKind::Keyword => write!(f, "{}", self.terms[0]),
            QueryKind::Conjunction => write!(f, "{}", self.terms.join(" AND ")),
        }
    }
}

/// Matching tokenizes with single-character tokens kept.
fn match_tokens(text: &str) -> Vec<String> {
    let rules = TokenRules {
        min_token_len: 1,
        ..TokenRules::default()
    };
    let mut out = Vec::new();
    tokenize_into(text, &rules, &mut out);
    out
}

/// A union of filters: a post is kept when any filter matches. An empty set
/// keeps everything.
#[derive(Debug, Clone, Default)]
pub struct FilterSet {
    filters: Vec<QueryFilter>,
}

impl FilterSet {
    pub fn new(filters: Vec<QueryFilter>) -> Self {
        FilterSet { filters }
    }

    pub fn filters(&self) -> &[QueryFilter] {
        &self.filters
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn matches_any(&self, text: &str) -> bool {
        if self.filters.is_empty() {
            return true;
        }
        let tokens = match_tokens(text);
        let set: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        self.filters.iter().any(|f| f.matches_tokens(&set))
    }
}

/// `matches(text, filter)`.
pub fn matches(text: &str, filter: &QueryFilter) -> bool {
    filter.matches(text)
}
