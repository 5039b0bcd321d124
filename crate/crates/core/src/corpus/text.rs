use std::borrow::Cow;

use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

use super::CorpusError;

/// Tokenizer settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRules {
    pub lowercase: bool,
    /// Characters kept when they start a token (`#hashtag`, `@mention`).
    pub keep_prefixes: Vec<char>,
    pub min_token_len: usize,
    pub strip_urls: bool,
}

impl Default for TokenRules {
    fn default() -> Self {
        TokenRules {
            lowercase: true,
            keep_prefixes: vec!['#', '@'],
            min_token_len: 2,
            strip_urls: true,
        }
    }
}

impl TokenRules {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_token_len == 0 {
            return Err(CorpusError::InvalidTokenRules);
        }
        Ok(())
    }

    fn is_prefix(&self, c: char) -> bool {
        self.keep_prefixes.contains(&c)
    }
}

const URL_MARKERS: [&str; 3] = ["http://", "https://", "t.co/"];

fn nfc(text: &str) -> Cow<'_, str> {
    if text.is_ascii() || is_nfc_quick(text.chars()) == IsNormalized::Yes {
        Cow::Borrowed(text)
    } else {
        Cow::Owned(text.nfc().collect())
    }
}

fn lowercase(text: Cow<'_, str>) -> Cow<'_, str> {
    if text.is_ascii() {
        if text.bytes().any(|b| b.is_ascii_uppercase()) {
            Cow::Owned(text.to_ascii_lowercase())
        } else {
            text
        }
    } else {
        // Lowercasing can decompose characters, so recompose afterwards.
        let lowered = text.to_lowercase();
        if is_nfc_quick(lowered.chars()) == IsNormalized::Yes {
            Cow::Owned(lowered)
        } else {
            Cow::Owned(lowered.nfc().collect())
        }
    }
}

/// NFC, lowercase, collapse whitespace runs to one space and trim.
pub fn normalize(text: &str) -> String {
    let prepared = lowercase(nfc(text));
    let mut out = String::with_capacity(prepared.len());
    for word in prepared.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub(crate) fn contains_url_normalized(normalized: &str) -> bool {
    URL_MARKERS.iter().any(|m| normalized.contains(m))
}

pub(crate) fn is_retweet_normalized(normalized: &str) -> bool {
    normalized.starts_with("rt @")
}

/// True when the normalized text contains `http://`, `https://` or `t.co/`.
pub fn contains_url(text: &str) -> bool {
    contains_url_normalized(&normalize(text))
}

/// True when the normalized text starts with `rt @`.
pub fn is_retweet(text: &str) -> bool {
    is_retweet_normalized(&normalize(text))
}

/// Byte offset of the first URL marker in `piece`, ASCII case-insensitive.
fn url_start(piece: &str) -> Option<usize> {
    let bytes = piece.as_bytes();
    URL_MARKERS
        .iter()
        .filter_map(|marker| {
            let m = marker.as_bytes();
            if bytes.len() < m.len() {
                return None;
            }
            (0..=bytes.len() - m.len()).find(|&i| bytes[i..i + m.len()].eq_ignore_ascii_case(m))
        })
        .min()
}

/// Split `text` into tokens.
///
/// URLs (from a marker to the end of its whitespace-delimited run) are cut
/// first when `strip_urls` is set. Tokens are maximal runs of alphanumeric
/// characters, optionally led by one kept prefix character. A prefix
/// character in the middle of a run starts a new token. Tokens with fewer
/// than `min_token_len` characters, or nothing but a prefix, are dropped.
pub fn tokenize(text: &str, rules: &TokenRules) -> Vec<String> {
    let mut out = Vec::new();
    tokenize_into(text, rules, &mut out);
    out
}

pub(crate) fn tokenize_into(text: &str, rules: &TokenRules, out: &mut Vec<String>) {
    let prepared = if rules.lowercase {
        lowercase(nfc(text))
    } else {
        nfc(text)
    };
    let mut current = String::new();
    for piece in prepared.split_whitespace() {
        let piece = match rules.strip_urls.then(|| url_start(piece)).flatten() {
            Some(cut) => &piece[..cut],
            None => piece,
        };
        for c in piece.chars() {
            if c.is_alphanumeric() {
                current.push(c);
            } else if rules.is_prefix(c) {
                flush(&mut current, rules, out);
                current.push(c);
            } else {
                flush(&mut current, rules, out);
            }
        }
        flush(&mut current, rules, out);
    }
}

fn flush(current: &mut String, rules: &TokenRules, out: &mut Vec<String>) {
    if current.is_empty() {
        return;
    }
    let mut chars = current.chars();
    let first = chars.next();
    let body_empty = first.is_some_and(|c| rules.is_prefix(c)) && chars.as_str().is_empty();
    if !body_empty && current.chars().count() >= rules.min_token_len {
        out.push(std::mem::take(current));
    } else {
        current.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_and_lowercases() {
        assert_eq!(normalize("  Hello   World "), "hello world");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("\tA\n\nB\u{00A0}c"), "a b c");
    }

    #[test]
    fn normalize_composes() {
        assert_eq!(normalize("Cafe\u{0301}"), "caf\u{00e9}");
    }

    #[test]
    fn retweet_and_url_predicates() {
        assert!(is_retweet("RT @user: great rally"));
        assert!(!is_retweet("great rally RT @user"));
        assert!(contains_url("read this https://t.co/x"));
        assert!(contains_url("see HTTP://example.com"));
        assert!(contains_url("short t.co/abc"));
        assert!(!contains_url("sanders supports free tuition"));
        assert!(!is_retweet("sanders supports free tuition"));
    }

    #[test]
    fn tokenize_examples() {
        let rules = TokenRules::default();
        assert_eq!(
            tokenize("#FeelTheBern supports $15 wage!", &rules),
            vec!["#feelthebern", "supports", "15", "wage"]
        );
        assert!(tokenize("", &rules).is_empty());
        assert_eq!(tokenize("@BernieSanders", &rules), vec!["@berniesanders"]);
    }

    #[test]
    fn tokenize_strips_urls_and_bare_prefixes() {
        let rules = TokenRules::default();
        assert_eq!(
            tokenize("go https://t.co/Ab12 now # @ ##tag", &rules),
            vec!["go", "now", "#tag"]
        );
        assert_eq!(tokenize("a#bc tuition-free", &rules), vec!["#bc", "tuition", "free"]);
        let keep = TokenRules {
            strip_urls: false,
            ..TokenRules::default()
        };
        assert_eq!(tokenize("see http://x.org", &keep), vec!["see", "http", "org"]);
    }

    #[test]
    fn tokenize_respects_flags() {
        let rules = TokenRules {
            lowercase: false,
            keep_prefixes: vec![],
            min_token_len: 1,
            strip_urls: true,
        };
        assert_eq!(tokenize("I #Agree", &rules), vec!["I", "Agree"]);
        assert!(TokenRules { min_token_len: 0, ..TokenRules::default() }
            .validate()
            .is_err());
    }
}
