use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ingest::RawPost;
use super::text::{contains_url_normalized, is_retweet_normalized, normalize};

/// Removal counts by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupStats {
    pub retweet: usize,
    pub url: usize,
    pub duplicate: usize,
}

impl DedupStats {
    pub fn total(&self) -> usize {
        self.retweet + self.url + self.duplicate
    }
}

/// Drop retweets, then posts containing a URL, then later posts whose
/// normalized text was already seen. Input order is preserved.
pub fn dedup<I>(posts: I) -> (Vec<RawPost>, DedupStats)
where
    I: IntoIterator<Item = RawPost>,
{
    let mut stats = DedupStats::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut kept = Vec::new();
    for post in posts {
        let normalized = normalize(&post.text);
        if is_retweet_normalized(&normalized) {
            stats.retweet += 1;
        } else if contains_url_normalized(&normalized) {
            stats.url += 1;
        } else if !seen.insert(normalized) {
            stats.duplicate += 1;
        } else {
            kept.push(post);
        }
    }
    (kept, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn posts(texts: &[&str]) -> Vec<RawPost> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawPost::new(i.to_string(), *t))
            .collect()
    }

    #[test]
    fn three_rules() {
        let (kept, stats) = dedup(posts(&["hello", "Hello ", "RT @a: hello"]));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].text, "hello");
        assert_eq!(
            stats,
            DedupStats {
                retweet: 1,
                url: 0,
                duplicate: 1
            }
        );
    }

    #[test]
    fn clean_input_unchanged() {
        let input = posts(&["one", "two", "three"]);
        let (kept, stats) = dedup(input.clone());
        assert_eq!(kept, input);
        assert_eq!(stats.total(), 0);
    }

    #[test]
    fn url_before_duplicate() {
        let (kept, stats) = dedup(posts(&["see https://x.org", "see https://x.org", "ok"]));
        assert_eq!(kept.len(), 1);
        assert_eq!(stats.url, 2);
        assert_eq!(stats.duplicate, 0);
    }
}
