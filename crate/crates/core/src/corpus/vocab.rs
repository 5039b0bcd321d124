use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use super::ingest::RawPost;
use super::text::{tokenize_into, TokenRules};
use super::CorpusError;

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Token to index bijection over `0..len()` with document frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Build from `(token, document frequency)` pairs in index order.
    pub fn from_entries<I>(entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (String, u32)>,
    {
        let mut vocab = Vocabulary::default();
        for (line, (token, df)) in entries.into_iter().enumerate() {
            if vocab.index.contains_key(&token) {
                return Err(CorpusError::InvalidVocabulary {
                    line: line + 1,
                    reason: format!("duplicate token `{token}`"),
                });
            }
            vocab.push(token, df);
        }
        Ok(vocab)
    }

    fn push(&mut self, token: String, df: u32) {
        self.index.insert(token.clone(), self.tokens.len() as u32);
        self.tokens.push(token);
        self.doc_freq.push(df);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    /// SHA-256 over the tokens in index order.
    pub fn digest(&self) -> String {
        crate::hashing::sha256_lines(self.tokens.iter().map(String::as_str))
    }

    /// Tab-separated `token<TAB>df`, one per line, in index order.
    pub fn write_tsv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for (token, df) in self.tokens.iter().zip(&self.doc_freq) {
            writeln!(sink, "{token}\t{df}")?;
        }
        sink.flush()
    }

    pub fn read_tsv<R: BufRead>(source: R) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let bad = |reason: &str| CorpusError::InvalidVocabulary {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (token, df) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>df"))?;
            let df = df.trim().parse().map_err(|_| bad("document frequency is not an integer"))?;
            if token.is_empty() {
                return Err(bad("empty token"));
            }
            entries.push((token.to_string(), df));
        }
        Self::from_entries(entries)
    }
}

/// Build a vocabulary from tokenized documents. Stopwords and tokens seen in
/// fewer than `min_df` documents are excluded; indices follow first
/// appearance. `min_df` of 0 is treated as 1.
pub fn build_vocabulary<D, S>(documents: &[D], min_df: u32, stopwords: &HashSet<String>) -> Vocabulary
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    let min_df = min_df.max(1);
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, u32> = HashMap::new();
    let mut in_doc: HashSet<&str> = HashSet::new();
    for doc in documents {
        in_doc.clear();
        for token in doc.as_ref() {
            let token = token.as_ref();
            if stopwords.contains(token) || !in_doc.insert(token) {
                continue;
            }
            let count = counts.entry(token).or_insert_with(|| {
                order.push(token);
                0
            });
            *count += 1;
        }
    }
    let mut vocab = Vocabulary::default();
    for token in order {
        let df = counts[token];
        if df >= min_df {
            vocab.push(token.to_string(), df);
        }
    }
    vocab
}

/// Load a stopword list: one token per line, `#` comments, blank lines ignored.
pub fn load_stopwords<R: BufRead>(source: R) -> std::io::Result<HashSet<String>> {
    let mut words = HashSet::new();
    for line in source.lines() {
        let line = line?;
        let word = line.trim();
        if !word.is_empty() && !word.starts_with('#') {
            words.insert(word.to_lowercase());
        }
    }
    Ok(words)
}

/// The bundled English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    load_stopwords(DEFAULT_STOPWORDS.as_bytes()).expect("bundled stopwords are valid UTF-8")
}

/// One encoded post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub post_id: String,
    pub tokens: Vec<u32>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Encoded documents over a shared vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    num_tokens: usize,
}

impl Corpus {
    /// Empty documents are dropped. Returns `None` if a token index is out of
    /// range for the vocabulary.
    pub fn new(documents: Vec<Document>, vocabulary: Vocabulary) -> Option<Self> {
        let v = vocabulary.len() as u32;
        if documents.iter().flat_map(|d| &d.tokens).any(|&w| w >= v) {
            return None;
        }
        let documents: Vec<Document> = documents.into_iter().filter(|d| !d.is_empty()).collect();
        let num_tokens = documents.iter().map(Document::len).sum();
        Some(Corpus {
            documents,
            vocabulary,
            num_tokens,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn decode(&self, doc: &Document) -> Vec<&str> {
        doc.tokens.iter().map(|&w| self.vocabulary.token(w)).collect()
    }

    /// Split documents into two corpora by index set. The first part gets a
    /// compacted vocabulary of the words it uses; the second is re-encoded
    /// over that vocabulary with out-of-vocabulary tokens dropped (and
    /// documents left empty dropped).
    pub fn split_by(&self, second: &HashSet<usize>) -> (Corpus, Corpus) {
        let mut remap: Vec<Option<u32>> = vec![None; self.vocabulary.len()];
        let mut train_vocab = Vocabulary::default();
        let mut train_docs = Vec::new();
        let mut df_counts: Vec<u32> = Vec::new();
        for (i, doc) in self.documents.iter().enumerate() {
            if second.contains(&i) {
                continue;
            }
            let mut seen = HashSet::new();
            let tokens = doc
                .tokens
                .iter()
                .map(|&w| {
                    let id = *remap[w as usize].get_or_insert_with(|| {
                        train_vocab.push(self.vocabulary.token(w).to_string(), 0);
                        df_counts.push(0);
                        (train_vocab.len() - 1) as u32
                    });
                    if seen.insert(id) {
                        df_counts[id as usize] += 1;
                    }
                    id
                })
                .collect();
            train_docs.push(Document {
                post_id: doc.post_id.clone(),
                tokens,
            });
        }
        train_vocab.doc_freq = df_counts;
        let held_docs = self
            .documents
            .iter()
            .enumerate()
            .filter(|(i, _)| second.contains(i))
            .map(|(_, doc)| Document {
                post_id: doc.post_id.clone(),
                tokens: doc.tokens.iter().filter_map(|&w| remap[w as usize]).collect(),
            })
            .collect();
        let train = Corpus::new(train_docs, train_vocab.clone()).expect("remapped ids in range");
        let held = Corpus::new(held_docs, train_vocab).expect("remapped ids in range");
        (train, held)
    }
}

/// Result of encoding posts.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub corpus: Corpus,
    /// Posts whose token sequence was empty after dropping unknown tokens.
    pub dropped: usize,
}

/// Encode already tokenized documents. Out-of-vocabulary tokens are dropped.
pub fn encode_tokens<S: AsRef<str>>(
    documents: &[(String, Vec<S>)],
    vocabulary: Vocabulary,
) -> Encoded {
    let mut dropped = 0;
    let mut docs = Vec::with_capacity(documents.len());
    for (post_id, tokens) in documents {
        let ids: Vec<u32> = tokens.iter().filter_map(|t| vocabulary.id(t.as_ref())).collect();
        if ids.is_empty() {
            dropped += 1;
        } else {
            docs.push(Document {
                post_id: post_id.clone(),
                tokens: ids,
            });
        }
    }
    Encoded {
        corpus: Corpus::new(docs, vocabulary).expect("ids come from the vocabulary"),
        dropped,
    }
}

/// Tokenize and encode posts.
pub fn encode(posts: &[RawPost], vocabulary: Vocabulary, rules: &TokenRules) -> Encoded {
    let tokenized: Vec<(String, Vec<String>)> = posts
        .iter()
        .map(|p| {
            let mut tokens = Vec::new();
            tokenize_into(&p.text, rules, &mut tokens);
            (p.id.clone(), tokens)
        })
        .collect();
    encode_tokens(&tokenized, vocabulary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn vocabulary_counts() {
        let d = docs(&[&["a", "b"], &["a"]]);
        let v = build_vocabulary(&d, 1, &HashSet::new());
        assert_eq!(v.len(), 2);
        assert_eq!(v.doc_freq(v.id("a").unwrap()), 2);
        assert_eq!(v.doc_freq(v.id("b").unwrap()), 1);
        assert_eq!(v.id("a"), Some(0));

        let stop: HashSet<String> = ["a".to_string()].into();
        assert_eq!(build_vocabulary(&d, 1, &stop).len(), 1);
        assert_eq!(build_vocabulary(&d, 2, &HashSet::new()).tokens(), ["a"]);
    }

    #[test]
    fn repeated_token_counts_once_per_doc() {
        let v = build_vocabulary(&docs(&[&["x", "x", "y"]]), 1, &HashSet::new());
        assert_eq!(v.doc_freq(0), 1);
    }

    #[test]
    fn encode_drops_empty_posts() {
        let rules = TokenRules::default();
        let posts = vec![RawPost::new("1", "the and of"), RawPost::new("2", "free college now")];
        let stop = default_stopwords();
        let toks: Vec<Vec<String>> = posts.iter().map(|p| super::super::tokenize(&p.text, &rules)).collect();
        let vocab = build_vocabulary(&toks, 1, &stop);
        let enc = encode(&posts, vocab, &rules);
        assert_eq!(enc.dropped, 1);
        assert_eq!(enc.corpus.num_docs(), 1);
        assert_eq!(enc.corpus.num_tokens(), 3);
        assert_eq!(enc.corpus.decode(&enc.corpus.documents()[0]), ["free", "college", "now"]);

        let empty = encode(&[], Vocabulary::default(), &rules);
        assert_eq!(empty.corpus.num_tokens(), 0);
        assert!(empty.corpus.is_empty());
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let v = build_vocabulary(&docs(&[&["#tag", "b"], &["b"]]), 1, &HashSet::new());
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(Vocabulary::read_tsv(buf.as_slice()).unwrap(), v);
        assert!(Vocabulary::read_tsv("a\t1\na\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn split_compacts_vocabulary() {
        let vocab = Vocabulary::from_entries(["a", "b", "c"].map(|t| (t.to_string(), 1))).unwrap();
        let corpus = Corpus::new(
            vec![
                Document { post_id: "0".into(), tokens: vec![2, 2] },
                Document { post_id: "1".into(), tokens: vec![0, 2] },
                Document { post_id: "2".into(), tokens: vec![1] },
            ],
            vocab,
        )
        .unwrap();
        let (train, held) = corpus.split_by(&[1, 2].into());
        assert_eq!(train.vocabulary().tokens(), ["c"]);
        assert_eq!(train.num_tokens(), 2);
        assert_eq!(held.num_docs(), 1);
        assert_eq!(held.decode(&held.documents()[0]), ["c"]);
    }

    #[test]
    fn stopword_file_format() {
        let words = load_stopwords("# comment\nThe\n\n  and \n".as_bytes()).unwrap();
        assert_eq!(words.len(), 2);
        assert!(words.contains("the"));
        assert!(default_stopwords().contains("the"));
    }
}
