//! Text container for a fitted sampler state.
//!
//! ```text
//! poptopic-lda 1
//! topics<TAB>K          (then alpha, beta, sweeps, seed, holdout_fraction,
//!                         particles, vocab_size, vocab_sha256, documents,
//!                         tokens, rng_word_pos)
//! [topic_word]
//! k<TAB>w:count w:count ...      (non-zero counts, one line per topic)
//! [assignments]
//! post_id<TAB>w:z w:z ...        (one line per document, token order)
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LdaConfig, LdaState, TopicModel, TopicModelError};
use crate::corpus::{Corpus, Document, Vocabulary};

const MAGIC: &str = "poptopic-lda 1";

/// A reloaded model: the state and the document structure it was fitted on.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub config: LdaConfig,
    pub vocab_sha256: String,
    pub corpus: Corpus,
    pub state: LdaState,
}

pub fn write_model<W: Write>(
    mut sink: W,
    state: &LdaState,
    config: &LdaConfig,
    corpus: &Corpus,
) -> Result<(), TopicModelError> {
    if state.num_docs() != corpus.num_docs() || state.vocab_size() != corpus.vocabulary().len() {
        return Err(TopicModelError::Mismatch("state was not fitted on this corpus".into()));
    }
    let k_count = state.topics();
    writeln!(sink, "{MAGIC}")?;
    writeln!(sink, "topics\t{k_count}")?;
    writeln!(sink, "alpha\t{}", config.alpha)?;
    writeln!(sink, "beta\t{}", config.beta)?;
    writeln!(sink, "sweeps\t{}", config.sweeps)?;
    writeln!(sink, "seed\t{}", config.seed)?;
    writeln!(sink, "holdout_fraction\t{}", config.holdout_fraction)?;
    writeln!(sink, "particles\t{}", config.particles)?;
    writeln!(sink, "vocab_size\t{}", state.vocab_size())?;
    writeln!(sink, "vocab_sha256\t{}", corpus.vocabulary().digest())?;
    writeln!(sink, "documents\t{}", corpus.num_docs())?;
    writeln!(sink, "tokens\t{}", corpus.num_tokens())?;
    writeln!(sink, "rng_word_pos\t{}", state.rng().get_word_pos())?;
    writeln!(sink, "[topic_word]")?;
    for k in 0..k_count {
        write!(sink, "{k}\t")?;
        let mut first = true;
        for w in 0..state.vocab_size() {
            let c = state.n_kw(k, w);
            if c > 0 {
                if !first {
                    sink.write_all(b" ")?;
                }
                write!(sink, "{w}:{c}")?;
                first = false;
            }
        }
        writeln!(sink)?;
    }
    writeln!(sink, "[assignments]")?;
    for (doc, z) in corpus.documents().iter().zip(state.assignments()) {
        write!(sink, "{}\t", escape(&doc.post_id))?;
        for (i, (w, t)) in doc.tokens.iter().zip(z).enumerate() {
            if i > 0 {
                sink.write_all(b" ")?;
            }
            write!(sink, "{w}:{t}")?;
        }
        writeln!(sink)?;
    }
    sink.flush()?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Read a model written by [`write_model`]. `vocabulary` must be the one the
/// model was fitted with; its digest is checked.
pub fn read_model<R: BufRead>(source: R, vocabulary: Vocabulary) -> Result<SavedModel, TopicModelError> {
    let mut lines = source.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String), TopicModelError> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(TopicModelError::Parse {
                line: 0,
                reason: format!("unexpected end of file, expected {expect}"),
            }),
        }
    };
    let parse_err = |line: usize, reason: String| TopicModelError::Parse { line, reason };

    let (line, magic) = next("header")?;
    if magic != MAGIC {
        return Err(parse_err(line, format!("expected `{MAGIC}`")));
    }
    let mut header = BTreeMap::new();
    loop {
        let (line, text) = next("[topic_word]")?;
        if text == "[topic_word]" {
            break;
        }
        let (key, value) = text
            .split_once('\t')
            .ok_or_else(|| parse_err(line, "expected key<TAB>value".into()))?;
        header.insert(key.to_string(), (line, value.to_string()));
    }
    fn field<T: std::str::FromStr>(
        header: &BTreeMap<String, (usize, String)>,
        key: &str,
    ) -> Result<T, TopicModelError> {
        let (line, value) = header.get(key).ok_or_else(|| TopicModelError::Parse {
            line: 0,
            reason: format!("missing header field `{key}`"),
        })?;
        value.parse().map_err(|_| TopicModelError::Parse {
            line: *line,
            reason: format!("bad value for `{key}`"),
        })
    }
    let config = LdaConfig {
        topics: field(&header, "topics")?,
        alpha: field(&header, "alpha")?,
        beta: field(&header, "beta")?,
        sweeps: field(&header, "sweeps")?,
        seed: field(&header, "seed")?,
        holdout_fraction: field(&header, "holdout_fraction")?,
        particles: field(&header, "particles")?,
    };
    config.validate()?;
    let vocab_size: usize = field(&header, "vocab_size")?;
    let vocab_sha256: String = field(&header, "vocab_sha256")?;
    let documents: usize = field(&header, "documents")?;
    let word_pos: u128 = field(&header, "rng_word_pos")?;
    if vocab_size != vocabulary.len() || vocab_sha256 != vocabulary.digest() {
        return Err(TopicModelError::Mismatch(
            "vocabulary does not match the one the model was fitted with".into(),
        ));
    }

    let mut stored_counts = vec![0u32; config.topics * vocab_size];
    for k in 0..config.topics {
        let (line, text) = next("topic_word row")?;
        let (id, rest) = text
            .split_once('\t')
            .ok_or_else(|| parse_err(line, "expected topic<TAB>counts".into()))?;
        if id.parse::<usize>().ok() != Some(k) {
            return Err(parse_err(line, format!("expected topic {k}")));
        }
        for pair in rest.split_whitespace() {
            let (w, c) = parse_pair(pair).ok_or_else(|| parse_err(line, format!("bad pair `{pair}`")))?;
            if w as usize >= vocab_size {
                return Err(parse_err(line, format!("word {w} out of range")));
            }
            stored_counts[w as usize * config.topics + k] = c;
        }
    }
    let (line, text) = next("[assignments]")?;
    if text != "[assignments]" {
        return Err(parse_err(line, "expected [assignments]".into()));
    }
    let mut docs = Vec::with_capacity(documents);
    let mut assignments = Vec::with_capacity(documents);
    for _ in 0..documents {
        let (line, text) = next("assignment row")?;
        let (id, rest) = text
            .split_once('\t')
            .ok_or_else(|| parse_err(line, "expected post_id<TAB>assignments".into()))?;
        let mut tokens = Vec::new();
        let mut z = Vec::new();
        for pair in rest.split_whitespace() {
            let (w, t) = parse_pair(pair).ok_or_else(|| parse_err(line, format!("bad pair `{pair}`")))?;
            tokens.push(w);
            z.push(t);
        }
        if tokens.is_empty() {
            return Err(parse_err(line, "empty document".into()));
        }
        docs.push(Document {
            post_id: unescape(id),
            tokens,
        });
        assignments.push(z);
    }
    let corpus = Corpus::new(docs, vocabulary)
        .ok_or_else(|| TopicModelError::Mismatch("assignment word id out of range".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_word_pos(word_pos);
    let state = LdaState::from_assignments(&corpus, config.topics, assignments, rng)?;
    let consistent = (0..config.topics)
        .all(|k| (0..vocab_size).all(|w| state.n_kw(k, w) == stored_counts[w * config.topics + k]));
    if !consistent {
        return Err(TopicModelError::Mismatch(
            "stored topic-word counts disagree with the assignments".into(),
        ));
    }
    Ok(SavedModel {
        config,
        vocab_sha256,
        corpus,
        state,
    })
}

fn parse_pair(pair: &str) -> Option<(u32, u32)> {
    let (a, b) = pair.split_once(':')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// Top-word report: header `topic_id<TAB>rank<TAB>token<TAB>probability`,
/// ranks from 1.
pub fn write_top_words<W: Write>(
    mut sink: W,
    model: &TopicModel,
    vocabulary: &Vocabulary,
    n: usize,
) -> Result<(), TopicModelError> {
    writeln!(sink, "topic_id\trank\ttoken\tprobability")?;
    for k in 0..model.topics() {
        for (rank, (token, p)) in model.top_tokens(vocabulary, k, n)?.into_iter().enumerate() {
            writeln!(sink, "{k}\t{}\t{token}\t{p}", rank + 1)?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topicmodel::{estimate, fit, sweep, toy_corpus};

    #[test]
    fn model_round_trip_resumes_chain() {
        let mut corpus = toy_corpus(&[&[0, 1, 2, 1], &[3, 3, 0], &[2]], 4);
        let docs: Vec<Document> = corpus
            .documents()
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, mut d)| {
                if i == 0 {
                    d.post_id = "tab\there\\".into();
                }
                d
            })
            .collect();
        corpus = Corpus::new(docs, corpus.vocabulary().clone()).unwrap();
        let cfg = LdaConfig { sweeps: 7, seed: 4, ..LdaConfig::new(2) };
        let (mut state, _) = fit(&corpus, &cfg).unwrap();

        let mut buf = Vec::new();
        write_model(&mut buf, &state, &cfg, &corpus).unwrap();
        let mut saved = read_model(buf.as_slice(), corpus.vocabulary().clone()).unwrap();
        assert_eq!(saved.config, cfg);
        assert_eq!(saved.state, state);
        assert_eq!(saved.corpus, corpus);

        sweep(&mut state, &corpus, &cfg);
        sweep(&mut saved.state, &saved.corpus, &cfg);
        assert_eq!(saved.state, state);
        assert_eq!(estimate(&saved.state, &cfg), estimate(&state, &cfg));
    }

    #[test]
    fn rejects_wrong_vocabulary() {
        let corpus = toy_corpus(&[&[0, 1]], 2);
        let cfg = LdaConfig { sweeps: 1, ..LdaConfig::new(2) };
        let (state, _) = fit(&corpus, &cfg).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &state, &cfg, &corpus).unwrap();
        let other = Vocabulary::from_entries([("x".to_string(), 1), ("y".to_string(), 1)]).unwrap();
        assert!(matches!(read_model(buf.as_slice(), other), Err(TopicModelError::Mismatch(_))));
        let truncated = &buf[..buf.len() / 2];
        assert!(read_model(truncated, corpus.vocabulary().clone()).is_err());
    }

    #[test]
    fn top_word_report_format() {
        let corpus = toy_corpus(&[&[0, 0, 1]], 2);
        let cfg = LdaConfig { sweeps: 1, ..LdaConfig::new(1) };
        let (_, model) = fit(&corpus, &cfg).unwrap();
        let mut buf = Vec::new();
        write_top_words(&mut buf, &model, corpus.vocabulary(), 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "topic_id\trank\ttoken\tprobability");
        assert!(lines[1].starts_with("0\t1\tw0\t0.66"));
        assert!(lines[2].starts_with("0\t2\tw1\t"));
        assert_eq!(lines.len(), 3);
    }
}
