//! Seeded generator for corpora with known topics, drawn from the LDA
//! generative process with near-disjoint topic vocabularies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{Corpus, Document, RawPost, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub docs: usize,
    pub doc_len: usize,
    /// Dirichlet concentration of each document's topic mixture.
    pub doc_concentration: f64,
    /// Probability mass each topic spreads uniformly over the whole vocabulary.
    pub leak: f64,
}

impl Default for SyntheticSpec {
    /// Five topics of 20 words each, 200 documents of 50 tokens.
    fn default() -> Self {
        SyntheticSpec {
            topics: 5,
            words_per_topic: 20,
            docs: 200,
            doc_len: 50,
            doc_concentration: 0.2,
            leak: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: Corpus,
    /// True topic-word distributions, one row per topic.
    pub phi: Vec<Vec<f64>>,
    /// True document mixtures.
    pub theta: Vec<Vec<f64>>,
}

impl Synthetic {
    /// The documents as posts whose text is the space-joined tokens.
    pub fn posts(&self) -> Vec<RawPost> {
        self.corpus
            .documents()
            .iter()
            .map(|d| RawPost::new(d.post_id.clone(), self.corpus.decode(d).join(" ")))
            .collect()
    }
}

/// Token for word `i` of topic `k`, e.g. `topic3word07`.
pub fn word_name(topic: usize, index: usize) -> String {
    format!("topic{topic}word{index:02}")
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab_size = spec.topics * spec.words_per_topic;
    let phi: Vec<Vec<f64>> = (0..spec.topics)
        .map(|k| {
            (0..vocab_size)
                .map(|w| {
                    let own = if w / spec.words_per_topic == k {
                        (1.0 - spec.leak) / spec.words_per_topic as f64
                    } else {
                        0.0
                    };
                    own + spec.leak / vocab_size as f64
                })
                .collect()
        })
        .collect();
    let gamma = Gamma::new(spec.doc_concentration, 1.0).expect("positive concentration");

    let mut theta = Vec::with_capacity(spec.docs);
    let mut raw_docs = Vec::with_capacity(spec.docs);
    for _ in 0..spec.docs {
        let draws: Vec<f64> = (0..spec.topics).map(|_| gamma.sample(&mut rng).max(1e-300)).collect();
        let sum: f64 = draws.iter().sum();
        let mix: Vec<f64> = draws.iter().map(|g| g / sum).collect();
        let tokens: Vec<usize> = (0..spec.doc_len)
            .map(|_| {
                let k = categorical(&mix, &mut rng);
                categorical(&phi[k], &mut rng)
            })
            .collect();
        theta.push(mix);
        raw_docs.push(tokens);
    }

    // Vocabulary in first-appearance order, as the text pipeline would build it.
    let mut remap = vec![None; vocab_size];
    let mut entries: Vec<(String, u32)> = Vec::new();
    let mut documents = Vec::with_capacity(spec.docs);
    for (d, tokens) in raw_docs.iter().enumerate() {
        let mut seen = std::collections::HashSet::new();
        let ids = tokens
            .iter()
            .map(|&w| {
                let id = *remap[w].get_or_insert_with(|| {
                    entries.push((word_name(w / spec.words_per_topic, w % spec.words_per_topic), 0));
                    (entries.len() - 1) as u32
                });
                if seen.insert(id) {
                    entries[id as usize].1 += 1;
                }
                id
            })
            .collect();
        documents.push(Document {
            post_id: format!("s{d}"),
            tokens: ids,
        });
    }
    let vocabulary = Vocabulary::from_entries(entries).expect("distinct word names");
    // Reorder true phi columns into vocabulary order; unseen words are dropped.
    let phi = phi
        .iter()
        .map(|row| {
            let mut out = vec![0.0; vocabulary.len()];
            for (w, id) in remap.iter().enumerate() {
                if let Some(id) = id {
                    out[*id as usize] = row[w];
                }
            }
            out
        })
        .collect();
    Synthetic {
        corpus: Corpus::new(documents, vocabulary).expect("ids in range"),
        phi,
        theta,
    }
}

fn categorical(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec, 1);
        let b = generate(&spec, 1);
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.corpus.num_docs(), 200);
        assert_eq!(a.corpus.num_tokens(), 200 * 50);
        assert!(a.corpus.vocabulary().len() <= 100);
        for row in &a.phi {
            let s: f64 = row.iter().sum();
            assert!(s <= 1.0 + 1e-12 && s > 0.99);
        }
        assert_ne!(generate(&spec, 2).corpus, a.corpus);
    }

    #[test]
    fn posts_spell_out_tokens() {
        let spec = SyntheticSpec { docs: 2, doc_len: 3, ..SyntheticSpec::default() };
        let s = generate(&spec, 0);
        let posts = s.posts();
        assert_eq!(posts.len(), 2);
        assert_eq!(posts[0].text.split(' ').count(), 3);
        assert!(posts[0].text.starts_with("topic"));
    }
}
