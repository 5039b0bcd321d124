use serde::{Deserialize, Serialize};

use super::{LdaConfig, LdaState, TopicModelError};
use crate::corpus::Vocabulary;

/// Smoothed topic-word (`phi`, K x V) and document-topic (`theta`, D x K)
/// estimates, both row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    topics: usize,
    vocab_size: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    doc_lengths: Vec<usize>,
    config: LdaConfig,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn phi(&self, k: usize) -> &[f64] {
        &self.phi[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn theta(&self, d: usize) -> &[f64] {
        &self.theta[d * self.topics..(d + 1) * self.topics]
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.doc_lengths[d]
    }

    /// The `n` most probable word ids of topic `k`, ties broken by lower id.
    pub fn top_words(&self, k: usize, n: usize) -> Result<Vec<(u32, f64)>, TopicModelError> {
        if k >= self.topics {
            return Err(TopicModelError::TopicOutOfRange {
                topic: k,
                topics: self.topics,
            });
        }
        let row = self.phi(k);
        let mut ids: Vec<u32> = (0..self.vocab_size as u32).collect();
        ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n.min(self.vocab_size));
        Ok(ids.into_iter().map(|w| (w, row[w as usize])).collect())
    }

    /// [`TopicModel::top_words`] with ids resolved through `vocabulary`.
    pub fn top_tokens(
        &self,
        vocabulary: &Vocabulary,
        k: usize,
        n: usize,
    ) -> Result<Vec<(String, f64)>, TopicModelError> {
        if vocabulary.len() != self.vocab_size {
            return Err(TopicModelError::Mismatch(format!(
                "vocabulary has {} tokens, model has {}",
                vocabulary.len(),
                self.vocab_size
            )));
        }
        Ok(self
            .top_words(k, n)?
            .into_iter()
            .map(|(w, p)| (vocabulary.token(w).to_string(), p))
            .collect())
    }
}

/// `phi[k][w] = (n_kw + beta) / (n_k + V beta)` and
/// `theta[d][k] = (n_dk + alpha) / (|d| + K alpha)`.
pub fn estimate(state: &LdaState, config: &LdaConfig) -> TopicModel {
    let topics = state.topics();
    let vocab_size = state.vocab_size();
    let (alpha, beta) = (config.alpha, config.beta);

    let mut phi = vec![0.0; topics * vocab_size];
    for k in 0..topics {
        let denom = state.n_k(k) as f64 + vocab_size as f64 * beta;
        for w in 0..vocab_size {
            phi[k * vocab_size + w] = (state.n_kw(k, w) as f64 + beta) / denom;
        }
    }

    let docs = state.num_docs();
    let mut theta = vec![0.0; docs * topics];
    let mut doc_lengths = Vec::with_capacity(docs);
    for d in 0..docs {
        let len = state.doc_len(d);
        doc_lengths.push(len);
        let denom = len as f64 + topics as f64 * alpha;
        for k in 0..topics {
            theta[d * topics + k] = (state.n_dk(d, k) as f64 + alpha) / denom;
        }
    }

    TopicModel {
        topics,
        vocab_size,
        phi,
        theta,
        doc_lengths,
        config: LdaConfig {
            topics,
            ..config.clone()
        },
    }
}

impl TopicModel {
    /// Build directly from probability tables. Rows are not renormalized.
    pub fn from_parts(
        topics: usize,
        vocab_size: usize,
        phi: Vec<f64>,
        theta: Vec<f64>,
        doc_lengths: Vec<usize>,
        config: LdaConfig,
    ) -> Result<Self, TopicModelError> {
        if phi.len() != topics * vocab_size || theta.len() != doc_lengths.len() * topics {
            return Err(TopicModelError::Mismatch("table shapes do not match dimensions".into()));
        }
        Ok(TopicModel {
            topics,
            vocab_size,
            phi,
            theta,
            doc_lengths,
            config,
        })
    }
}
