//! LDA with a collapsed Gibbs sampler, smoothed point estimates, a
//! left-to-right held-out likelihood estimator and topic-count selection.

mod estimate;
mod heldout;
mod persist;
mod sampler;

pub use estimate::{estimate, TopicModel};
pub use heldout::{left_to_right, select_k, HeldOutEstimate, Selection};
pub use persist::{read_model, write_model, write_top_words, SavedModel};
pub use sampler::{fit, sweep, LdaState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopicModelError {
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("topic {topic} out of range for {topics} topics")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("held-out set is empty after dropping out-of-vocabulary tokens")]
    EmptyHeldOut,
    #[error("corpus and model disagree: {0}")]
    Mismatch(String),
    #[error("model file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sampler and evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric per-topic document concentration.
    pub alpha: f64,
    /// Symmetric per-word topic concentration.
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
    pub holdout_fraction: f64,
    pub particles: usize,
}

/// Total document-topic concentration used by [`LdaConfig::new`].
pub const DEFAULT_ALPHA_SUM: f64 = 5.0;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_SWEEPS: usize = 1000;

impl LdaConfig {
    /// Defaults: `alpha = 5 / topics`, `beta = 0.01`, 1000 sweeps, seed 0,
    /// 10% held out, 10 particles.
    pub fn new(topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: DEFAULT_ALPHA_SUM / topics.max(1) as f64,
            beta: DEFAULT_BETA,
            sweeps: DEFAULT_SWEEPS,
            seed: 0,
            holdout_fraction: 0.1,
            particles: 10,
        }
    }

    /// Same settings with a different topic count; the total concentration
    /// `alpha * topics` is held fixed.
    pub fn with_topics(&self, topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: self.alpha * self.topics as f64 / topics.max(1) as f64,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), TopicModelError> {
        let bad = |m: &str| Err(TopicModelError::InvalidConfig(m.to_string()));
        if self.topics < 1 {
            return bad("topics must be at least 1");
        }
        if self.topics > u32::MAX as usize {
            return bad("too many topics");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.sweeps < 1 {
            return bad("sweeps must be at least 1");
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad("holdout_fraction must lie in (0, 1)");
        }
        if self.particles < 1 {
            return bad("particles must be at least 1");
        }
        Ok(())
    }
}

/// Draw an index with probability proportional to `cumulative[i] -
/// cumulative[i - 1]`, given a uniform draw `u` in `[0, 1)`.
fn pick(cumulative: &[f64], u: f64) -> usize {
    let target = u * cumulative[cumulative.len() - 1];
    cumulative
        .iter()
        .position(|&c| c > target)
        .unwrap_or(cumulative.len() - 1)
}

#[cfg(test)]
pub(crate) fn toy_corpus(docs: &[&[u32]], vocab: usize) -> crate::corpus::Corpus {
    use crate::corpus::{Corpus, Document, Vocabulary};
    let vocabulary = Vocabulary::from_entries((0..vocab).map(|i| (format!("w{i}"), 1))).unwrap();
    let documents = docs
        .iter()
        .enumerate()
        .map(|(i, d)| Document {
            post_id: i.to_string(),
            tokens: d.to_vec(),
        })
        .collect();
    Corpus::new(documents, vocabulary).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = LdaConfig::new(4);
        assert_eq!(c.alpha, 1.25);
        assert_eq!(c.beta, 0.01);
        assert_eq!(c.sweeps, 1000);
        assert!(c.validate().is_ok());
        assert_eq!(c.with_topics(10).alpha, 0.5);
    }

    #[test]
    fn invalid_configs() {
        let base = LdaConfig::new(2);
        for bad in [
            LdaConfig { topics: 0, ..base.clone() },
            LdaConfig { alpha: 0.0, ..base.clone() },
            LdaConfig { beta: -1.0, ..base.clone() },
            LdaConfig { sweeps: 0, ..base.clone() },
            LdaConfig { holdout_fraction: 1.0, ..base.clone() },
            LdaConfig { particles: 0, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn pick_follows_cumulative_mass() {
        let cum = [1.0, 1.0, 3.0];
        assert_eq!(pick(&cum, 0.0), 0);
        assert_eq!(pick(&cum, 0.34), 2);
        assert_eq!(pick(&cum, 0.999_999), 2);
    }
}
