use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{estimate, pick, LdaConfig, TopicModel, TopicModelError};
use crate::corpus::Corpus;

/// Token topic assignments plus the count tables they induce.
///
/// Topic-word counts are stored word-major (`w * K + k`) so the sampler's
/// inner loop over topics reads contiguous memory.
#[derive(Debug, Clone)]
pub struct LdaState {
    topics: usize,
    vocab_size: usize,
    assignments: Vec<Vec<u32>>,
    doc_lengths: Vec<usize>,
    doc_topic: Vec<u32>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
}

impl PartialEq for LdaState {
    fn eq(&self, other: &Self) -> bool {
        self.topics == other.topics
            && self.vocab_size == other.vocab_size
            && self.assignments == other.assignments
            && self.doc_topic == other.doc_topic
            && self.word_topic == other.word_topic
            && self.topic_totals == other.topic_totals
            && self.rng == other.rng
    }
}

impl LdaState {
    /// Uniform random initial assignments drawn from `config.seed`.
    pub fn init(corpus: &Corpus, config: &LdaConfig) -> Result<Self, TopicModelError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(TopicModelError::EmptyCorpus);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = config.topics as u32;
        let assignments = corpus
            .documents()
            .iter()
            .map(|d| d.tokens.iter().map(|_| rng.random_range(0..k)).collect())
            .collect();
        Self::from_assignments(corpus, config.topics, assignments, rng)
    }

    /// Rebuild counts from explicit assignments.
    pub fn from_assignments(
        corpus: &Corpus,
        topics: usize,
        assignments: Vec<Vec<u32>>,
        rng: ChaCha8Rng,
    ) -> Result<Self, TopicModelError> {
        if assignments.len() != corpus.num_docs() {
            return Err(TopicModelError::Mismatch(format!(
                "{} assignment rows for {} documents",
                assignments.len(),
                corpus.num_docs()
            )));
        }
        let vocab_size = corpus.vocabulary().len();
        let mut state = LdaState {
            topics,
            vocab_size,
            doc_lengths: corpus.documents().iter().map(|d| d.len()).collect(),
            assignments,
            doc_topic: vec![0; corpus.num_docs() * topics],
            word_topic: vec![0; vocab_size * topics],
            topic_totals: vec![0; topics],
            rng,
            scratch: vec![0.0; topics],
        };
        for (d, doc) in corpus.documents().iter().enumerate() {
            let z = &state.assignments[d];
            if z.len() != doc.len() {
                return Err(TopicModelError::Mismatch(format!(
                    "document {d} has {} tokens but {} assignments",
                    doc.len(),
                    z.len()
                )));
            }
            for (&w, &t) in doc.tokens.iter().zip(z) {
                let t = t as usize;
                if t >= topics {
                    return Err(TopicModelError::TopicOutOfRange { topic: t, topics });
                }
                state.doc_topic[d * topics + t] += 1;
                state.word_topic[w as usize * topics + t] += 1;
                state.topic_totals[t] += 1;
            }
        }
        Ok(state)
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.doc_lengths[d]
    }

    pub fn n_dk(&self, d: usize, k: usize) -> u32 {
        self.doc_topic[d * self.topics + k]
    }

    pub fn n_kw(&self, k: usize, w: usize) -> u32 {
        self.word_topic[w * self.topics + k]
    }

    pub fn n_k(&self, k: usize) -> u32 {
        self.topic_totals[k]
    }

    /// Counts of topic `k..K` for word `w`.
    pub(crate) fn word_row(&self, w: usize) -> &[u32] {
        &self.word_topic[w * self.topics..(w + 1) * self.topics]
    }

    pub(crate) fn topic_totals(&self) -> &[u32] {
        &self.topic_totals
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Recount the tables from the assignments and compare.
    pub fn is_consistent(&self, corpus: &Corpus) -> bool {
        match Self::from_assignments(corpus, self.topics, self.assignments.clone(), self.rng.clone()) {
            Ok(fresh) => {
                fresh.doc_topic == self.doc_topic
                    && fresh.word_topic == self.word_topic
                    && fresh.topic_totals == self.topic_totals
            }
            Err(_) => false,
        }
    }

    /// One Gibbs pass: every token resampled once, documents in order and
    /// positions in order within each document.
    pub fn sweep(&mut self, corpus: &Corpus, alpha: f64, beta: f64) {
        let k_count = self.topics;
        let v_beta = self.vocab_size as f64 * beta;
        let LdaState {
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            rng,
            scratch,
            ..
        } = self;
        for (d, doc) in corpus.documents().iter().enumerate() {
            let dt = &mut doc_topic[d * k_count..(d + 1) * k_count];
            let z = &mut assignments[d];
            for (pos, &w) in doc.tokens.iter().enumerate() {
                let row = &mut word_topic[w as usize * k_count..(w as usize + 1) * k_count];
                let old = z[pos] as usize;
                dt[old] -= 1;
                row[old] -= 1;
                topic_totals[old] -= 1;

                let mut total = 0.0;
                for k in 0..k_count {
                    total += (dt[k] as f64 + alpha) * (row[k] as f64 + beta)
                        / (topic_totals[k] as f64 + v_beta);
                    scratch[k] = total;
                }
                let new = pick(scratch, rng.random::<f64>());

                dt[new] += 1;
                row[new] += 1;
                topic_totals[new] += 1;
                z[pos] = new as u32;
            }
        }
    }
}

/// One Gibbs pass with the configured hyperparameters.
pub fn sweep(state: &mut LdaState, corpus: &Corpus, config: &LdaConfig) {
    state.sweep(corpus, config.alpha, config.beta);
}

/// Initialize, run `config.sweeps` passes and return the final state with its
/// point estimates.
pub fn fit(corpus: &Corpus, config: &LdaConfig) -> Result<(LdaState, TopicModel), TopicModelError> {
    let mut state = LdaState::init(corpus, config)?;
    for _ in 0..config.sweeps {
        state.sweep(corpus, config.alpha, config.beta);
    }
    let model = estimate(&state, config);
    Ok((state, model))
}
