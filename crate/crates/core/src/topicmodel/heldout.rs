use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit, pick, LdaConfig, LdaState, TopicModelError};
use crate::corpus::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldOutEstimate {
    pub total_loglik: f64,
    pub token_count: usize,
    pub per_token_loglik: f64,
    pub particles: usize,
}

/// Left-to-right estimate of the held-out log-likelihood.
///
/// Topic-word probabilities come from the frozen training counts. For each
/// position, every particle first resamples its assignments for the earlier
/// positions in order, then contributes `sum_k theta_k phi_k(w_n)` with
/// `theta` from its own partial counts, then samples an assignment for the
/// current position. The position's probability is the particle average.
pub fn left_to_right(
    state: &LdaState,
    config: &LdaConfig,
    heldout: &Corpus,
    particles: usize,
    seed: u64,
) -> Result<HeldOutEstimate, TopicModelError> {
    if heldout.num_tokens() == 0 {
        return Err(TopicModelError::EmptyHeldOut);
    }
    if heldout.vocabulary().len() != state.vocab_size() {
        return Err(TopicModelError::Mismatch(format!(
            "held-out vocabulary has {} tokens, training has {}",
            heldout.vocabulary().len(),
            state.vocab_size()
        )));
    }
    if particles < 1 {
        return Err(TopicModelError::InvalidConfig("particles must be at least 1".into()));
    }
    let topics = state.topics();
    let alpha = config.alpha;
    let v_beta = state.vocab_size() as f64 * config.beta;
    let k_alpha = topics as f64 * alpha;
    let denoms: Vec<f64> = state.topic_totals().iter().map(|&n| n as f64 + v_beta).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut cumulative = vec![0.0; topics];
    for doc in heldout.documents() {
        let len = doc.len();
        // phi_k(w_n) for every position, position-major.
        let mut phi = Vec::with_capacity(len * topics);
        for &w in &doc.tokens {
            let row = state.word_row(w as usize);
            phi.extend((0..topics).map(|k| (row[k] as f64 + config.beta) / denoms[k]));
        }
        let mut z = vec![0usize; particles * len];
        let mut counts = vec![0u32; particles * topics];

        for n in 0..len {
            let here = &phi[n * topics..(n + 1) * topics];
            let mut p_n = 0.0;
            for r in 0..particles {
                let zr = &mut z[r * len..(r + 1) * len];
                let cr = &mut counts[r * topics..(r + 1) * topics];
                for m in 0..n {
                    cr[zr[m]] -= 1;
                    let at = &phi[m * topics..(m + 1) * topics];
                    zr[m] = draw(cr, at, alpha, &mut cumulative, &mut rng);
                    cr[zr[m]] += 1;
                }
                let mut p = 0.0;
                for k in 0..topics {
                    p += (cr[k] as f64 + alpha) * here[k];
                }
                p_n += p / (n as f64 + k_alpha);
                zr[n] = draw(cr, here, alpha, &mut cumulative, &mut rng);
                cr[zr[n]] += 1;
            }
            total += (p_n / particles as f64).ln();
        }
    }
    let token_count = heldout.num_tokens();
    Ok(HeldOutEstimate {
        total_loglik: total,
        token_count,
        per_token_loglik: total / token_count as f64,
        particles,
    })
}

fn draw(counts: &[u32], phi: &[f64], alpha: f64, cumulative: &mut [f64], rng: &mut ChaCha8Rng) -> usize {
    let mut acc = 0.0;
    for k in 0..counts.len() {
        acc += (counts[k] as f64 + alpha) * phi[k];
        cumulative[k] = acc;
    }
    pick(cumulative, rng.random::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: usize,
    pub table: Vec<(usize, HeldOutEstimate)>,
    pub train_docs: usize,
    pub heldout_docs: usize,
}

/// Fit one model per grid value on a seeded training split and pick the
/// topic count with the best held-out per-token log-likelihood; ties go to
/// the smaller count. Each grid value keeps the total concentration
/// `alpha * topics` of `config`.
pub fn select_k(corpus: &Corpus, k_grid: &[usize], config: &LdaConfig) -> Result<Selection, TopicModelError> {
    config.validate()?;
    if k_grid.is_empty() {
        return Err(TopicModelError::InvalidConfig("k_grid is empty".into()));
    }
    if k_grid.windows(2).any(|w| w[0] >= w[1]) || k_grid[0] < 1 {
        return Err(TopicModelError::InvalidConfig(
            "k_grid must be strictly ascending positive integers".into(),
        ));
    }
    if corpus.num_docs() < 2 {
        return Err(TopicModelError::EmptyHeldOut);
    }
    let (train, held) = split(corpus, config.holdout_fraction, config.seed);
    if held.num_tokens() == 0 {
        return Err(TopicModelError::EmptyHeldOut);
    }

    let mut table = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let cfg = config.with_topics(k);
        let (state, _) = fit(&train, &cfg)?;
        let est = left_to_right(&state, &cfg, &held, cfg.particles, cfg.seed)?;
        table.push((k, est));
    }
    let mut chosen = table[0];
    for entry in &table[1..] {
        if entry.1.per_token_loglik > chosen.1.per_token_loglik {
            chosen = *entry;
        }
    }
    Ok(Selection {
        chosen: chosen.0,
        table,
        train_docs: train.num_docs(),
        heldout_docs: held.num_docs(),
    })
}

/// Seeded shuffle, then the first `round(D * fraction)` documents (at least
/// one, at most D - 1) are held out.
fn split(corpus: &Corpus, fraction: f64, seed: u64) -> (Corpus, Corpus) {
    let docs = corpus.num_docs();
    let mut order: Vec<usize> = (0..docs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    order.shuffle(&mut rng);
    let held = ((docs as f64 * fraction).round() as usize).clamp(1, docs - 1);
    let held: HashSet<usize> = order[..held].iter().copied().collect();
    corpus.split_by(&held)
}
