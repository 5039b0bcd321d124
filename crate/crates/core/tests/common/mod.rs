//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use poptopic::corpus::{Corpus, Document, Vocabulary};
use poptopic::synth::{generate, SyntheticSpec};
use poptopic::topicmodel::{fit, left_to_right, select_k, sweep, LdaConfig, LdaState};

pub const TINY_DOCS: [&[u32]; 3] = [&[0, 1, 0], &[2, 3, 2], &[0, 3]];

pub fn tiny_corpus() -> Corpus {
    let vocab = Vocabulary::from_entries((0..4).map(|i| (format!("w{i}"), 1))).unwrap();
    let docs = TINY_DOCS
        .iter()
        .enumerate()
        .map(|(i, d)| Document { post_id: i.to_string(), tokens: d.to_vec() })
        .collect();
    Corpus::new(docs, vocab).unwrap()
}

/// ln of x (x+1) ... (x+n-1).
fn ln_rising(x: f64, n: u32) -> f64 {
    (0..n).map(|i| (x + i as f64).ln()).sum()
}

/// Exact collapsed posterior over all K^N assignments, indexed with token
/// `i` (flattened document order) as base-K digit `i`.
pub fn exact_posterior(docs: &[&[u32]], vocab: usize, k: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let words: Vec<u32> = docs.iter().flat_map(|d| d.iter().copied()).collect();
    let n = words.len();
    let states = k.pow(n as u32);
    let mut logp = Vec::with_capacity(states);
    for s in 0..states {
        let z: Vec<usize> = (0..n).map(|i| (s / k.pow(i as u32)) % k).collect();
        let mut lp = 0.0;
        let mut offset = 0;
        for d in docs {
            let mut ndk = vec![0u32; k];
            for i in 0..d.len() {
                ndk[z[offset + i]] += 1;
            }
            offset += d.len();
            lp += ndk.iter().map(|&c| ln_rising(alpha, c)).sum::<f64>() - ln_rising(k as f64 * alpha, d.len() as u32);
        }
        let mut nkw = vec![0u32; k * vocab];
        let mut nk = vec![0u32; k];
        for i in 0..n {
            nkw[z[i] * vocab + words[i] as usize] += 1;
            nk[z[i]] += 1;
        }
        lp += nkw.iter().map(|&c| ln_rising(beta, c)).sum::<f64>();
        lp -= nk.iter().map(|&c| ln_rising(vocab as f64 * beta, c)).sum::<f64>();
        logp.push(lp);
    }
    let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm: f64 = logp.iter().map(|l| (l - max).exp()).sum();
    logp.iter().map(|l| (l - max).exp() / norm).collect()
}

pub fn state_index(state: &LdaState, k: usize) -> usize {
    state
        .assignments()
        .iter()
        .flatten()
        .enumerate()
        .map(|(i, &t)| t as usize * k.pow(i as u32))
        .sum()
}

/// Total-variation distance between the chain's empirical assignment
/// distribution and the enumerated posterior.
pub fn tiny_posterior_tv(samples: usize, seed: u64) -> f64 {
    let corpus = tiny_corpus();
    let cfg = LdaConfig { alpha: 0.5, beta: 0.5, sweeps: 100, seed, ..LdaConfig::new(2) };
    let exact = exact_posterior(&TINY_DOCS, 4, 2, 0.5, 0.5);
    let (mut state, _) = fit(&corpus, &cfg).unwrap();
    let mut hist = vec![0usize; exact.len()];
    for _ in 0..samples {
        sweep(&mut state, &corpus, &cfg);
        hist[state_index(&state, 2)] += 1;
    }
    0.5 * hist
        .iter()
        .zip(&exact)
        .map(|(&h, &p)| (h as f64 / samples as f64 - p).abs())
        .sum::<f64>()
}

/// Exact held-out log marginal of each document given frozen phi:
/// sum over all topic sequences of prod phi times the Dirichlet-multinomial
/// prior of the sequence.
pub fn exact_heldout_loglik(phi: &[Vec<f64>], docs: &[Vec<u32>], alpha: f64) -> f64 {
    let k = phi.len();
    docs.iter()
        .map(|doc| {
            let n = doc.len();
            let mut total = 0.0;
            for s in 0..k.pow(n as u32) {
                let mut counts = vec![0u32; k];
                let mut p = 1.0;
                for (i, &w) in doc.iter().enumerate() {
                    let t = (s / k.pow(i as u32)) % k;
                    p *= (counts[t] as f64 + alpha) / (i as f64 + k as f64 * alpha) * phi[t][w as usize];
                    counts[t] += 1;
                }
                total += p;
            }
            total.ln()
        })
        .sum()
}

/// Mean cosine between true and fitted topics under the best permutation.
pub fn best_permutation_cosine(truth: &[Vec<f64>], fitted: &[Vec<f64>]) -> f64 {
    fn cos(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }
    fn permute(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                permute(n, prefix, out);
                prefix.pop();
            }
        }
    }
    let k = truth.len();
    let mut perms = Vec::new();
    permute(k, &mut Vec::new(), &mut perms);
    perms
        .iter()
        .map(|p| (0..k).map(|i| cos(&truth[i], &fitted[p[i]])).sum::<f64>() / k as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn recovery_cosine(seed: u64) -> f64 {
    let syn = generate(&SyntheticSpec::default(), seed);
    let cfg = LdaConfig { seed, ..LdaConfig::new(5) };
    let (_, model) = fit(&syn.corpus, &cfg).unwrap();
    let fitted: Vec<Vec<f64>> = (0..5).map(|k| model.phi(k).to_vec()).collect();
    best_permutation_cosine(&syn.phi, &fitted)
}

/// Left-to-right estimate (R particles) and the enumerated exact held-out
/// marginal, both per token, for two held-out documents on the tiny corpus.
pub fn tiny_heldout(particles: usize, seed: u64) -> (f64, f64) {
    let corpus = tiny_corpus();
    let cfg = LdaConfig { alpha: 0.5, beta: 0.5, sweeps: 50, seed: 2, ..LdaConfig::new(2) };
    let (state, model) = fit(&corpus, &cfg).unwrap();
    let held_docs = vec![vec![0u32, 1, 3, 0], vec![2, 2, 3]];
    let held = Corpus::new(
        held_docs
            .iter()
            .enumerate()
            .map(|(i, d)| Document { post_id: format!("h{i}"), tokens: d.clone() })
            .collect(),
        corpus.vocabulary().clone(),
    )
    .unwrap();
    let phi: Vec<Vec<f64>> = (0..2).map(|k| model.phi(k).to_vec()).collect();
    let exact = exact_heldout_loglik(&phi, &held_docs, 0.5) / 7.0;
    let est = left_to_right(&state, &cfg, &held, particles, seed).unwrap();
    (est.per_token_loglik, exact)
}

/// Whether `select_k` over {2, 5, 20} picks 5 on the planted generator.
pub fn select_k_picks_five(seed: u64) -> bool {
    let syn = generate(&SyntheticSpec::default(), 1000 + seed);
    let cfg = LdaConfig { seed, ..LdaConfig::new(5) };
    select_k(&syn.corpus, &[2, 5, 20], &cfg).unwrap().chosen == 5
}

// ---------------------------------------------------------------------------
// Brute-force oracles and fuzz strategies for the text stages.

use poptopic::sentiment::{Lexicon, Polarity};
use proptest::prelude::*;

/// Lexicon patterns as `(key, is_stem, polarity)`.
pub type Patterns = Vec<(String, bool, Polarity)>;

/// Polarity by brute force: an exact pattern equal to the token, otherwise
/// the longest stem that prefixes it.
pub fn oracle_polarity(token: &str, patterns: &Patterns) -> Option<Polarity> {
    if let Some((_, _, p)) = patterns.iter().find(|(k, stem, _)| !stem && k == token) {
        return Some(*p);
    }
    patterns
        .iter()
        .filter(|(k, stem, _)| *stem && token.starts_with(k.as_str()))
        .max_by_key(|(k, _, _)| k.len())
        .map(|(_, _, p)| *p)
}

pub fn oracle_hits(tokens: &[String], patterns: &Patterns) -> (usize, usize) {
    let hits: Vec<_> = tokens.iter().filter_map(|t| oracle_polarity(t, patterns)).collect();
    let pos = hits.iter().filter(|p| **p == Polarity::Positive).count();
    (pos, hits.len() - pos)
}

pub fn build_lexicon(patterns: &Patterns) -> Lexicon {
    let mut lex = Lexicon::default();
    for (i, (k, stem, p)) in patterns.iter().enumerate() {
        let pattern = if *stem { format!("{k}*") } else { k.clone() };
        lex.insert(&pattern, *p, i + 1).unwrap();
    }
    lex
}

fn polarity() -> impl Strategy<Value = Polarity> {
    prop_oneof![Just(Polarity::Positive), Just(Polarity::Negative)]
}

/// Short words over a three-letter alphabet, so exact and stem patterns
/// overlap often.
pub fn small_word() -> impl Strategy<Value = String> {
    "[abc]{1,4}"
}

/// Conflict-free patterns: each (key, kind) appears once.
pub fn patterns() -> impl Strategy<Value = Patterns> {
    prop::collection::btree_map((small_word(), any::<bool>()), polarity(), 0..12)
        .prop_map(|m| m.into_iter().map(|((k, s), p)| (k, s, p)).collect())
}

pub fn token_sequence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(small_word(), 0..20)
}

/// Text fragments that exercise retweet markers, URLs, case, spacing and
/// non-ASCII letters.
const PIECES: &[&str] = &[
    "RT", "rt", "Rt", "@", "#", "bernie", "Bernie", "SANDERS", "wage", "http://x.org", "https://t.co/q",
    "t.co/", "HTTP://", "http:/", " ", "  ", "\t", "\n", "é", "É", "a", "B", "!", ".", ":", "15",
];

pub fn fuzz_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(PIECES), 0..12).prop_map(|v| v.concat())
}

/// Plain normalization oracle for the fuzz alphabet (already NFC).
pub fn oracle_normalize(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Expected dedup result: kept indices and (retweet, url, duplicate) counts.
pub fn oracle_dedup(texts: &[String]) -> (Vec<usize>, (usize, usize, usize)) {
    let mut kept = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    let (mut rt, mut url, mut dup) = (0, 0, 0);
    for (i, t) in texts.iter().enumerate() {
        let n = oracle_normalize(t);
        if n.starts_with("rt @") {
            rt += 1;
        } else if ["http://", "https://", "t.co/"].iter().any(|m| n.contains(m)) {
            url += 1;
        } else if seen.contains(&n) {
            dup += 1;
        } else {
            seen.push(n);
            kept.push(i);
        }
    }
    (kept, (rt, url, dup))
}
