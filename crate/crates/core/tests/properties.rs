//! Property tests for module invariants, each checked against a
//! brute-force oracle where one exists.

mod common;

use std::collections::{BTreeSet, HashSet};

use common::*;
use poptopic::corpus::{
    build_vocabulary, dedup, encode_tokens, is_retweet, contains_url, normalize, tokenize, QueryFilter, RawPost,
    TokenRules,
};
use poptopic::labeling::{reconcile, suggest, KeywordRules, Taxonomy, TopicLabeling};
use poptopic::report::{combine, distribute, parse_rendered, render, MassMode, RenderFormat, TopicMassVector};
use poptopic::sentiment::{partition, score, Polarity, SentimentLabel};
use poptopic::topicmodel::{fit, read_model, sweep, write_model, LdaConfig, LdaState};
use proptest::prelude::*;

// ----- corpus ---------------------------------------------------------------

proptest! {
    #[test]
    fn normalize_is_idempotent(text in any::<String>()) {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once.clone());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' ') && !once.contains("  "));
    }

    #[test]
    fn normalize_matches_plain_oracle(text in fuzz_text()) {
        prop_assert_eq!(normalize(&text), oracle_normalize(&text));
    }

    #[test]
    fn tokens_respect_rules(text in any::<String>(), min_len in 1usize..4) {
        let rules = TokenRules { min_token_len: min_len, ..TokenRules::default() };
        for token in tokenize(&text, &rules) {
            prop_assert!(token.chars().count() >= min_len);
            let body = token.strip_prefix(['#', '@']).unwrap_or(&token);
            prop_assert!(!body.is_empty() && body.chars().all(char::is_alphanumeric), "{token}");
            prop_assert_eq!(token.to_lowercase(), token.clone());
        }
    }
}

/// Whitespace-separated text built from a clean pool: every word is either a
/// plain word, `@word` or `#word`, so a naive split is a correct tokenizer.
fn clean_text() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec!["bernie", "Bernie", "SANDERS", "sanders", "berniesanders", "feelthebern", "wage", "x"]);
    let prefix = prop::sample::select(vec!["", "", "@", "#"]);
    prop::collection::vec((prefix, word), 0..8)
        .prop_map(|v| v.into_iter().map(|(p, w)| format!("{p}{w}")).collect::<Vec<_>>().join(" "))
}

proptest! {
    #[test]
    fn matches_equals_whitespace_oracle(text in clean_text()) {
        let words: HashSet<String> = text.split_whitespace().map(str::to_lowercase).collect();
        let filters = [
            (QueryFilter::mention("berniesanders").unwrap(), words.contains("@berniesanders")),
            (QueryFilter::hashtag("feelthebern").unwrap(), words.contains("#feelthebern")),
            (QueryFilter::keyword("sanders").unwrap(), words.contains("sanders")),
            (QueryFilter::conjunction(&["bernie", "sanders"]).unwrap(), words.contains("bernie") && words.contains("sanders")),
        ];
        for (filter, expected) in filters {
            prop_assert_eq!(filter.matches(&text), expected, "{} on {:?}", filter, text);
        }
    }

    #[test]
    fn dedup_equals_oracle(texts in prop::collection::vec(fuzz_text(), 0..30)) {
        let posts: Vec<RawPost> = texts.iter().enumerate().map(|(i, t)| RawPost::new(i.to_string(), t.clone())).collect();
        let (kept, stats) = dedup(posts.clone());
        let (expected, (rt, url, dup)) = oracle_dedup(&texts);
        let ids: Vec<usize> = kept.iter().map(|p| p.id.parse().unwrap()).collect();
        prop_assert_eq!(ids, expected);
        prop_assert_eq!((stats.retweet, stats.url, stats.duplicate), (rt, url, dup));
        let normalized: HashSet<String> = kept.iter().map(|p| normalize(&p.text)).collect();
        prop_assert_eq!(normalized.len(), kept.len());
        prop_assert!(kept.iter().all(|p| !is_retweet(&p.text) && !contains_url(&p.text)));
        let (again, stats2) = dedup(kept.clone());
        prop_assert_eq!(again, kept);
        prop_assert_eq!(stats2.total(), 0);
    }

    #[test]
    fn vocabulary_document_frequencies(docs in prop::collection::vec(token_sequence(), 0..15), min_df in 0u32..4) {
        let stop: HashSet<String> = ["ab".to_string()].into();
        let vocab = build_vocabulary(&docs, min_df, &stop);
        let mut first_seen: Vec<&str> = Vec::new();
        for doc in &docs {
            for t in doc {
                if !first_seen.contains(&t.as_str()) {
                    first_seen.push(t);
                }
            }
        }
        let expected: Vec<(&str, u32)> = first_seen
            .into_iter()
            .filter(|t| *t != "ab")
            .map(|t| (t, docs.iter().filter(|d| d.iter().any(|x| x == t)).count() as u32))
            .filter(|(_, df)| *df >= min_df.max(1))
            .collect();
        let got: Vec<(&str, u32)> = (0..vocab.len() as u32).map(|i| (vocab.token(i), vocab.doc_freq(i))).collect();
        prop_assert_eq!(got, expected);
        for (i, t) in vocab.tokens().iter().enumerate() {
            prop_assert_eq!(vocab.id(t), Some(i as u32));
        }
    }

    #[test]
    fn encode_decode_round_trip(docs in prop::collection::vec(token_sequence(), 1..15)) {
        let vocab = build_vocabulary(&docs, 1, &HashSet::new());
        let named: Vec<(String, Vec<String>)> = docs.iter().enumerate().map(|(i, d)| (i.to_string(), d.clone())).collect();
        let encoded = encode_tokens(&named, vocab);
        let non_empty: Vec<&Vec<String>> = docs.iter().filter(|d| !d.is_empty()).collect();
        prop_assert_eq!(encoded.dropped, docs.len() - non_empty.len());
        prop_assert_eq!(encoded.corpus.num_tokens(), non_empty.iter().map(|d| d.len()).sum::<usize>());
        for (doc, original) in encoded.corpus.documents().iter().zip(non_empty) {
            prop_assert_eq!(encoded.corpus.decode(doc), original.iter().map(String::as_str).collect::<Vec<_>>());
        }
    }
}

// ----- sentiment -------------------------------------------------------------

proptest! {
    #[test]
    fn score_equals_brute_force(pats in patterns(), tokens in token_sequence()) {
        let lex = build_lexicon(&pats);
        let result = score(&tokens, &lex);
        let (pos, neg) = oracle_hits(&tokens, &pats);
        prop_assert_eq!((result.pos_hits, result.neg_hits), (pos, neg));
        let label = match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => SentimentLabel::Positive,
            std::cmp::Ordering::Less => SentimentLabel::Negative,
            std::cmp::Ordering::Equal => SentimentLabel::Neutral,
        };
        prop_assert_eq!(result.label, label);
    }

    #[test]
    fn score_ignores_order(pats in patterns(), tokens in token_sequence(), seed in any::<u64>()) {
        let lex = build_lexicon(&pats);
        let mut shuffled = tokens.clone();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % n);
            }
        }
        prop_assert_eq!(score(&tokens, &lex), score(&shuffled, &lex));
    }

    #[test]
    fn positive_only_token_is_monotone(pats in patterns(), tokens in token_sequence()) {
        let mut pats = pats;
        pats.retain(|(k, _, _)| k != "zzz");
        pats.push(("zzz".into(), false, Polarity::Positive));
        let lex = build_lexicon(&pats);
        let before = score(&tokens, &lex);
        let mut more = tokens.clone();
        more.push("zzz".into());
        let after = score(&more, &lex);
        prop_assert_eq!(after.pos_hits, before.pos_hits + 1);
        prop_assert_eq!(after.neg_hits, before.neg_hits);
    }

    #[test]
    fn exact_pattern_wins_over_stem(word in small_word()) {
        let pats = vec![(word.clone(), false, Polarity::Negative), (word[..1].to_string(), true, Polarity::Positive)];
        let lex = build_lexicon(&pats);
        prop_assert_eq!(lex.lookup(&word), Some(Polarity::Negative));
    }

    #[test]
    fn partition_is_exhaustive_and_disjoint(texts in prop::collection::vec(fuzz_text(), 0..20)) {
        let posts: Vec<RawPost> = texts.iter().enumerate().map(|(i, t)| RawPost::new(i.to_string(), t.clone())).collect();
        let parts = partition(posts.clone(), &poptopic::Lexicon::demo(), &TokenRules::default());
        let counts = parts.counts();
        prop_assert_eq!(counts.positive + counts.negative + counts.neutral, posts.len());
        let mut ids: Vec<String> = parts.positive.iter().chain(&parts.negative).chain(&parts.neutral).map(|p| p.id.clone()).collect();
        ids.sort();
        let mut all: Vec<String> = posts.iter().map(|p| p.id.clone()).collect();
        all.sort();
        prop_assert_eq!(ids, all);
    }
}

// ----- labeling --------------------------------------------------------------

fn status_choice() -> impl Strategy<Value = Option<BTreeSet<usize>>> {
    prop_oneof![
        Just(None),
        prop::collection::btree_set(0usize..10, 1..3).prop_map(Some),
    ]
}

fn labeling_from(choices: &[Option<Option<BTreeSet<usize>>>], tax: &Taxonomy) -> TopicLabeling {
    let mut l = TopicLabeling::new(choices.len(), tax);
    for (k, c) in choices.iter().enumerate() {
        match c {
            None => {}
            Some(None) => l.exclude(k, "not economic-related"),
            Some(Some(set)) => l.label(k, set.iter().copied()).unwrap(),
        }
    }
    l
}

fn choices(n: usize) -> impl Strategy<Value = Vec<Option<Option<BTreeSet<usize>>>>> {
    prop::collection::vec(prop::option::of(status_choice()), n)
}

proptest! {
    #[test]
    fn reconcile_conflicts_are_symmetric(a in choices(8), b in choices(8)) {
        let tax = Taxonomy::default();
        let (la, lb) = (labeling_from(&a, &tax), labeling_from(&b, &tax));
        let ab = reconcile(&la, &lb).unwrap();
        let ba = reconcile(&lb, &la).unwrap();
        prop_assert_eq!(&ab.conflicts, &ba.conflicts);
        let brute: Vec<usize> = (0..8).filter(|&k| la.status(k) != lb.status(k)).collect();
        prop_assert_eq!(&ab.conflicts, &brute);
        for k in 0..8 {
            if brute.contains(&k) {
                prop_assert_eq!(ab.merged.status(k), &poptopic::TopicStatus::Unreviewed);
            } else {
                prop_assert_eq!(ab.merged.status(k), la.status(k));
            }
        }
        prop_assert!((ab.agreement_rate - (8 - brute.len()) as f64 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn suggest_is_order_invariant(words in prop::collection::vec(
        prop::sample::select(vec!["wage", "jobs", "tax", "college", "tuition", "debt", "bernie", "banks", "15", "care"]), 0..10),
        seed in any::<u64>())
    {
        let tax = Taxonomy::default();
        let rules = KeywordRules::economic_default(&tax).unwrap();
        let top: Vec<(&str, f64)> = words.iter().map(|w| (*w, 0.1)).collect();
        let mut rev = top.clone();
        rev.rotate_left(seed as usize % top.len().max(1));
        rev.reverse();
        let s = suggest(&top, &rules, &tax);
        prop_assert_eq!(&s, &suggest(&rev, &rules, &tax));
        let allowed: Vec<&str> = rules.labels().map(|i| tax.names()[i].as_str()).collect();
        prop_assert!(s.iter().all(|(label, n)| allowed.contains(&label.as_str()) && *n > 0));
    }
}

// ----- report ----------------------------------------------------------------

fn masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n)
}

proptest! {
    #[test]
    fn distribute_equals_brute_force(w in masses(8), c in choices(8), scale in 0.01f64..100.0) {
        let tax = Taxonomy::default();
        let labeling = labeling_from(&c, &tax);
        let vector = TopicMassVector { weights: w.clone(), mode: MassMode::Uniform };
        let mut brute = vec![0.0; 10];
        for (k, choice) in c.iter().enumerate() {
            if let Some(Some(set)) = choice {
                for &l in set {
                    brute[l] += w[k] / set.len() as f64;
                }
            }
        }
        let total: f64 = brute.iter().sum();
        let result = distribute(&vector, &labeling, &tax, true);
        if total <= 0.0 {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let dist = result.unwrap();
        for (row, m) in dist.rows.iter().zip(&brute) {
            prop_assert!((row.raw - 100.0 * m / total).abs() < 1e-9);
        }
        prop_assert!((dist.rows.iter().map(|r| r.raw).sum::<f64>() - 100.0).abs() < 1e-9);
        // Competition ranks over positive shares.
        for row in &dist.rows {
            if row.raw > 1e-9 {
                let better = dist.rows.iter().filter(|o| o.raw > row.raw * (1.0 + 1e-9) + 1e-12).count();
                prop_assert_eq!(row.rank, Some(better + 1));
            } else {
                prop_assert_eq!(row.rank, None);
            }
        }
        // Scaling all masses changes nothing.
        let scaled = TopicMassVector { weights: w.iter().map(|x| x * scale).collect(), mode: MassMode::Uniform };
        let again = distribute(&scaled, &labeling, &tax, true).unwrap();
        for (a, b) in dist.rows.iter().zip(&again.rows) {
            prop_assert!((a.raw - b.raw).abs() < 1e-9);
            prop_assert_eq!(a.rank, b.rank);
        }
        if c.iter().any(Option::is_none) {
            prop_assert!(distribute(&vector, &labeling, &tax, false).is_err());
        }
    }

    #[test]
    fn combine_preserves_total(w in masses(10), a in 0usize..10, b in 0usize..10) {
        prop_assume!(a != b && w.iter().sum::<f64>() > 0.0);
        let tax = Taxonomy::default();
        let mut labeling = TopicLabeling::new(10, &tax);
        for k in 0..10 {
            labeling.label(k, [k]).unwrap();
        }
        let dist = distribute(&TopicMassVector { weights: w, mode: MassMode::Uniform }, &labeling, &tax, false).unwrap();
        let names = tax.names();
        let merged = combine(&dist, &[&names[a], &names[b]], "Merged").unwrap();
        prop_assert_eq!(merged.rows.len(), 9);
        let expected = dist.rows[a].raw + dist.rows[b].raw;
        prop_assert!((merged.get("Merged").unwrap().raw - expected).abs() < 1e-9);
        prop_assert!((merged.rows.iter().map(|r| r.raw).sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn render_parse_round_trip(w in masses(10)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let tax = Taxonomy::default();
        let mut labeling = TopicLabeling::new(10, &tax);
        for k in 0..10 {
            labeling.label(k, [k]).unwrap();
        }
        let dist = distribute(&TopicMassVector { weights: w, mode: MassMode::Uniform }, &labeling, &tax, false).unwrap();
        let expected: Vec<(String, f64, Option<usize>)> =
            dist.display_order().iter().map(|r| (r.label.clone(), r.percent, r.rank)).collect();
        for format in [RenderFormat::Delimited, RenderFormat::Records] {
            let rows = parse_rendered(&render(&dist, format), format).unwrap();
            let got: Vec<(String, f64, Option<usize>)> = rows.into_iter().map(|r| (r.label, r.percent, r.rank)).collect();
            prop_assert_eq!(&got, &expected);
        }
    }
}

// ----- topic model -----------------------------------------------------------

fn small_corpus() -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0u32..6, 1..8), 1..6)
}

fn to_corpus(docs: &[Vec<u32>]) -> poptopic::Corpus {
    let vocab = poptopic::Vocabulary::from_entries((0..6).map(|i| (format!("w{i}"), 1))).unwrap();
    let docs = docs
        .iter()
        .enumerate()
        .map(|(i, d)| poptopic::Document { post_id: format!("d{i}"), tokens: d.clone() })
        .collect();
    poptopic::Corpus::new(docs, vocab).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweeps_keep_counts_consistent(docs in small_corpus(), k in 1usize..5, seed in any::<u64>()) {
        let corpus = to_corpus(&docs);
        let cfg = LdaConfig { sweeps: 3, seed, ..LdaConfig::new(k) };
        let mut state = LdaState::init(&corpus, &cfg).unwrap();
        for _ in 0..3 {
            sweep(&mut state, &corpus, &cfg);
            prop_assert!(state.is_consistent(&corpus));
        }
        let (_, model) = fit(&corpus, &cfg).unwrap();
        for t in 0..k {
            prop_assert!((model.phi(t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for d in 0..corpus.num_docs() {
            prop_assert!((model.theta(d).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn model_file_round_trips(docs in small_corpus(), k in 1usize..4, seed in any::<u64>()) {
        let corpus = to_corpus(&docs);
        let cfg = LdaConfig { sweeps: 5, seed, ..LdaConfig::new(k) };
        let (mut state, _) = fit(&corpus, &cfg).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &state, &cfg, &corpus).unwrap();
        let mut saved = read_model(buf.as_slice(), corpus.vocabulary().clone()).unwrap();
        prop_assert_eq!(&saved.config, &cfg);
        prop_assert_eq!(saved.state.assignments(), state.assignments());
        // The restored chain continues exactly where the original left off.
        sweep(&mut state, &corpus, &cfg);
        sweep(&mut saved.state, &saved.corpus, &cfg);
        prop_assert_eq!(saved.state.assignments(), state.assignments());
    }
}
