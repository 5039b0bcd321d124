//! Python bindings: text normalization and filtering, lexicon sentiment,
//! LDA fitting and topic-count selection, and label distributions.

use std::collections::HashSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::poptopic::corpus::{self, build_vocabulary, encode_tokens, QueryFilter, RawPost, TokenRules};
use ::poptopic::labeling::{Taxonomy, TopicLabeling};
use ::poptopic::report::{self, LabelDistribution, MassMode, RenderFormat, TopicMassVector};
use ::poptopic::sentiment::{self, Polarity, SentimentLabel};
use ::poptopic::topicmodel::{self, LdaConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rules(lowercase: bool, keep_prefixes: &str, min_token_len: usize, strip_urls: bool) -> PyResult<TokenRules> {
    let rules = TokenRules {
        lowercase,
        keep_prefixes: keep_prefixes.chars().collect(),
        min_token_len,
        strip_urls,
    };
    rules.validate().map_err(value_error)?;
    Ok(rules)
}

/// NFC, lowercase, collapse whitespace.
#[pyfunction]
fn normalize(text: &str) -> String {
    corpus::normalize(text)
}

#[pyfunction]
#[pyo3(signature = (text, lowercase = true, keep_prefixes = "#@", min_token_len = 2, strip_urls = true))]
fn tokenize(text: &str, lowercase: bool, keep_prefixes: &str, min_token_len: usize, strip_urls: bool) -> PyResult<Vec<String>> {
    Ok(corpus::tokenize(text, &rules(lowercase, keep_prefixes, min_token_len, strip_urls)?))
}

/// Match `text` against a query such as `@name`, `#tag`, `word` or `a AND b`.
#[pyfunction]
fn matches(text: &str, query: &str) -> PyResult<bool> {
    Ok(QueryFilter::parse(query).map_err(value_error)?.matches(text))
}

/// Drop retweets, URL posts and duplicates from `(id, text)` pairs. Returns
/// the kept pairs and removal counts by reason.
#[pyfunction]
fn dedup(posts: Vec<(String, String)>) -> (Vec<(String, String)>, (usize, usize, usize)) {
    let (kept, stats) = corpus::dedup(posts.into_iter().map(|(id, text)| RawPost::new(id, text)));
    (
        kept.into_iter().map(|p| (p.id, p.text)).collect(),
        (stats.retweet, stats.url, stats.duplicate),
    )
}

fn label_name(label: SentimentLabel) -> &'static str {
    match label {
        SentimentLabel::Positive => "positive",
        SentimentLabel::Negative => "negative",
        SentimentLabel::Neutral => "neutral",
    }
}

#[pyclass(name = "Lexicon", module = "poptopic")]
struct PyLexicon {
    inner: sentiment::Lexicon,
}

#[pymethods]
impl PyLexicon {
    /// Parse `pattern<TAB>positive|negative` lines.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: sentiment::load_lexicon(text.as_bytes()).map_err(value_error)?,
        })
    }

    /// The bundled 64-entry demo lexicon.
    #[staticmethod]
    fn demo() -> Self {
        PyLexicon {
            inner: sentiment::Lexicon::demo(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn lookup(&self, token: &str) -> Option<&'static str> {
        self.inner.lookup(token).map(|p| match p {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }

    /// `(positive hits, negative hits, label)` over a token list.
    fn score(&self, tokens: Vec<String>) -> (usize, usize, &'static str) {
        let r = sentiment::score(&tokens, &self.inner);
        (r.pos_hits, r.neg_hits, label_name(r.label))
    }

    /// Tokenize with default rules, then score.
    fn score_text(&self, text: &str) -> (usize, usize, &'static str) {
        self.score(corpus::tokenize(text, &TokenRules::default()))
    }
}

#[pyclass(name = "TopicModel", module = "poptopic")]
struct PyTopicModel {
    model: topicmodel::TopicModel,
    vocabulary: corpus::Vocabulary,
    post_ids: Vec<String>,
}

#[pymethods]
impl PyTopicModel {
    #[getter]
    fn topics(&self) -> usize {
        self.model.topics()
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.vocabulary.tokens().to_vec()
    }

    /// Ids of the documents the model was fitted on (empty ones dropped).
    #[getter]
    fn document_ids(&self) -> Vec<String> {
        self.post_ids.clone()
    }

    #[pyo3(signature = (topic, n = 10))]
    fn top_words(&self, topic: usize, n: usize) -> PyResult<Vec<(String, f64)>> {
        self.model.top_tokens(&self.vocabulary, topic, n).map_err(value_error)
    }

    fn phi(&self, topic: usize) -> PyResult<Vec<f64>> {
        if topic >= self.model.topics() {
            return Err(value_error(format!("topic {topic} out of range")));
        }
        Ok(self.model.phi(topic).to_vec())
    }

    fn theta(&self, doc: usize) -> PyResult<Vec<f64>> {
        if doc >= self.model.num_docs() {
            return Err(value_error(format!("document {doc} out of range")));
        }
        Ok(self.model.theta(doc).to_vec())
    }

    /// Per-topic weights summing to one: `token-mass` or `uniform`.
    #[pyo3(signature = (mode = "token-mass"))]
    fn masses(&self, mode: &str) -> PyResult<Vec<f64>> {
        let mode: MassMode = mode.parse().map_err(value_error)?;
        Ok(report::topic_mass(&self.model, mode).weights)
    }
}

fn build_corpus(docs: Vec<Vec<String>>, min_df: u32) -> PyResult<corpus::Corpus> {
    let vocab = build_vocabulary(&docs, min_df, &HashSet::new());
    let named: Vec<(String, Vec<String>)> = docs.into_iter().enumerate().map(|(i, d)| (i.to_string(), d)).collect();
    let encoded = encode_tokens(&named, vocab);
    if encoded.corpus.is_empty() {
        return Err(value_error("corpus has no non-empty documents"));
    }
    Ok(encoded.corpus)
}

fn lda_config(topics: usize, alpha: Option<f64>, beta: f64, sweeps: usize, seed: u64) -> LdaConfig {
    let mut cfg = LdaConfig::new(topics);
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    cfg.beta = beta;
    cfg.sweeps = sweeps;
    cfg.seed = seed;
    cfg
}

/// Fit LDA to token lists. `alpha` defaults to 5 / topics.
#[pyfunction]
#[pyo3(signature = (docs, topics, alpha = None, beta = 0.01, sweeps = 1000, seed = 0, min_df = 1))]
fn fit(
    py: Python<'_>,
    docs: Vec<Vec<String>>,
    topics: usize,
    alpha: Option<f64>,
    beta: f64,
    sweeps: usize,
    seed: u64,
    min_df: u32,
) -> PyResult<PyTopicModel> {
    let corpus = build_corpus(docs, min_df)?;
    let cfg = lda_config(topics, alpha, beta, sweeps, seed);
    let (_, model) = py.detach(|| topicmodel::fit(&corpus, &cfg)).map_err(value_error)?;
    Ok(PyTopicModel {
        post_ids: corpus.documents().iter().map(|d| d.post_id.clone()).collect(),
        vocabulary: corpus.vocabulary().clone(),
        model,
    })
}

/// Pick a topic count from `grid` by held-out per-token log-likelihood.
/// Returns `(chosen, [(k, per_token_loglik), ...])`.
#[pyfunction]
#[pyo3(signature = (docs, grid, alpha_sum = 5.0, beta = 0.01, sweeps = 1000, seed = 0, holdout_fraction = 0.1, particles = 10))]
fn select_k(
    py: Python<'_>,
    docs: Vec<Vec<String>>,
    grid: Vec<usize>,
    alpha_sum: f64,
    beta: f64,
    sweeps: usize,
    seed: u64,
    holdout_fraction: f64,
    particles: usize,
) -> PyResult<(usize, Vec<(usize, f64)>)> {
    let corpus = build_corpus(docs, 1)?;
    let first = *grid.first().ok_or_else(|| value_error("grid is empty"))?;
    let mut cfg = lda_config(first, Some(alpha_sum / first.max(1) as f64), beta, sweeps, seed);
    cfg.holdout_fraction = holdout_fraction;
    cfg.particles = particles;
    let selection = py.detach(|| topicmodel::select_k(&corpus, &grid, &cfg)).map_err(value_error)?;
    Ok((
        selection.chosen,
        selection.table.iter().map(|(k, e)| (*k, e.per_token_loglik)).collect(),
    ))
}

#[pyclass(name = "Distribution", module = "poptopic")]
struct PyDistribution {
    inner: LabelDistribution,
}

#[pymethods]
impl PyDistribution {
    /// `(label, percent, rank)` in display order; rank is `None` for zero
    /// shares.
    fn rows(&self) -> Vec<(String, f64, Option<usize>)> {
        self.inner
            .display_order()
            .into_iter()
            .map(|r| (r.label.clone(), r.percent, r.rank))
            .collect()
    }

    /// Unrounded percentage of one label.
    fn share(&self, label: &str) -> Option<f64> {
        self.inner.get(label).map(|r| r.raw)
    }

    /// Merge `group` into one label called `name`.
    fn combine(&self, group: Vec<String>, name: &str) -> PyResult<PyDistribution> {
        Ok(PyDistribution {
            inner: report::combine(&self.inner, &group, name).map_err(value_error)?,
        })
    }

    /// `text-table`, `delimited` or `records`.
    #[pyo3(signature = (format = "text-table"))]
    fn render(&self, format: &str) -> PyResult<String> {
        let format: RenderFormat = format.parse().map_err(value_error)?;
        Ok(report::render(&self.inner, format))
    }
}

/// Aggregate per-topic masses into label percentages. `labels[k]` is `None`
/// for an unreviewed topic, an empty list for an excluded topic, or label
/// names. `taxonomy` defaults to the ten economic dimensions.
#[pyfunction]
#[pyo3(signature = (masses, labels, taxonomy = None, lenient = false))]
fn distribute(
    masses: Vec<f64>,
    labels: Vec<Option<Vec<String>>>,
    taxonomy: Option<Vec<String>>,
    lenient: bool,
) -> PyResult<PyDistribution> {
    let taxonomy = match taxonomy {
        Some(names) => Taxonomy::new(names).map_err(value_error)?,
        None => Taxonomy::default(),
    };
    let mut labeling = TopicLabeling::new(labels.len(), &taxonomy);
    for (k, entry) in labels.into_iter().enumerate() {
        match entry {
            None => {}
            Some(names) if names.is_empty() => labeling.exclude(k, "excluded"),
            Some(names) => {
                let ids = names
                    .iter()
                    .map(|n| taxonomy.index_of(n).ok_or_else(|| value_error(format!("unknown label `{n}`"))))
                    .collect::<PyResult<Vec<usize>>>()?;
                labeling.label(k, ids).map_err(value_error)?;
            }
        }
    }
    let vector = TopicMassVector {
        weights: masses,
        mode: MassMode::Uniform,
    };
    Ok(PyDistribution {
        inner: report::distribute(&vector, &labeling, &taxonomy, lenient).map_err(value_error)?,
    })
}

/// Combine labels of a distribution; same as `Distribution.combine`.
#[pyfunction]
fn combine(dist: &PyDistribution, group: Vec<String>, name: &str) -> PyResult<PyDistribution> {
    dist.combine(group, name)
}

#[pymodule]
#[pyo3(name = "poptopic")]
fn poptopic_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(matches, m)?)?;
    m.add_function(wrap_pyfunction!(dedup, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(select_k, m)?)?;
    m.add_function(wrap_pyfunction!(distribute, m)?)?;
    m.add_function(wrap_pyfunction!(combine, m)?)?;
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyTopicModel>()?;
    m.add_class::<PyDistribution>()?;
    m.add("ECONOMIC_DIMENSIONS", ::poptopic::labeling::ECONOMIC_DIMENSIONS.to_vec())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
