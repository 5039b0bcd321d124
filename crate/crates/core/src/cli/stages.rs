//! Stage implementations. Every stage writes its outputs plus a
//! `manifest_<stage>.json` recording the effective settings, the seed and the
//! SHA-256 of every input and output file.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{require_readable, PipelineConfig, Source};
use super::CliError;
use crate::corpus::{
    build_vocabulary, dedup, default_stopwords, encode_tokens, ingest, load_stopwords, tokenize,
    write_record_lines, CorpusError, DedupStats, Encoded, FilterSet, InputFormat, RawPost, Vocabulary,
};
use crate::hashing::sha256_hex;
use crate::labeling::{
    interactive_label, load_labeling, save_labeling_file, KeywordRules, LabelingError, Taxonomy, TopicLabeling,
};
use crate::report::{
    combine, distribute, render, topic_mass, LabelDistribution, RenderFormat, ReportError, TopicMassVector,
};
use crate::sentiment::{load_lexicon, partition, Lexicon, PartitionCounts};
use crate::topicmodel::{
    estimate, fit, read_model, select_k, write_model, write_top_words, Selection, TopicModel, TopicModelError,
};

const MODEL_FILE: &str = "model.txt";
const VOCAB_FILE: &str = "vocab.tsv";

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidFilter { .. } | CorpusError::InvalidTokenRules => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TopicModelError> for CliError {
    fn from(e: TopicModelError) -> Self {
        match e {
            TopicModelError::InvalidConfig(_) => CliError::Config(e.to_string()),
            TopicModelError::EmptyCorpus | TopicModelError::EmptyHeldOut => CliError::Empty(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<LabelingError> for CliError {
    fn from(e: LabelingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::NoLabeledMass => CliError::Empty(e.to_string()),
            ReportError::UnknownLabel(_) | ReportError::GroupTooSmall | ReportError::DuplicateLabel(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn say(out: &mut dyn Write, text: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", text.as_ref()).map_err(|e| CliError::Data(format!("stdout: {e}")))
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Accumulates the manifest of one stage run.
struct Stage<'a> {
    name: &'static str,
    cfg: &'a PipelineConfig,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    stage: &'a str,
    version: &'a str,
    seed: u64,
    config: BTreeMap<String, String>,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

impl<'a> Stage<'a> {
    fn new(name: &'static str, cfg: &'a PipelineConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
            CliError::Config(format!("cannot create output_dir {}: {e}", cfg.output_dir.display()))
        })?;
        Ok(Stage {
            name,
            cfg,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Paths inside the output directory are recorded relative to it, so
    /// runs into different directories have identical manifests.
    fn display(&self, path: &Path) -> String {
        match path.strip_prefix(&self.cfg.output_dir) {
            Ok(rel) => format!("$output_dir/{}", rel.display()),
            Err(_) => path.display().to_string(),
        }
    }

    /// Read an input file and record its digest.
    fn read(&mut self, path: &Path, key: &str) -> Result<Vec<u8>, CliError> {
        require_readable(path, key)?;
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("`{key}` path {} is not readable: {e}", path.display())))?;
        self.inputs.push(FileDigest {
            path: self.display(path),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.cfg.out(name);
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        self.record_output(name, bytes);
        Ok(path)
    }

    fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push(FileDigest {
            path: format!("$output_dir/{name}"),
            sha256: sha256_hex(bytes),
        });
    }

    fn finish(self) -> Result<(), CliError> {
        let manifest = Manifest {
            stage: self.name,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.cfg.lda.seed,
            config: self.cfg.echo(),
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.cfg.out(&format!("manifest_{}.json", self.name));
        std::fs::write(&path, text).map_err(io_err(&path))
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn jsonl_bytes(posts: &[RawPost]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_record_lines(&mut buf, posts).expect("writing to memory");
    buf
}

/// Posts written by earlier stages; always strict record lines.
fn read_stage_posts(stage: &mut Stage, path: &Path, key: &str) -> Result<Vec<RawPost>, CliError> {
    let bytes = stage.read(path, key)?;
    Ok(ingest(bytes.as_slice(), InputFormat::RecordLines, true)?.posts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub input: String,
    pub records: usize,
    pub malformed: usize,
    pub matched: usize,
    pub removed: DedupStats,
    pub kept: usize,
}

/// Ingest, keep posts matching any query, remove retweets, URL posts and
/// duplicates.
pub fn run_filter(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<FilterStats, CliError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("filter needs `input`".into()))?;
    let mut stage = Stage::new("filter", cfg)?;
    let bytes = stage.read(input, "input")?;
    let ingested = ingest(bytes.as_slice(), cfg.input_format, cfg.strict)?;
    for (line, reason) in &ingested.problems {
        eprintln!("poptopic: {}:{line}: skipped: {reason}", input.display());
    }
    let filters = FilterSet::new(cfg.queries.clone());
    let records = ingested.posts.len() + ingested.skipped;
    let matched: Vec<RawPost> = ingested.posts.into_iter().filter(|p| filters.matches_any(&p.text)).collect();
    let matched_count = matched.len();
    let (kept, removed) = dedup(matched);
    let stats = FilterStats {
        input: stage.display(input),
        records,
        malformed: ingested.skipped,
        matched: matched_count,
        removed,
        kept: kept.len(),
    };
    stage.write("filtered.jsonl", &jsonl_bytes(&kept))?;
    stage.write("filter_stats.json", &json_bytes(&stats))?;
    stage.finish()?;
    say(
        out,
        format!(
            "filter: {} records, {} malformed, {} matched, removed {} retweets / {} with URLs / {} duplicates, {} kept",
            stats.records, stats.malformed, stats.matched, removed.retweet, removed.url, removed.duplicate, stats.kept
        ),
    )?;
    if stats.kept == 0 {
        return Err(CliError::Empty("no posts left after filtering".into()));
    }
    Ok(stats)
}

fn load_lexicon_source(stage: &mut Stage, cfg: &PipelineConfig) -> Result<Lexicon, CliError> {
    match &cfg.lexicon {
        None => Err(CliError::Config("sentiment needs `lexicon` (a file or `builtin:demo`)".into())),
        Some(Source::Builtin) | Some(Source::None) => Ok(Lexicon::demo()),
        Some(Source::File(path)) => {
            let bytes = stage.read(path, "lexicon")?;
            load_lexicon(bytes.as_slice()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
    }
}

/// Split posts into positive, negative and neutral files.
pub fn run_sentiment(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<PartitionCounts, CliError> {
    let mut stage = Stage::new("sentiment", cfg)?;
    let lexicon = load_lexicon_source(&mut stage, cfg)?;
    let posts = read_stage_posts(&mut stage, &cfg.posts_path(), "posts")?;
    let parts = partition(posts, &lexicon, &cfg.token_rules);
    let counts = parts.counts();
    stage.write("positive.jsonl", &jsonl_bytes(&parts.positive))?;
    stage.write("negative.jsonl", &jsonl_bytes(&parts.negative))?;
    stage.write("neutral.jsonl", &jsonl_bytes(&parts.neutral))?;
    stage.write("sentiment_counts.json", &json_bytes(&counts))?;
    stage.finish()?;
    say(out, format!("sentiment (positive / negative / neutral): {counts}"))?;
    Ok(counts)
}

/// Tokenize the topic-model corpus and build its vocabulary.
fn prepare_corpus(stage: &mut Stage, cfg: &PipelineConfig) -> Result<Encoded, CliError> {
    let stopwords: HashSet<String> = match &cfg.stopwords {
        Source::Builtin => default_stopwords(),
        Source::None => HashSet::new(),
        Source::File(path) => {
            let bytes = stage.read(path, "stopwords")?;
            load_stopwords(bytes.as_slice()).map_err(io_err(path))?
        }
    };
    let posts = read_stage_posts(stage, &cfg.corpus_path(), "corpus")?;
    let tokenized: Vec<(String, Vec<String>)> = posts
        .into_iter()
        .map(|p| {
            let tokens = tokenize(&p.text, &cfg.token_rules);
            (p.id, tokens)
        })
        .collect();
    let token_lists: Vec<&Vec<String>> = tokenized.iter().map(|(_, t)| t).collect();
    let vocabulary = build_vocabulary(&token_lists, cfg.min_df, &stopwords);
    let encoded = encode_tokens(&tokenized, vocabulary);
    if encoded.corpus.is_empty() {
        return Err(CliError::Empty("no documents left after tokenizing the corpus".into()));
    }
    Ok(encoded)
}

#[derive(Serialize)]
struct FitStats {
    documents: usize,
    dropped_posts: usize,
    tokens: usize,
    vocabulary: usize,
    topics: usize,
    alpha: f64,
    beta: f64,
    sweeps: usize,
    seed: u64,
}

fn top_words_bytes(model: &TopicModel, vocabulary: &Vocabulary, n: usize) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_top_words(&mut buf, model, vocabulary, n)?;
    Ok(buf)
}

fn print_topics(out: &mut dyn Write, model: &TopicModel, vocabulary: &Vocabulary, n: usize) -> Result<(), CliError> {
    for k in 0..model.topics() {
        let words: Vec<String> = model.top_tokens(vocabulary, k, n)?.into_iter().map(|(t, _)| t).collect();
        say(out, format!("topic {k}: {}", words.join(" ")))?;
    }
    Ok(())
}

/// Fit LDA to the corpus; writes the vocabulary, the model and top words.
pub fn run_fit(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mut stage = Stage::new("fit", cfg)?;
    let encoded = prepare_corpus(&mut stage, cfg)?;
    let corpus = &encoded.corpus;
    let (state, model) = fit(corpus, &cfg.lda)?;

    let mut vocab_buf = Vec::new();
    corpus.vocabulary().write_tsv(&mut vocab_buf).expect("writing to memory");
    stage.write(VOCAB_FILE, &vocab_buf)?;
    let mut model_buf = Vec::new();
    write_model(&mut model_buf, &state, &cfg.lda, corpus)?;
    stage.write(MODEL_FILE, &model_buf)?;
    stage.write("topics.tsv", &top_words_bytes(&model, corpus.vocabulary(), cfg.top_n)?)?;
    let stats = FitStats {
        documents: corpus.num_docs(),
        dropped_posts: encoded.dropped,
        tokens: corpus.num_tokens(),
        vocabulary: corpus.vocabulary().len(),
        topics: cfg.lda.topics,
        alpha: cfg.lda.alpha,
        beta: cfg.lda.beta,
        sweeps: cfg.lda.sweeps,
        seed: cfg.lda.seed,
    };
    stage.write("fit_stats.json", &json_bytes(&stats))?;
    stage.finish()?;
    say(
        out,
        format!(
            "fit: {} topics, {} documents, {} tokens, {} types, {} sweeps",
            stats.topics, stats.documents, stats.tokens, stats.vocabulary, stats.sweeps
        ),
    )?;
    print_topics(out, &model, corpus.vocabulary(), cfg.top_n)
}

/// Choose the topic count from `k_grid` by held-out likelihood.
pub fn run_select_k(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<Selection, CliError> {
    if cfg.k_grid.is_empty() {
        return Err(CliError::Config("select-k needs `k_grid`".into()));
    }
    let mut stage = Stage::new("select_k", cfg)?;
    let encoded = prepare_corpus(&mut stage, cfg)?;
    let selection = select_k(&encoded.corpus, &cfg.k_grid, &cfg.lda)?;
    let mut table = String::from("topics\tper_token_loglik\ttotal_loglik\ttokens\tparticles\tchosen\n");
    for (k, est) in &selection.table {
        table.push_str(&format!(
            "{k}\t{}\t{}\t{}\t{}\t{}\n",
            est.per_token_loglik,
            est.total_loglik,
            est.token_count,
            est.particles,
            *k == selection.chosen
        ));
    }
    stage.write("select_k.tsv", table.as_bytes())?;
    stage.write("select_k.json", &json_bytes(&selection))?;
    stage.finish()?;
    say(
        out,
        format!(
            "select-k: {} training / {} held-out documents",
            selection.train_docs, selection.heldout_docs
        ),
    )?;
    for (k, est) in &selection.table {
        say(out, format!("  K={k:<4} {:.4} nats/token", est.per_token_loglik))?;
    }
    say(out, format!("select-k: chose K={}", selection.chosen))?;
    Ok(selection)
}

/// Reload the fitted model from the output directory.
fn load_model(stage: &mut Stage, cfg: &PipelineConfig) -> Result<(TopicModel, Vocabulary), CliError> {
    let vocab_path = cfg.out(VOCAB_FILE);
    let vocab_bytes = stage.read(&vocab_path, "output_dir")?;
    let vocabulary = Vocabulary::read_tsv(vocab_bytes.as_slice())?;
    let model_path = cfg.out(MODEL_FILE);
    let model_bytes = stage.read(&model_path, "output_dir")?;
    let saved = read_model(model_bytes.as_slice(), vocabulary.clone())?;
    Ok((estimate(&saved.state, &saved.config), vocabulary))
}

/// Rewrite the top-word report from the saved model.
pub fn run_topics(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mut stage = Stage::new("topics", cfg)?;
    let (model, vocabulary) = load_model(&mut stage, cfg)?;
    stage.write("topics.tsv", &top_words_bytes(&model, &vocabulary, cfg.top_n)?)?;
    stage.finish()?;
    print_topics(out, &model, &vocabulary, cfg.top_n)
}

fn load_taxonomy(stage: &mut Stage, cfg: &PipelineConfig) -> Result<Taxonomy, CliError> {
    match &cfg.taxonomy {
        Source::Builtin => Ok(Taxonomy::default()),
        Source::None => Err(CliError::Config("`taxonomy` cannot be `none`".into())),
        Source::File(path) => {
            let bytes = stage.read(path, "taxonomy")?;
            Taxonomy::load(bytes.as_slice()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

fn load_rules(stage: &mut Stage, cfg: &PipelineConfig, taxonomy: &Taxonomy) -> Result<KeywordRules, CliError> {
    let rules = match &cfg.rules {
        Source::Builtin if *taxonomy == Taxonomy::default() => KeywordRules::economic_default(taxonomy),
        Source::Builtin | Source::None => KeywordRules::load(&b""[..], taxonomy),
        Source::File(path) => {
            let bytes = stage.read(path, "rules")?;
            KeywordRules::load(bytes.as_slice(), taxonomy)
        }
    };
    rules.map_err(|e| CliError::Config(format!("keyword rules: {e}")))
}

/// Interactive topic review; progress is saved after every decision.
pub fn run_label(cfg: &PipelineConfig, input: &mut dyn std::io::BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let mut stage = Stage::new("label", cfg)?;
    let (model, vocabulary) = load_model(&mut stage, cfg)?;
    let taxonomy = load_taxonomy(&mut stage, cfg)?;
    let rules = load_rules(&mut stage, cfg, &taxonomy)?;
    let path = cfg.labeling_path();
    let existing = if path.exists() {
        let bytes = stage.read(&path, "labeling")?;
        load_labeling(bytes.as_slice(), &taxonomy, model.topics())?
    } else {
        TopicLabeling::new(model.topics(), &taxonomy)
    };
    let labeling = interactive_label(&model, &vocabulary, &taxonomy, &rules, existing, input, &mut *out, |l| {
        save_labeling_file(l, &taxonomy, &path)
    })?;
    let saved = std::fs::read(&path).map_err(io_err(&path))?;
    stage.outputs.push(FileDigest {
        path: stage.display(&path),
        sha256: sha256_hex(&saved),
    });
    stage.finish()?;
    let remaining = labeling.unreviewed().count();
    say(out, format!("label: saved {}; {remaining} topics unreviewed", path.display()))
}

/// `topic_id<TAB>mass` lines; a header line and `#` comments are allowed.
fn parse_masses(bytes: &[u8], cfg: &PipelineConfig) -> Result<TopicMassVector, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Data("masses file is not UTF-8".into()))?;
    let mut entries: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("topic")) {
            continue;
        }
        let bad = |reason: &str| CliError::Data(format!("masses line {}: {reason}", i + 1));
        let mut cols = line.split('\t');
        let (Some(id), Some(mass), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(bad("expected topic_id<TAB>mass"));
        };
        let id: usize = id.trim().parse().map_err(|_| bad("bad topic id"))?;
        let mass: f64 = mass.trim().parse().map_err(|_| bad("bad mass"))?;
        if !mass.is_finite() || mass < 0.0 {
            return Err(bad("mass must be a finite non-negative number"));
        }
        if entries.insert(id, mass).is_some() {
            return Err(bad("duplicate topic id"));
        }
    }
    if entries.is_empty() {
        return Err(CliError::Data("masses file lists no topics".into()));
    }
    if entries.keys().enumerate().any(|(i, &id)| i != id) {
        return Err(CliError::Data("masses must cover topics 0..K-1 without gaps".into()));
    }
    Ok(TopicMassVector {
        weights: entries.into_values().collect(),
        mode: cfg.mass_mode,
    })
}

fn render_all(stage: &mut Stage, stem: &str, dist: &LabelDistribution) -> Result<String, CliError> {
    let table = render(dist, RenderFormat::TextTable);
    stage.write(&format!("{stem}.txt"), table.as_bytes())?;
    stage.write(&format!("{stem}.tsv"), render(dist, RenderFormat::Delimited).as_bytes())?;
    stage.write(&format!("{stem}.jsonl"), render(dist, RenderFormat::Records).as_bytes())?;
    Ok(table)
}

/// Label distribution from the model's topic masses (or a masses file) and
/// a completed labeling.
pub fn run_report(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mut stage = Stage::new("report", cfg)?;
    let taxonomy = load_taxonomy(&mut stage, cfg)?;
    let masses = match &cfg.masses {
        Some(path) => {
            let bytes = stage.read(path, "masses")?;
            parse_masses(&bytes, cfg)?
        }
        None => topic_mass(&load_model(&mut stage, cfg)?.0, cfg.mass_mode),
    };
    let path = cfg.labeling_path();
    let bytes = stage.read(&path, "labeling")?;
    let labeling = load_labeling(bytes.as_slice(), &taxonomy, masses.weights.len())?;
    let dist = distribute(&masses, &labeling, &taxonomy, cfg.lenient)?;
    let table = render_all(&mut stage, "distribution", &dist)?;
    say(out, table.trim_end())?;
    if !cfg.combine.is_empty() {
        let mut combined = dist;
        for c in &cfg.combine {
            combined = combine(&combined, &c.group, &c.name)?;
        }
        let table = render_all(&mut stage, "distribution_combined", &combined)?;
        say(out, "")?;
        say(out, table.trim_end())?;
    }
    stage.finish()
}

/// filter → sentiment → select-k (when `k_grid` is set) → fit → report (when
/// the labeling file exists).
pub fn run_pipeline(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    run_filter(cfg, out)?;
    run_sentiment(cfg, out)?;
    let fit_cfg = if cfg.k_grid.is_empty() {
        cfg.clone()
    } else {
        let chosen = run_select_k(cfg, out)?.chosen;
        let mut settings = cfg.settings.clone();
        settings.set("topics", &chosen.to_string())?;
        PipelineConfig::from_settings(settings)?
    };
    run_fit(&fit_cfg, out)?;
    if fit_cfg.labeling_path().exists() {
        run_report(&fit_cfg, out)
    } else {
        say(
            out,
            format!(
                "pipeline: no labeling at {}; run `poptopic label`, then `poptopic report`",
                fit_cfg.labeling_path().display()
            ),
        )
    }
}
