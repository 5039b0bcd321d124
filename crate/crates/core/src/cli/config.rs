use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::corpus::{InputFormat, QueryFilter, TokenRules};
use crate::report::MassMode;
use crate::topicmodel::{LdaConfig, DEFAULT_ALPHA_SUM};

use super::CliError;

/// Every recognized configuration key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("input", "archived posts to read (filter stage)"),
    ("input_format", "record-lines or delimited [record-lines]"),
    ("strict", "abort on the first malformed record [false]"),
    ("queries", "comma-separated queries: @name, #tag, word, a AND b [none: keep all]"),
    ("lowercase", "lowercase tokens [true]"),
    ("keep_prefixes", "characters kept at the start of tokens [#@]"),
    ("min_token_len", "shortest token kept [2]"),
    ("strip_urls", "drop URLs before tokenizing [true]"),
    ("lexicon", "polarity lexicon file, or `builtin:demo`"),
    ("stopwords", "stopword file, `builtin` or `none` [builtin]"),
    ("min_df", "minimum document frequency [1]"),
    ("posts", "sentiment stage input [<output_dir>/filtered.jsonl]"),
    ("corpus", "topic model input [<output_dir>/positive.jsonl]"),
    ("topics", "number of topics [10]"),
    ("alpha", "per-topic document concentration [5/topics]"),
    ("beta", "topic-word concentration [0.01]"),
    ("sweeps", "Gibbs sweeps [1000]"),
    ("seed", "random seed [0]"),
    ("holdout_fraction", "held-out share for select-k [0.1]"),
    ("particles", "left-to-right particles [10]"),
    ("k_grid", "ascending topic counts for select-k, e.g. 2,5,20"),
    ("top_n", "top words per topic in reports [10]"),
    ("taxonomy", "label taxonomy file or `builtin` [builtin]"),
    ("rules", "keyword rules file or `builtin` [builtin]"),
    ("labeling", "topic labeling file [<output_dir>/labeling.tsv]"),
    ("masses", "per-topic masses file overriding the model (report stage)"),
    ("mass_mode", "token-mass or uniform [token-mass]"),
    ("lenient", "treat unreviewed topics as excluded in reports [false]"),
    ("combine", "label groups to merge: `A + B => New; C + D => Other`"),
    ("output_dir", "directory for stage outputs [out]"),
];

/// Raw `key -> value` settings: config file first, command-line flags on top.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parse `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", i + 1)))?;
            settings.set(key.trim(), value.trim())?;
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Builtin,
    None,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub group: Vec<String>,
    pub name: String,
}

/// Typed, validated pipeline settings.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub settings: Settings,
    pub input: Option<PathBuf>,
    pub input_format: InputFormat,
    pub strict: bool,
    pub queries: Vec<QueryFilter>,
    pub token_rules: TokenRules,
    pub lexicon: Option<Source>,
    pub stopwords: Source,
    pub min_df: u32,
    pub posts: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub lda: LdaConfig,
    pub k_grid: Vec<usize>,
    pub top_n: usize,
    pub taxonomy: Source,
    pub rules: Source,
    pub labeling: Option<PathBuf>,
    pub masses: Option<PathBuf>,
    pub mass_mode: MassMode,
    pub lenient: bool,
    pub combine: Vec<Combination>,
    pub output_dir: PathBuf,
}

fn parse<T: std::str::FromStr>(settings: &Settings, key: &str, default: T) -> Result<T, CliError> {
    match settings.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`"))),
    }
}

fn parse_bool(settings: &Settings, key: &str, default: bool) -> Result<bool, CliError> {
    match settings.get(key) {
        None => Ok(default),
        Some("true" | "yes" | "on" | "1") => Ok(true),
        Some("false" | "no" | "off" | "0") => Ok(false),
        Some(v) => Err(CliError::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn source(settings: &Settings, key: &str) -> Source {
    match settings.get(key) {
        None | Some("builtin") => Source::Builtin,
        Some("none") => Source::None,
        Some(path) => Source::File(PathBuf::from(path)),
    }
}

fn parse_combinations(text: &str) -> Result<Vec<Combination>, CliError> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|spec| {
            let (group, name) = spec
                .split_once("=>")
                .ok_or_else(|| CliError::Config(format!("`combine`: expected `A + B => Name` in `{spec}`")))?;
            let group: Vec<String> = group.split('+').map(|s| s.trim().to_string()).collect();
            if group.len() < 2 || group.iter().any(String::is_empty) || name.trim().is_empty() {
                return Err(CliError::Config(format!("`combine`: bad group `{spec}`")));
            }
            Ok(Combination {
                group,
                name: name.trim().to_string(),
            })
        })
        .collect()
}

impl PipelineConfig {
    pub fn from_settings(settings: Settings) -> Result<Self, CliError> {
        let s = &settings;
        let input_format = match s.get("input_format") {
            None => InputFormat::RecordLines,
            Some(v) => v.parse().map_err(CliError::Config)?,
        };
        let queries = match s.get("queries") {
            None => Vec::new(),
            Some(text) => text
                .split(',')
                .map(str::trim)
                .filter(|q| !q.is_empty())
                .map(|q| QueryFilter::parse(q).map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<_, _>>()?,
        };
        let defaults = TokenRules::default();
        let token_rules = TokenRules {
            lowercase: parse_bool(s, "lowercase", defaults.lowercase)?,
            keep_prefixes: match settings.values.get("keep_prefixes") {
                Some(v) => v.chars().filter(|c| !c.is_whitespace()).collect(),
                None => defaults.keep_prefixes,
            },
            min_token_len: parse(s, "min_token_len", defaults.min_token_len)?,
            strip_urls: parse_bool(s, "strip_urls", defaults.strip_urls)?,
        };
        token_rules.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let topics: usize = parse(s, "topics", 10)?;
        let mut lda = LdaConfig::new(topics);
        lda.alpha = parse(s, "alpha", DEFAULT_ALPHA_SUM / topics.max(1) as f64)?;
        lda.beta = parse(s, "beta", lda.beta)?;
        lda.sweeps = parse(s, "sweeps", lda.sweeps)?;
        lda.seed = parse(s, "seed", lda.seed)?;
        lda.holdout_fraction = parse(s, "holdout_fraction", lda.holdout_fraction)?;
        lda.particles = parse(s, "particles", lda.particles)?;
        lda.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let k_grid: Vec<usize> = match s.get("k_grid") {
            None => Vec::new(),
            Some(text) => text
                .split(',')
                .map(|k| {
                    k.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("`k_grid`: `{k}` is not an integer")))
                })
                .collect::<Result<_, _>>()?,
        };
        if k_grid.windows(2).any(|w| w[0] >= w[1]) || k_grid.contains(&0) {
            return Err(CliError::Config("`k_grid` must be strictly ascending positive integers".into()));
        }

        let lexicon = s.get("lexicon").map(|v| match v {
            "builtin:demo" | "builtin" => Source::Builtin,
            path => Source::File(PathBuf::from(path)),
        });
        let mass_mode = match s.get("mass_mode") {
            None => MassMode::TokenMass,
            Some(v) => v.parse().map_err(CliError::Config)?,
        };

        Ok(PipelineConfig {
            input: s.get("input").map(PathBuf::from),
            input_format,
            strict: parse_bool(s, "strict", false)?,
            queries,
            token_rules,
            lexicon,
            stopwords: source(s, "stopwords"),
            min_df: parse(s, "min_df", 1)?,
            posts: s.get("posts").map(PathBuf::from),
            corpus: s.get("corpus").map(PathBuf::from),
            lda,
            k_grid,
            top_n: parse(s, "top_n", 10)?,
            taxonomy: source(s, "taxonomy"),
            rules: source(s, "rules"),
            labeling: s.get("labeling").map(PathBuf::from),
            masses: s.get("masses").map(PathBuf::from),
            mass_mode,
            lenient: parse_bool(s, "lenient", false)?,
            combine: match s.get("combine") {
                None => Vec::new(),
                Some(text) => parse_combinations(text)?,
            },
            output_dir: PathBuf::from(s.get("output_dir").unwrap_or("out")),
            settings,
        })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    pub fn posts_path(&self) -> PathBuf {
        self.posts.clone().unwrap_or_else(|| self.out("filtered.jsonl"))
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| self.out("positive.jsonl"))
    }

    pub fn labeling_path(&self) -> PathBuf {
        self.labeling.clone().unwrap_or_else(|| self.out("labeling.tsv"))
    }

    /// Effective settings for manifests. The output directory itself is left
    /// out and paths inside it are shown relative to it, so identical runs
    /// into different directories produce identical manifests.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.settings
            .iter()
            .filter(|(k, _)| k.as_str() != "output_dir")
            .map(|(k, v)| {
                let shown = match Path::new(v).strip_prefix(&self.output_dir) {
                    Ok(rel) if !self.output_dir.as_os_str().is_empty() => format!("$output_dir/{}", rel.display()),
                    _ => v.clone(),
                };
                (k.clone(), shown)
            })
            .collect()
    }
}

/// Fail early with a config error when a referenced file cannot be read.
pub fn require_readable(path: &Path, key: &str) -> Result<(), CliError> {
    std::fs::metadata(path)
        .map(|_| ())
        .map_err(|e| CliError::Config(format!("`{key}` path {} is not readable: {e}", path.display())))
}
