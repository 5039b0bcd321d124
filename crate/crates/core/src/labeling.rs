//! Human coding of topics against a label taxonomy: keyword suggestions,
//! labeling files, two-coder reconciliation and an interactive review loop.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::Vocabulary;
use crate::hashing::sha256_lines;
use crate::topicmodel::TopicModel;

/// The ten economic dimensions, in their canonical order.
pub const ECONOMIC_DIMENSIONS: [&str; 10] = [
    "Jobs & Income",
    "Trade & Globalization",
    "Taxes",
    "Entitlement",
    "National Debt",
    "Immigration",
    "Infrastructure",
    "Monetary Policy & The Federal Reserve",
    "Pay for College",
    "Minimum Wage",
];

const DEFAULT_RULES: &str = include_str!("../data/economic_rules.tsv");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelingError {
    #[error("line {line}: unknown label `{label}`")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: topic {topic} appears more than once")]
    DuplicateTopic { line: usize, topic: usize },
    #[error("topic {0} is missing from the labeling file")]
    MissingTopic(usize),
    #[error("line {line}: topic {topic} is out of range for {topics} topics")]
    TopicOutOfRange { line: usize, topic: usize, topics: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("taxonomy mismatch: {0}")]
    TaxonomyMismatch(String),
    #[error("labelings cover {0} and {1} topics")]
    TopicCountMismatch(usize, usize),
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
    #[error("a labeled topic needs at least one label")]
    EmptyLabelSet,
    #[error("io: {0}")]
    Io(String),
}

impl From<io::Error> for LabelingError {
    fn from(e: io::Error) -> Self {
        LabelingError::Io(e.to_string())
    }
}

/// Ordered, unique label names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    names: Vec<String>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy {
            names: ECONOMIC_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Taxonomy {
    pub fn new(names: Vec<String>) -> Result<Self, LabelingError> {
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.trim().is_empty() {
                return Err(LabelingError::InvalidTaxonomy("empty label name".into()));
            }
            if name.contains(['\t', ';', '\n']) {
                return Err(LabelingError::InvalidTaxonomy(format!(
                    "label `{name}` contains a tab, newline or `;`"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(LabelingError::InvalidTaxonomy(format!("duplicate label `{name}`")));
            }
        }
        Ok(Taxonomy { names })
    }

    /// One label per line; `#` comments and blank lines are skipped.
    pub fn load<R: BufRead>(source: R) -> Result<Self, LabelingError> {
        let mut names = Vec::new();
        for line in source.lines() {
            let line = line?;
            let name = line.trim();
            if !name.is_empty() && !name.starts_with('#') {
                names.push(name.to_string());
            }
        }
        Self::new(names)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn digest(&self) -> String {
        sha256_lines(self.names.iter().map(String::as_str))
    }
}

/// Keyword lists per taxonomy label, used to suggest labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordRules {
    /// `(taxonomy index, keywords)`, sorted by index.
    rules: Vec<(usize, Vec<String>)>,
}

impl KeywordRules {
    /// Keyword lists seeded from sample topic words for the default taxonomy.
    pub fn economic_default(taxonomy: &Taxonomy) -> Result<Self, LabelingError> {
        Self::load(DEFAULT_RULES.as_bytes(), taxonomy)
    }

    /// Lines of `label<TAB>keyword[,keyword...]`; `#` comments allowed. A
    /// label listed twice has its keywords merged.
    pub fn load<R: BufRead>(source: R, taxonomy: &Taxonomy) -> Result<Self, LabelingError> {
        let mut rules: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (label, words) = line.split_once('\t').ok_or_else(|| LabelingError::Malformed {
                line: line_no,
                reason: "expected label<TAB>keywords".into(),
            })?;
            let label = label.trim();
            let idx = taxonomy.index_of(label).ok_or_else(|| LabelingError::UnknownLabel {
                line: line_no,
                label: label.to_string(),
            })?;
            let words: Vec<String> = words
                .split(',')
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            if words.is_empty() {
                return Err(LabelingError::Malformed {
                    line: line_no,
                    reason: format!("no keywords for `{label}`"),
                });
            }
            match rules.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, existing)) => existing.extend(words),
                None => rules.push((idx, words)),
            }
        }
        rules.sort_by_key(|(i, _)| *i);
        for (_, words) in &mut rules {
            let mut seen = BTreeSet::new();
            words.retain(|w| seen.insert(w.clone()));
        }
        Ok(KeywordRules { rules })
    }

    pub fn keywords(&self, label: usize) -> Option<&[String]> {
        self.rules.iter().find(|(i, _)| *i == label).map(|(_, w)| w.as_slice())
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.rules.iter().map(|(i, _)| *i)
    }
}

/// Rank labels by how many of a topic's top words appear in their keyword
/// list. Labels without matches are left out; ties keep taxonomy order.
pub fn suggest<S: AsRef<str>>(
    top_words: &[(S, f64)],
    rules: &KeywordRules,
    taxonomy: &Taxonomy,
) -> Vec<(String, usize)> {
    let tokens: BTreeSet<&str> = top_words.iter().map(|(t, _)| t.as_ref()).collect();
    let mut out: Vec<(usize, usize)> = rules
        .rules
        .iter()
        .map(|(label, words)| (*label, words.iter().filter(|w| tokens.contains(w.as_str())).count()))
        .filter(|(_, count)| *count > 0)
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out.into_iter()
        .map(|(label, count)| (taxonomy.names()[label].clone(), count))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopicStatus {
    Unreviewed,
    Excluded(String),
    /// Taxonomy indices; never empty.
    Labeled(BTreeSet<usize>),
}

impl TopicStatus {
    fn keyword(&self) -> &'static str {
        match self {
            TopicStatus::Unreviewed => "unreviewed",
            TopicStatus::Excluded(_) => "excluded",
            TopicStatus::Labeled(_) => "labeled",
        }
    }
}

/// One status per topic, tied to a taxonomy by its digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLabeling {
    taxonomy_sha256: String,
    taxonomy_len: usize,
    statuses: Vec<TopicStatus>,
}

impl TopicLabeling {
    pub fn new(topics: usize, taxonomy: &Taxonomy) -> Self {
        TopicLabeling {
            taxonomy_sha256: taxonomy.digest(),
            taxonomy_len: taxonomy.len(),
            statuses: vec![TopicStatus::Unreviewed; topics],
        }
    }

    pub fn topics(&self) -> usize {
        self.statuses.len()
    }

    pub fn taxonomy_sha256(&self) -> &str {
        &self.taxonomy_sha256
    }

    pub fn status(&self, topic: usize) -> &TopicStatus {
        &self.statuses[topic]
    }

    pub fn statuses(&self) -> &[TopicStatus] {
        &self.statuses
    }

    pub fn set_unreviewed(&mut self, topic: usize) {
        self.statuses[topic] = TopicStatus::Unreviewed;
    }

    pub fn exclude(&mut self, topic: usize, reason: impl Into<String>) {
        self.statuses[topic] = TopicStatus::Excluded(reason.into());
    }

    /// Label a topic with taxonomy indices.
    pub fn label<I: IntoIterator<Item = usize>>(&mut self, topic: usize, labels: I) -> Result<(), LabelingError> {
        let set: BTreeSet<usize> = labels.into_iter().collect();
        if set.is_empty() {
            return Err(LabelingError::EmptyLabelSet);
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= self.taxonomy_len) {
            return Err(LabelingError::UnknownLabel {
                line: 0,
                label: format!("#{bad}"),
            });
        }
        self.statuses[topic] = TopicStatus::Labeled(set);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        !self.statuses.iter().any(|s| *s == TopicStatus::Unreviewed)
    }

    pub fn unreviewed(&self) -> impl Iterator<Item = usize> + '_ {
        self.statuses
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == TopicStatus::Unreviewed)
            .map(|(k, _)| k)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            '\\' => '\\',
            _ => return None,
        });
    }
    Some(out)
}

const LABELING_MAGIC: &str = "# poptopic-labeling";
const LABELING_COLUMNS: &str = "topic_id\tstatus\tlabels_or_reason";

/// Write `labeling`: a taxonomy header, a column header, then one row per
/// topic in id order.
pub fn save_labeling<W: Write>(labeling: &TopicLabeling, taxonomy: &Taxonomy, mut sink: W) -> Result<(), LabelingError> {
    if labeling.taxonomy_sha256 != taxonomy.digest() {
        return Err(LabelingError::TaxonomyMismatch("labeling was made with another taxonomy".into()));
    }
    writeln!(sink, "{LABELING_MAGIC} taxonomy_sha256={} topics={}", labeling.taxonomy_sha256, labeling.topics())?;
    writeln!(sink, "{LABELING_COLUMNS}")?;
    for (k, status) in labeling.statuses.iter().enumerate() {
        let detail = match status {
            TopicStatus::Unreviewed => String::new(),
            TopicStatus::Excluded(reason) => escape(reason),
            TopicStatus::Labeled(set) => set
                .iter()
                .map(|&i| taxonomy.names()[i].as_str())
                .collect::<Vec<_>>()
                .join(";"),
        };
        writeln!(sink, "{k}\t{}\t{detail}", status.keyword())?;
    }
    sink.flush()?;
    Ok(())
}

/// Write to a sibling temporary file and rename it over `path`.
pub fn save_labeling_file(labeling: &TopicLabeling, taxonomy: &Taxonomy, path: &Path) -> Result<(), LabelingError> {
    let tmp = path.with_extension("tmp");
    {
        let file = std::fs::File::create(&tmp)?;
        let mut writer = io::BufWriter::new(file);
        save_labeling(labeling, taxonomy, &mut writer)?;
        writer.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_labeling<R: BufRead>(source: R, taxonomy: &Taxonomy, topics: usize) -> Result<TopicLabeling, LabelingError> {
    let mut statuses: Vec<Option<TopicStatus>> = vec![None; topics];
    let mut lines = source.lines().enumerate();
    let malformed = |line: usize, reason: &str| LabelingError::Malformed {
        line,
        reason: reason.to_string(),
    };

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(malformed(1, "empty labeling file")),
    };
    let hash = header
        .strip_prefix(LABELING_MAGIC)
        .and_then(|rest| rest.split_whitespace().find_map(|kv| kv.strip_prefix("taxonomy_sha256=")))
        .ok_or_else(|| malformed(1, "missing labeling header"))?;
    if hash != taxonomy.digest() {
        return Err(LabelingError::TaxonomyMismatch(
            "file header names a different taxonomy".into(),
        ));
    }

    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line == LABELING_COLUMNS || line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (id, status, detail) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), c) => (a, b, c.unwrap_or("")),
            _ => return Err(malformed(line_no, "expected topic_id<TAB>status<TAB>detail")),
        };
        let topic: usize = id.parse().map_err(|_| malformed(line_no, "topic id is not an integer"))?;
        if topic >= topics {
            return Err(LabelingError::TopicOutOfRange {
                line: line_no,
                topic,
                topics,
            });
        }
        let parsed = match status {
            "unreviewed" if detail.is_empty() => TopicStatus::Unreviewed,
            "unreviewed" => return Err(malformed(line_no, "unreviewed topics carry no detail")),
            "excluded" => TopicStatus::Excluded(
                unescape(detail).ok_or_else(|| malformed(line_no, "bad escape in reason"))?,
            ),
            "labeled" => {
                let mut set = BTreeSet::new();
                for label in detail.split(';') {
                    let idx = taxonomy.index_of(label).ok_or_else(|| LabelingError::UnknownLabel {
                        line: line_no,
                        label: label.to_string(),
                    })?;
                    set.insert(idx);
                }
                TopicStatus::Labeled(set)
            }
            other => return Err(malformed(line_no, &format!("unknown status `{other}`"))),
        };
        if statuses[topic].replace(parsed).is_some() {
            return Err(LabelingError::DuplicateTopic { line: line_no, topic });
        }
    }
    let statuses = statuses
        .into_iter()
        .enumerate()
        .map(|(k, s)| s.ok_or(LabelingError::MissingTopic(k)))
        .collect::<Result<_, _>>()?;
    Ok(TopicLabeling {
        taxonomy_sha256: taxonomy.digest(),
        taxonomy_len: taxonomy.len(),
        statuses,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconciled {
    pub merged: TopicLabeling,
    pub conflicts: Vec<usize>,
    /// Fraction of topics on which both coders agree exactly.
    pub agreement_rate: f64,
}

/// Merge two coders' labelings. Disagreements become conflicts and are reset
/// to unreviewed in the merged labeling.
pub fn reconcile(a: &TopicLabeling, b: &TopicLabeling) -> Result<Reconciled, LabelingError> {
    if a.taxonomy_sha256 != b.taxonomy_sha256 {
        return Err(LabelingError::TaxonomyMismatch("labelings use different taxonomies".into()));
    }
    if a.topics() != b.topics() {
        return Err(LabelingError::TopicCountMismatch(a.topics(), b.topics()));
    }
    let mut merged = a.clone();
    let mut conflicts = Vec::new();
    for k in 0..a.topics() {
        if a.statuses[k] != b.statuses[k] {
            conflicts.push(k);
            merged.statuses[k] = TopicStatus::Unreviewed;
        }
    }
    let agreement_rate = if a.topics() == 0 {
        1.0
    } else {
        (a.topics() - conflicts.len()) as f64 / a.topics() as f64
    };
    Ok(Reconciled {
        merged,
        conflicts,
        agreement_rate,
    })
}

/// Number of top words shown per topic during review.
pub const REVIEW_TOP_WORDS: usize = 10;

/// What the reviewer typed for one topic.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Command {
    Labels(Vec<usize>),
    Exclude(String),
    Skip,
    Quit,
}

fn parse_command(input: &str, taxonomy_len: usize) -> Result<Command, String> {
    let input = input.trim();
    match input {
        "q" => return Ok(Command::Quit),
        "s" => return Ok(Command::Skip),
        _ => {}
    }
    if input == "x" {
        return Ok(Command::Exclude(String::new()));
    }
    if let Some(reason) = input.strip_prefix("x ") {
        return Ok(Command::Exclude(reason.trim().to_string()));
    }
    let mut labels = Vec::new();
    for part in input.split(',') {
        let n: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("`{}` is not a label number", part.trim()))?;
        if n == 0 || n > taxonomy_len {
            return Err(format!("label number {n} is outside 1..={taxonomy_len}"));
        }
        labels.push(n - 1);
    }
    Ok(Command::Labels(labels))
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, name) in self.names.iter().enumerate() {
            writeln!(f, "  {:>2}. {name}", i + 1)?;
        }
        Ok(())
    }
}

/// Walk the unreviewed topics of `existing`, showing top words and keyword
/// suggestions, and read one command per topic from `input`:
///
/// * `3` or `1,10`: label with taxonomy entries (1-based)
/// * `x <reason>`: exclude
/// * `s`: skip
/// * `q`: save and quit
///
/// `persist` is called after every accepted decision and once on exit. An
/// invalid command re-prompts without changing state. End of input acts as
/// `q`.
#[allow(clippy::too_many_arguments)]
pub fn interactive_label<R, W, P>(
    model: &TopicModel,
    vocabulary: &Vocabulary,
    taxonomy: &Taxonomy,
    rules: &KeywordRules,
    existing: TopicLabeling,
    mut input: R,
    mut output: W,
    mut persist: P,
) -> Result<TopicLabeling, LabelingError>
where
    R: BufRead,
    W: Write,
    P: FnMut(&TopicLabeling) -> Result<(), LabelingError>,
{
    if existing.topics() != model.topics() {
        return Err(LabelingError::TopicCountMismatch(existing.topics(), model.topics()));
    }
    if existing.taxonomy_sha256 != taxonomy.digest() {
        return Err(LabelingError::TaxonomyMismatch("labeling was made with another taxonomy".into()));
    }
    let mut labeling = existing;
    let pending: Vec<usize> = labeling.unreviewed().collect();
    writeln!(output, "Labels:\n{taxonomy}")?;
    writeln!(output, "Commands: label numbers (e.g. 1,10), `x <reason>` to exclude, `s` to skip, `q` to save and quit.")?;

    let mut line = String::new();
    'topics: for (pos, &k) in pending.iter().enumerate() {
        let top = model
            .top_tokens(vocabulary, k, REVIEW_TOP_WORDS)
            .map_err(|e| LabelingError::Io(e.to_string()))?;
        writeln!(output, "\nTopic {k} ({} of {}):", pos + 1, pending.len())?;
        for (token, p) in &top {
            writeln!(output, "  {token:<24} {p:.4}")?;
        }
        let suggestions = suggest(&top, rules, taxonomy);
        if suggestions.is_empty() {
            writeln!(output, "Suggestions: none")?;
        } else {
            let text: Vec<String> = suggestions
                .iter()
                .map(|(label, n)| format!("{label} ({n})"))
                .collect();
            writeln!(output, "Suggestions: {}", text.join(", "))?;
        }
        loop {
            write!(output, "> ")?;
            output.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                break 'topics;
            }
            match parse_command(&line, taxonomy.len()) {
                Ok(Command::Quit) => break 'topics,
                Ok(Command::Skip) => break,
                Ok(Command::Exclude(reason)) => {
                    labeling.exclude(k, reason);
                    persist(&labeling)?;
                    break;
                }
                Ok(Command::Labels(labels)) => {
                    labeling.label(k, labels)?;
                    persist(&labeling)?;
                    break;
                }
                Err(msg) => writeln!(output, "{msg}; try again")?,
            }
        }
    }
    persist(&labeling)?;
    Ok(labeling)
}
