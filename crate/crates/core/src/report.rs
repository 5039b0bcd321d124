//! Label distributions: per-topic corpus mass, aggregation over a topic
//! labeling, competition ranking, label combination and rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{Taxonomy, TopicLabeling, TopicStatus};
use crate::topicmodel::TopicModel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("topic {0} is unreviewed; finish labeling or use lenient mode")]
    Unreviewed(usize),
    #[error("no topic carries a label, nothing to normalize")]
    NoLabeledMass,
    #[error("{masses} topic masses for a labeling of {topics} topics")]
    TopicCountMismatch { masses: usize, topics: usize },
    #[error("labeling was made with another taxonomy")]
    TaxonomyMismatch,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("a combination needs at least two distinct labels")]
    GroupTooSmall,
    #[error("label `{0}` already exists")]
    DuplicateLabel(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassMode {
    /// Topic share of all tokens, from document mixtures weighted by length.
    TokenMass,
    /// Every topic counts the same.
    Uniform,
}

impl std::str::FromStr for MassMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token-mass" => Ok(MassMode::TokenMass),
            "uniform" => Ok(MassMode::Uniform),
            other => Err(format!("unknown mass mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMassVector {
    pub weights: Vec<f64>,
    pub mode: MassMode,
}

/// Per-topic weights summing to one.
pub fn topic_mass(model: &TopicModel, mode: MassMode) -> TopicMassVector {
    let k = model.topics();
    let weights = match mode {
        MassMode::Uniform => vec![1.0 / k as f64; k],
        MassMode::TokenMass => {
            let mut w = vec![0.0; k];
            let mut total = 0.0;
            for d in 0..model.num_docs() {
                let len = model.doc_len(d) as f64;
                total += len;
                for (acc, p) in w.iter_mut().zip(model.theta(d)) {
                    *acc += p * len;
                }
            }
            if total > 0.0 {
                w.iter_mut().for_each(|x| *x /= total);
                w
            } else {
                vec![1.0 / k as f64; k]
            }
        }
    };
    TopicMassVector { weights, mode }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelShare {
    pub label: String,
    /// Unrounded percentage.
    pub raw: f64,
    /// Percentage rounded half-up to one decimal.
    pub percent: f64,
    /// Competition rank over positive shares; `None` renders as `NA`.
    pub rank: Option<usize>,
}

/// One row per label, in taxonomy order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub rows: Vec<LabelShare>,
}

/// Half-up rounding to one decimal. The small offset absorbs binary
/// representation error for values such as 0.05 that print as exact ties.
pub fn round_one_decimal(x: f64) -> f64 {
    ((x * 10.0) + 0.5 + 1e-9).floor() / 10.0
}

fn same_share(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl LabelDistribution {
    /// Build from `(label, unrounded percentage)` pairs; rounding and ranks
    /// are derived.
    pub fn from_raw<I, S>(raw: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut dist = LabelDistribution {
            rows: raw
                .into_iter()
                .map(|(label, raw)| LabelShare {
                    label: label.into(),
                    raw,
                    percent: round_one_decimal(raw),
                    rank: None,
                })
                .collect(),
        };
        dist.rerank();
        dist
    }

    fn rerank(&mut self) {
        let raws: Vec<f64> = self.rows.iter().map(|r| r.raw).collect();
        for row in &mut self.rows {
            row.rank = (row.raw > 0.0 && !same_share(row.raw, 0.0)).then(|| {
                1 + raws
                    .iter()
                    .filter(|&&other| other > row.raw && !same_share(other, row.raw))
                    .count()
            });
        }
    }

    pub fn get(&self, label: &str) -> Option<&LabelShare> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Rows for display: positive shares by descending value (ties keep
    /// taxonomy order), then zero shares in taxonomy order.
    pub fn display_order(&self) -> Vec<&LabelShare> {
        let mut ranked: Vec<&LabelShare> = self.rows.iter().filter(|r| r.rank.is_some()).collect();
        ranked.sort_by_key(|r| r.rank);
        ranked.extend(self.rows.iter().filter(|r| r.rank.is_none()));
        ranked
    }
}

/// Aggregate topic masses into label percentages. Excluded topics count for
/// nothing; a topic with `m` labels gives `1/m` of its mass to each. With
/// `lenient`, unreviewed topics are treated as excluded.
pub fn distribute(
    masses: &TopicMassVector,
    labeling: &TopicLabeling,
    taxonomy: &Taxonomy,
    lenient: bool,
) -> Result<LabelDistribution, ReportError> {
    if masses.weights.len() != labeling.topics() {
        return Err(ReportError::TopicCountMismatch {
            masses: masses.weights.len(),
            topics: labeling.topics(),
        });
    }
    if labeling.taxonomy_sha256() != taxonomy.digest() {
        return Err(ReportError::TaxonomyMismatch);
    }
    let mut label_mass = vec![0.0; taxonomy.len()];
    for (k, (status, &w)) in labeling.statuses().iter().zip(&masses.weights).enumerate() {
        match status {
            TopicStatus::Unreviewed if !lenient => return Err(ReportError::Unreviewed(k)),
            TopicStatus::Unreviewed | TopicStatus::Excluded(_) => {}
            TopicStatus::Labeled(set) => {
                let share = w / set.len() as f64;
                for &label in set {
                    label_mass[label] += share;
                }
            }
        }
    }
    let total: f64 = label_mass.iter().sum();
    if !(total > 0.0) {
        return Err(ReportError::NoLabeledMass);
    }
    Ok(LabelDistribution::from_raw(
        taxonomy
            .names()
            .iter()
            .zip(label_mass)
            .map(|(name, m)| (name.clone(), 100.0 * m / total)),
    ))
}

/// Replace the labels in `group` by one label `new_name` carrying their
/// summed unrounded share, placed where the first group member was.
pub fn combine<S: AsRef<str>>(
    dist: &LabelDistribution,
    group: &[S],
    new_name: &str,
) -> Result<LabelDistribution, ReportError> {
    let mut members: Vec<usize> = Vec::new();
    for label in group {
        let label = label.as_ref();
        let idx = dist
            .rows
            .iter()
            .position(|r| r.label == label)
            .ok_or_else(|| ReportError::UnknownLabel(label.to_string()))?;
        if !members.contains(&idx) {
            members.push(idx);
        }
    }
    if members.len() < 2 {
        return Err(ReportError::GroupTooSmall);
    }
    if dist
        .rows
        .iter()
        .enumerate()
        .any(|(i, r)| r.label == new_name && !members.contains(&i))
    {
        return Err(ReportError::DuplicateLabel(new_name.to_string()));
    }
    let first = *members.iter().min().expect("non-empty");
    let sum: f64 = members.iter().map(|&i| dist.rows[i].raw).sum();
    let raw = dist.rows.iter().enumerate().filter_map(|(i, r)| {
        if i == first {
            Some((new_name.to_string(), sum))
        } else if members.contains(&i) {
            None
        } else {
            Some((r.label.clone(), r.raw))
        }
    });
    Ok(LabelDistribution::from_raw(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    TextTable,
    Delimited,
    Records,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text-table" | "text" => Ok(RenderFormat::TextTable),
            "delimited" | "tsv" => Ok(RenderFormat::Delimited),
            "structured-records" | "records" | "jsonl" => Ok(RenderFormat::Records),
            other => Err(format!("unknown render format `{other}`")),
        }
    }
}

const ISSUE: &str = "Economic Issue";
const DISTRIBUTION: &str = "Distribution(%)";
const RANK: &str = "Rank";

fn rank_text(rank: Option<usize>) -> String {
    rank.map_or_else(|| "NA".to_string(), |r| r.to_string())
}

#[derive(Serialize, Deserialize)]
struct Record {
    label: String,
    percentage: f64,
    rank: String,
}

/// Render rows in display order.
pub fn render(dist: &LabelDistribution, format: RenderFormat) -> String {
    let rows = dist.display_order();
    let mut out = String::new();
    match format {
        RenderFormat::TextTable => {
            let cells: Vec<(String, String, String)> = rows
                .iter()
                .map(|r| (r.label.clone(), format!("{:.1}%", r.percent), rank_text(r.rank)))
                .collect();
            let w0 = cells.iter().map(|c| c.0.chars().count()).chain([ISSUE.len()]).max().unwrap_or(0);
            let w1 = cells.iter().map(|c| c.1.len()).chain([DISTRIBUTION.len()]).max().unwrap_or(0);
            let w2 = cells.iter().map(|c| c.2.len()).chain([RANK.len()]).max().unwrap_or(0);
            let _ = writeln!(out, "{ISSUE:<w0$}  {DISTRIBUTION:>w1$}  {RANK:>w2$}");
            let _ = writeln!(out, "{}  {}  {}", "-".repeat(w0), "-".repeat(w1), "-".repeat(w2));
            for (label, pct, rank) in cells {
                let pad = w0 - label.chars().count();
                let _ = writeln!(out, "{label}{}  {pct:>w1$}  {rank:>w2$}", " ".repeat(pad));
            }
        }
        RenderFormat::Delimited => {
            out.push_str("label\tpercentage\trank\n");
            for r in rows {
                let _ = writeln!(out, "{}\t{:.1}\t{}", r.label, r.percent, rank_text(r.rank));
            }
        }
        RenderFormat::Records => {
            for r in rows {
                let record = Record {
                    label: r.label.clone(),
                    percentage: r.percent,
                    rank: rank_text(r.rank),
                };
                out.push_str(&serde_json::to_string(&record).expect("plain record"));
                out.push('\n');
            }
        }
    }
    out
}

/// A row read back from rendered output.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedRow {
    pub label: String,
    pub percent: f64,
    pub rank: Option<usize>,
}

fn parse_rank(text: &str, line: usize) -> Result<Option<usize>, ReportError> {
    if text == "NA" {
        return Ok(None);
    }
    text.parse().map(Some).map_err(|_| ReportError::Parse {
        line,
        reason: format!("bad rank `{text}`"),
    })
}

/// Parse delimited or record output produced by [`render`].
pub fn parse_rendered(text: &str, format: RenderFormat) -> Result<Vec<RenderedRow>, ReportError> {
    let bad = |line: usize, reason: &str| ReportError::Parse {
        line,
        reason: reason.to_string(),
    };
    let mut rows = Vec::new();
    match format {
        RenderFormat::Delimited => {
            for (i, line) in text.lines().enumerate().skip(1) {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 3 {
                    return Err(bad(i + 1, "expected three fields"));
                }
                rows.push(RenderedRow {
                    label: f[0].to_string(),
                    percent: f[1].parse().map_err(|_| bad(i + 1, "bad percentage"))?,
                    rank: parse_rank(f[2], i + 1)?,
                });
            }
        }
        RenderFormat::Records => {
            for (i, line) in text.lines().enumerate() {
                let r: Record = serde_json::from_str(line).map_err(|e| bad(i + 1, &e.to_string()))?;
                rows.push(RenderedRow {
                    label: r.label,
                    percent: r.percentage,
                    rank: parse_rank(&r.rank, i + 1)?,
                });
            }
        }
        RenderFormat::TextTable => return Err(bad(0, "text tables are not parsed")),
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topicmodel::LdaConfig;

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_one_decimal(0.05), 0.1);
        assert_eq!(round_one_decimal(1.25), 1.3);
        assert_eq!(round_one_decimal(28.84), 28.8);
        assert_eq!(round_one_decimal(0.0), 0.0);
    }

    #[test]
    fn uniform_and_single_topic_masses() {
        let m = TopicModel::from_parts(4, 1, vec![1.0; 4], vec![0.25; 4], vec![3], LdaConfig::new(4)).unwrap();
        assert_eq!(topic_mass(&m, MassMode::Uniform).weights, vec![0.25; 4]);
        let one = TopicModel::from_parts(1, 1, vec![1.0], vec![1.0, 1.0], vec![2, 5], LdaConfig::new(1)).unwrap();
        assert_eq!(topic_mass(&one, MassMode::TokenMass).weights, vec![1.0]);
        assert_eq!(topic_mass(&one, MassMode::Uniform).weights, vec![1.0]);
    }

    #[test]
    fn token_mass_weights_by_length() {
        let m = TopicModel::from_parts(2, 1, vec![1.0, 1.0], vec![1.0, 0.0, 0.5, 0.5], vec![1, 3], LdaConfig::new(2))
            .unwrap();
        let w = topic_mass(&m, MassMode::TokenMass).weights;
        assert!((w[0] - 2.5 / 4.0).abs() < 1e-15 && (w[1] - 1.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn single_label() {
        let t = Taxonomy::default();
        let mut l = TopicLabeling::new(1, &t);
        l.label(0, [3]).unwrap();
        let masses = TopicMassVector { weights: vec![1.0], mode: MassMode::Uniform };
        let d = distribute(&masses, &l, &t, false).unwrap();
        let e = d.get("Entitlement").unwrap();
        assert_eq!((e.percent, e.rank), (100.0, Some(1)));
        assert_eq!(d.get("Taxes").unwrap().rank, None);
    }

    #[test]
    fn distribute_errors_and_splitting() {
        let t = Taxonomy::default();
        let mut l = TopicLabeling::new(3, &t);
        let masses = TopicMassVector { weights: vec![0.5, 0.25, 0.25], mode: MassMode::Uniform };
        assert_eq!(distribute(&masses, &l, &t, false), Err(ReportError::Unreviewed(0)));
        assert_eq!(distribute(&masses, &l, &t, true), Err(ReportError::NoLabeledMass));
        l.label(0, [0, 9]).unwrap();
        l.label(1, [9]).unwrap();
        l.exclude(2, "off topic");
        let d = distribute(&masses, &l, &t, false).unwrap();
        assert!((d.get("Minimum Wage").unwrap().raw - 200.0 / 3.0).abs() < 1e-9);
        assert!((d.get("Jobs & Income").unwrap().raw - 100.0 / 3.0).abs() < 1e-9);
        let short = TopicMassVector { weights: vec![1.0], mode: MassMode::Uniform };
        assert!(matches!(distribute(&short, &l, &t, false), Err(ReportError::TopicCountMismatch { .. })));
    }

    #[test]
    fn combine_rules() {
        let d = LabelDistribution::from_raw([("a", 50.0), ("b", 30.0), ("c", 20.0), ("z1", 0.0), ("z2", 0.0)]);
        let c = combine(&d, &["b", "c"], "b+c").unwrap();
        assert_eq!(c.rows.len(), 4);
        assert_eq!(c.get("b+c").unwrap().raw, 50.0);
        assert_eq!(c.get("b+c").unwrap().rank, Some(1));
        assert_eq!(c.get("a").unwrap().rank, Some(1));
        let zeros = combine(&d, &["z1", "z2"], "zz").unwrap();
        assert_eq!(zeros.get("zz").unwrap().rank, None);
        assert_eq!(combine(&d, &["a", "q"], "x"), Err(ReportError::UnknownLabel("q".into())));
        assert_eq!(combine(&d, &["a", "a"], "x"), Err(ReportError::GroupTooSmall));
        assert_eq!(combine(&d, &["a", "b"], "c"), Err(ReportError::DuplicateLabel("c".into())));
    }

    #[test]
    fn render_formats() {
        let d = LabelDistribution::from_raw([("Zero", 0.0), ("Low", 25.0), ("High", 75.0)]);
        let text = render(&d, RenderFormat::TextTable);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Economic Issue"));
        assert!(lines[0].contains("Distribution(%)") && lines[0].ends_with("Rank"));
        assert!(lines[2].starts_with("High") && lines[2].ends_with(" 1"));
        assert!(lines[4].starts_with("Zero") && lines[4].ends_with("NA"));

        let tsv = render(&d, RenderFormat::Delimited);
        assert_eq!(tsv, "label\tpercentage\trank\nHigh\t75.0\t1\nLow\t25.0\t2\nZero\t0.0\tNA\n");
        let rec = render(&d, RenderFormat::Records);
        assert_eq!(rec.lines().next().unwrap(), r#"{"label":"High","percentage":75.0,"rank":"1"}"#);

        let empty = LabelDistribution::default();
        assert_eq!(render(&empty, RenderFormat::Delimited), "label\tpercentage\trank\n");
        assert_eq!(render(&empty, RenderFormat::TextTable).lines().count(), 2);
        assert_eq!(render(&empty, RenderFormat::Records), "");
    }
}
