use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// One archived post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl RawPost {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawPost {
            id: id.into(),
            text: text.into(),
            created_at: None,
            lang: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON object per line.
    RecordLines,
    /// Tab-separated with a header row and backslash escapes.
    Delimited,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record-lines" | "jsonl" => Ok(InputFormat::RecordLines),
            "delimited" | "tsv" => Ok(InputFormat::Delimited),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub posts: Vec<RawPost>,
    /// Malformed records skipped in non-strict mode.
    pub skipped: usize,
    /// `(line, reason)` for every skipped record.
    pub problems: Vec<(usize, String)>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdField {
    Text(String),
    Number(u64),
}

#[derive(Deserialize)]
struct Record {
    id: Option<IdField>,
    text: Option<String>,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    lang: Option<String>,
}

/// Read posts from `source`. Blank lines are ignored. In strict mode the first
/// malformed record aborts with its line number; otherwise it is skipped and
/// counted. Duplicate ids are malformed.
pub fn ingest<R: BufRead>(
    mut source: R,
    format: InputFormat,
    strict: bool,
) -> Result<Ingested, CorpusError> {
    let mut out = Ingested::default();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    let mut columns: Option<Columns> = None;

    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        let parsed = match std::str::from_utf8(&buf) {
            Err(_) => Err("invalid UTF-8".to_string()),
            Ok(line) if line.trim().is_empty() => continue,
            Ok(line) => match format {
                InputFormat::RecordLines => parse_record_line(line),
                InputFormat::Delimited => match &columns {
                    None => {
                        columns = Some(Columns::from_header(line)?);
                        continue;
                    }
                    Some(cols) => cols.parse_row(line),
                },
            },
        };
        let parsed = parsed.and_then(|post| {
            if seen_ids.insert(post.id.clone()) {
                Ok(post)
            } else {
                Err(format!("duplicate id `{}`", post.id))
            }
        });
        match parsed {
            Ok(post) => out.posts.push(post),
            Err(reason) if strict => {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    reason,
                })
            }
            Err(reason) => {
                out.skipped += 1;
                out.problems.push((line_no, reason));
            }
        }
    }
    Ok(out)
}

fn finish(
    id: Option<String>,
    text: Option<String>,
    created_at: Option<String>,
    lang: Option<String>,
) -> Result<RawPost, String> {
    let id = id.filter(|s| !s.is_empty()).ok_or("missing id")?;
    let text = text.ok_or("missing text")?;
    let created_at = created_at.filter(|s| !s.is_empty());
    if let Some(ts) = &created_at {
        chrono::DateTime::parse_from_rfc3339(ts)
            .map_err(|e| format!("created_at `{ts}` is not an ISO-8601 timestamp: {e}"))?;
    }
    Ok(RawPost {
        id,
        text,
        created_at,
        lang: lang.filter(|s| !s.is_empty()),
    })
}

fn parse_record_line(line: &str) -> Result<RawPost, String> {
    let record: Record = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = record.id.map(|id| match id {
        IdField::Text(s) => s,
        IdField::Number(n) => n.to_string(),
    });
    finish(id, record.text, record.created_at, record.lang)
}

struct Columns {
    width: usize,
    id: usize,
    text: usize,
    created_at: Option<usize>,
    lang: Option<usize>,
}

impl Columns {
    fn from_header(line: &str) -> Result<Self, CorpusError> {
        let names: Vec<&str> = line.split('\t').map(str::trim).collect();
        let find = |name: &str| names.iter().position(|n| *n == name);
        Ok(Columns {
            width: names.len(),
            id: find("id").ok_or(CorpusError::MissingColumn("id"))?,
            text: find("text").ok_or(CorpusError::MissingColumn("text"))?,
            created_at: find("created_at"),
            lang: find("lang"),
        })
    }

    fn parse_row(&self, line: &str) -> Result<RawPost, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != self.width {
            return Err(format!("expected {} fields, found {}", self.width, fields.len()));
        }
        let get = |i: usize| unescape(fields[i]);
        let opt = |i: Option<usize>| i.map(get).transpose();
        finish(
            Some(get(self.id)?),
            Some(get(self.text)?),
            opt(self.created_at)?,
            opt(self.lang)?,
        )
    }
}

fn unescape(field: &str) -> Result<String, String> {
    if !field.contains('\\') {
        return Ok(field.to_string());
    }
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

/// Write posts as record lines, one JSON object per line.
pub fn write_record_lines<'a, W, I>(mut sink: W, posts: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RawPost>,
{
    for post in posts {
        serde_json::to_writer(&mut sink, post)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(input: &str, format: InputFormat, strict: bool) -> Result<Ingested, CorpusError> {
        ingest(input.as_bytes(), format, strict)
    }

    #[test]
    fn record_line_identity() {
        let got = lines(r#"{"id":"1","text":"hello"}"#, InputFormat::RecordLines, true).unwrap();
        assert_eq!(got.posts, vec![RawPost::new("1", "hello")]);
        assert!(lines("", InputFormat::RecordLines, true).unwrap().posts.is_empty());
    }

    #[test]
    fn numeric_ids_and_optional_fields() {
        let input = concat!(
            r#"{"id":42,"text":"a","created_at":"2016-01-02T03:04:05Z","lang":"en"}"#,
            "\n\n",
            r#"{"id":"x","text":""}"#
        );
        let got = lines(input, InputFormat::RecordLines, true).unwrap();
        assert_eq!(got.posts[0].id, "42");
        assert_eq!(got.posts[0].lang.as_deref(), Some("en"));
        assert_eq!(got.posts[1].text, "");
    }

    #[test]
    fn malformed_records() {
        let input = concat!(
            r#"{"id":"1","text":"ok"}"#, "\n",
            r#"{"id":"2"}"#, "\n",
            "not json\n",
            r#"{"id":"1","text":"dup id"}"#, "\n",
            r#"{"id":"3","text":"bad ts","created_at":"yesterday"}"#, "\n",
        );
        let got = lines(input, InputFormat::RecordLines, false).unwrap();
        assert_eq!(got.posts.len(), 1);
        assert_eq!(got.skipped, 4);
        assert_eq!(got.problems[0].0, 2);
        match lines(input, InputFormat::RecordLines, true) {
            Err(CorpusError::Malformed { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delimited_with_escapes() {
        let input = "lang\tid\ttext\nen\t7\tline\\none\\ttab \\\\\n\t8\tplain\n\t9\tbad\\q\n";
        let got = lines(input, InputFormat::Delimited, false).unwrap();
        assert_eq!(got.posts.len(), 2);
        assert_eq!(got.posts[0].text, "line\none\ttab \\");
        assert_eq!(got.posts[0].lang.as_deref(), Some("en"));
        assert_eq!(got.posts[1].lang, None);
        assert_eq!(got.skipped, 1);
        assert!(matches!(
            lines("id\tbody\n", InputFormat::Delimited, false),
            Err(CorpusError::MissingColumn("text"))
        ));
    }

    #[test]
    fn record_lines_round_trip() {
        let posts = vec![RawPost::new("a", "x \"quoted\"\nnewline"), RawPost::new("b", "")];
        let mut buf = Vec::new();
        write_record_lines(&mut buf, &posts).unwrap();
        let back = lines(std::str::from_utf8(&buf).unwrap(), InputFormat::RecordLines, true).unwrap();
        assert_eq!(back.posts, posts);
    }
}
