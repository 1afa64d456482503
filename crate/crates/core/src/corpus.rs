//! Video records and their line-delimited JSON representation.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::labeling::RaidLabel;

/// Where a video was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// The video's URL was posted in a thread on the fringe board.
    #[serde(alias = "FringeLinked")]
    FringeLinked,
    /// Sampled at random from the hosting platform.
    #[serde(alias = "PlatformRandom")]
    PlatformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptToken {
    pub token: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentEvent {
    #[serde(deserialize_with = "de_seconds")]
    pub timestamp_s: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadLink {
    pub thread_id: String,
    #[serde(deserialize_with = "de_seconds_vec")]
    pub post_timestamps_s: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub title: String,
    pub description: String,
    pub tags: Vec<String>,
    pub category: String,
    pub duration_s: f64,
    #[serde(default)]
    pub transcript: Vec<TranscriptToken>,
    #[serde(default)]
    pub captions: Vec<String>,
    pub comments: Vec<CommentEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thread_link: Option<ThreadLink>,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<RaidLabel>,
}

impl VideoRecord {
    /// A record with only an id and source set; everything else empty.
    pub fn new(video_id: impl Into<String>, source: Source) -> Self {
        VideoRecord {
            video_id: video_id.into(),
            title: String::new(),
            description: String::new(),
            tags: Vec::new(),
            category: String::new(),
            duration_s: 0.0,
            transcript: Vec::new(),
            captions: Vec::new(),
            comments: Vec::new(),
            thread_link: None,
            source,
            label: None,
        }
    }

    /// Sorts comments and thread posts by timestamp (stable).
    pub fn normalize(&mut self) {
        self.comments.sort_by_key(|c| c.timestamp_s);
        if let Some(link) = &mut self.thread_link {
            link.post_timestamps_s.sort_unstable();
        }
    }
}

/// Timestamps are whole seconds; fractional input is truncated toward zero.
fn de_seconds<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<i64, D::Error> {
    let n = serde_json::Number::deserialize(de)?;
    number_to_seconds(&n).ok_or_else(|| serde::de::Error::custom(format!("invalid timestamp {n}")))
}

fn de_seconds_vec<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<i64>, D::Error> {
    let ns = Vec::<serde_json::Number>::deserialize(de)?;
    ns.iter()
        .map(|n| {
            number_to_seconds(n)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid timestamp {n}")))
        })
        .collect()
}

fn number_to_seconds(n: &serde_json::Number) -> Option<i64> {
    if let Some(i) = n.as_i64() {
        return Some(i);
    }
    let f = n.as_f64()?;
    (f.is_finite() && f.abs() < 9.0e15).then(|| f.trunc() as i64)
}

/// One failed invariant of a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every per-record invariant. An empty result means the record is valid.
pub fn validate(record: &VideoRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.video_id.is_empty() {
        out.push(Violation::new("video_id", "video_id is empty"));
    }
    if !(record.duration_s.is_finite() && record.duration_s >= 0.0) {
        out.push(Violation::new("duration_s", "duration must be a non-negative number"));
    }
    for (i, tok) in record.transcript.iter().enumerate() {
        if tok.token.is_empty() {
            out.push(Violation::new(format!("transcript[{i}].token"), "token is empty"));
        }
        if !(0.0..=1.0).contains(&tok.confidence) {
            out.push(Violation::new(
                format!("transcript[{i}].confidence"),
                "confidence out of range",
            ));
        }
    }
    for (i, c) in record.comments.iter().enumerate() {
        if c.timestamp_s < 0 {
            out.push(Violation::new(
                format!("comments[{i}].timestamp_s"),
                "timestamp is negative",
            ));
        }
    }
    if record.comments.windows(2).any(|w| w[0].timestamp_s > w[1].timestamp_s) {
        out.push(Violation::new("comments", "comments not sorted by timestamp"));
    }
    if let Some(link) = &record.thread_link {
        if link.post_timestamps_s.is_empty() {
            out.push(Violation::new(
                "thread_link.post_timestamps_s",
                "thread has no posts",
            ));
        }
        if link.post_timestamps_s.windows(2).any(|w| w[0] > w[1]) {
            out.push(Violation::new(
                "thread_link.post_timestamps_s",
                "post timestamps not sorted",
            ));
        }
        if record.source == Source::PlatformRandom {
            out.push(Violation::new(
                "thread_link",
                "platform_random record must not carry a thread_link",
            ));
        }
    }
    out
}

/// Parses one JSONL line into a normalized record without checking invariants.
pub fn parse_line(line: &str, line_no: usize) -> Result<VideoRecord> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if !value.is_object() {
        return Err(Error::Parse {
            line: line_no,
            message: "expected a JSON object".into(),
        });
    }
    let mut record: VideoRecord =
        serde_path_to_error::deserialize(value).map_err(|e| schema_error(e, line_no))?;
    record.normalize();
    Ok(record)
}

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>, line: usize) -> Error {
    let inner = e.inner().to_string();
    let path = e.path().to_string();
    // serde reports missing fields at the parent path
    let field = match inner.strip_prefix("missing field `") {
        Some(rest) => {
            let name = rest.split('`').next().unwrap_or_default();
            if path == "." {
                name.to_string()
            } else {
                format!("{path}.{name}")
            }
        }
        None => path,
    };
    Error::Schema {
        line,
        field,
        message: inner,
    }
}

/// Reads and validates a JSONL corpus. Blank lines are skipped.
pub fn ingest(path: impl AsRef<Path>) -> Result<Vec<VideoRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_records(reader: impl BufRead) -> Result<Vec<VideoRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, line_no)?;
        if let Some(v) = validate(&record).into_iter().next() {
            return Err(Error::Schema {
                line: line_no,
                field: v.field,
                message: v.message,
            });
        }
        if !seen.insert(record.video_id.clone()) {
            return Err(Error::DuplicateId {
                line: line_no,
                video_id: record.video_id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Per-line outcome of a lenient validation pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineReport {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub lines: usize,
    pub valid: usize,
    pub invalid: Vec<LineReport>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.invalid.is_empty()
    }
}

/// Validates every line of a corpus and collects problems instead of stopping
/// at the first one.
pub fn validation_report(path: impl AsRef<Path>) -> Result<ValidationReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = ValidationReport {
        lines: 0,
        valid: 0,
        invalid: Vec::new(),
    };
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let line_no = i + 1;
        match parse_line(&line, line_no) {
            Ok(record) => {
                let mut problems: Vec<String> =
                    validate(&record).iter().map(ToString::to_string).collect();
                if !seen.insert(record.video_id.clone()) {
                    problems.push(format!("video_id: duplicate video_id `{}`", record.video_id));
                }
                if problems.is_empty() {
                    report.valid += 1;
                } else {
                    report.invalid.push(LineReport {
                        line: line_no,
                        video_id: Some(record.video_id),
                        violations: problems,
                    });
                }
            }
            Err(e) => report.invalid.push(LineReport {
                line: line_no,
                video_id: None,
                violations: vec![e.to_string()],
            }),
        }
    }
    Ok(report)
}

pub fn write_records(path: impl AsRef<Path>, records: &[VideoRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
