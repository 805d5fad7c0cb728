//! Labeled (question, context, response) records: schema, JSONL I/O and splits.

mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use synth::{
    separation_mock_table, synthesize_annotated, synthesize_dataset, with_noise, ClaimAnnotation, SeparationParams,
    SyntheticCorpus, DEFAULT_QUESTIONS,
};

/// Percentage of questions routed to the calibration split.
pub const CALIBRATION_PERCENT: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Correct,
    Partial,
    Wrong,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Correct, Label::Partial, Label::Wrong];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Correct => "correct",
            Label::Partial => "partial",
            Label::Wrong => "wrong",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("expected correct|partial|wrong, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTriple {
    pub id: String,
    pub question: String,
    pub context: String,
    pub response: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl LabeledTriple {
    /// Key shared by every response written for the same question.
    fn group_digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.question.as_bytes());
        h.update([0u8]);
        h.update(self.context.as_bytes());
        h.finalize().into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Calibration,
    Evaluation,
}

/// Split for a record, derived from its (question, context) pair so that
/// all responses to one question land together.
pub fn assign_split(record: &LabeledTriple) -> Split {
    let d = record.group_digest();
    let bucket = u64::from_be_bytes(d[..8].try_into().expect("8 bytes")) % 100;
    if bucket < CALIBRATION_PERCENT {
        Split::Calibration
    } else {
        Split::Evaluation
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<LabeledTriple>,
    pub splits: BTreeMap<String, Split>,
}

impl DatasetManifest {
    /// Builds a manifest with the default hash-based split.
    pub fn new(records: Vec<LabeledTriple>) -> Self {
        let splits = records.iter().map(|r| (r.id.clone(), assign_split(r))).collect();
        Self { records, splits }
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.splits.get(id).copied()
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &LabeledTriple> {
        self.records.iter().filter(move |r| self.split_of(&r.id) == Some(split))
    }

    /// Every record in one split (used when a caller wants no held-out set).
    pub fn with_all_in(mut self, split: Split) -> Self {
        for s in self.splits.values_mut() {
            *s = split;
        }
        self
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.records)
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

pub fn to_jsonl(records: &[LabeledTriple]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: invalid JSON: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    SchemaError { line: usize, field: String, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("dataset I/O: {0}")]
    Io(#[from] std::io::Error),
}

fn schema(line: usize, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::SchemaError { line, field: field.to_string(), message: message.into() }
}

fn required_text(obj: &serde_json::Map<String, Value>, line: usize, field: &str) -> Result<String, DatasetError> {
    match obj.get(field) {
        None => Err(schema(line, field, "missing")),
        Some(Value::String(s)) if s.trim().is_empty() => Err(schema(line, field, "must be non-empty")),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(schema(line, field, "must be a string")),
    }
}

fn parse_record(text: &str, line: usize) -> Result<LabeledTriple, DatasetError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| DatasetError::ParseError { line, message: e.to_string() })?;
    let obj = value.as_object().ok_or_else(|| schema(line, "<record>", "must be a JSON object"))?;
    let label = match obj.get("label") {
        Some(Value::String(s)) => s.parse::<Label>().map_err(|m| schema(line, "label", m))?,
        Some(_) => return Err(schema(line, "label", "must be a string")),
        None => return Err(schema(line, "label", "missing")),
    };
    let topic = match obj.get("topic") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(schema(line, "topic", "must be a string")),
    };
    Ok(LabeledTriple {
        id: required_text(obj, line, "id")?,
        question: required_text(obj, line, "question")?,
        context: required_text(obj, line, "context")?,
        response: required_text(obj, line, "response")?,
        label,
        topic,
    })
}

/// Parses JSONL text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_dataset(text: &str) -> Result<DatasetManifest, DatasetError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(line, i + 1)?;
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId { line: i + 1, id: record.id });
        }
        records.push(record);
    }
    Ok(DatasetManifest::new(records))
}

pub fn load_dataset(path: &Path) -> Result<DatasetManifest, DatasetError> {
    parse_dataset(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_QUESTION: &str = r#"{"id":"q1-c","question":"What are the working hours?","context":"The store operates from 9 AM to 5 PM, from Sunday to Saturday.","response":"The working hours are 9 AM to 5 PM. The store is open from Sunday to Saturday.","label":"correct","topic":"hours"}
{"id":"q1-p","question":"What are the working hours?","context":"The store operates from 9 AM to 5 PM, from Sunday to Saturday.","response":"The working hours are 9 AM to 5 PM. The store is open from Monday to Friday.","label":"partial"}
{"id":"q1-w","question":"What are the working hours?","context":"The store operates from 9 AM to 5 PM, from Sunday to Saturday.","response":"The working hours are 9 AM to 9 PM. You do not need to work on weekends.","label":"wrong"}
"#;

    #[test]
    fn loads_three_labels_for_one_question() {
        let m = parse_dataset(ONE_QUESTION).unwrap();
        assert_eq!(m.records.len(), 3);
        assert_eq!(m.records[1].label, Label::Partial);
        assert_eq!(m.records[0].topic.as_deref(), Some("hours"));
        let splits: HashSet<_> = m.records.iter().map(|r| m.split_of(&r.id).unwrap()).collect();
        assert_eq!(splits.len(), 1);
    }

    #[test]
    fn bad_label_reports_line_and_field() {
        let text = ONE_QUESTION.replacen(r#""label":"partial""#, r#""label":"maybe""#, 1);
        match parse_dataset(&text) {
            Err(DatasetError::SchemaError { line: 2, field, .. }) => assert_eq!(field, "label"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = ONE_QUESTION.replace(r#""id":"q1-p""#, r#""id":"q1-c""#);
        assert!(matches!(parse_dataset(&text), Err(DatasetError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn parse_and_schema_errors() {
        assert!(matches!(parse_dataset("{not json"), Err(DatasetError::ParseError { line: 1, .. })));
        assert!(matches!(parse_dataset("[1,2]"), Err(DatasetError::SchemaError { line: 1, .. })));
        let empty_ctx = r#"{"id":"a","question":"q","context":"  ","response":"r","label":"wrong"}"#;
        match parse_dataset(empty_ctx) {
            Err(DatasetError::SchemaError { field, .. }) => assert_eq!(field, "context"),
            other => panic!("{other:?}"),
        }
        let no_resp = r#"{"id":"a","question":"q","context":"c","label":"wrong"}"#;
        assert!(matches!(parse_dataset(no_resp), Err(DatasetError::SchemaError { .. })));
    }

    #[test]
    fn jsonl_rewrite_is_stable() {
        let m = parse_dataset(ONE_QUESTION).unwrap();
        assert_eq!(m.to_jsonl(), ONE_QUESTION);
    }
}
