//! Parsing of museum collection records and the attribute schema.
//!
//! Accepts a single record object, a JSON array of records, or
//! newline-delimited records (any whitespace-separated sequence of the
//! former two). Syntax errors abort the parse with a byte offset; semantic
//! problems reject only the offending record.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::text::normalize_text;

pub const TITLE_KEY: &str = "name";
pub const ACCESSION_KEY: &str = "accession_no";

/// Default attribute keys, in rendering order.
pub const DEFAULT_SCHEMA: [&str; 9] = [
    "name",
    "material_desc",
    "description",
    "accession_no",
    "measurements",
    "credit_line",
    "production_date",
    "object_type",
    "history_category",
];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid schema: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSet {
    pub identifier: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedRecord {
    pub related_record_id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipRef {
    pub relationship_id: String,
    pub related_record_type: String,
    pub related_records: Vec<RelatedRecord>,
}

/// One museum object entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub object_id: String,
    pub field_sets: Vec<FieldSet>,
    pub relationships: Vec<RelationshipRef>,
    pub image_ids: Vec<String>,
}

impl Record {
    /// First value under `identifier`, if any.
    pub fn first_value(&self, identifier: &str) -> Option<&str> {
        self.field_sets
            .iter()
            .filter(|fs| fs.identifier == identifier)
            .flat_map(|fs| fs.values.iter())
            .next()
            .map(String::as_str)
    }

    pub fn title(&self) -> Option<&str> {
        self.first_value(TITLE_KEY)
    }

    /// Serializes back into the source JSON shape.
    pub fn to_source_json(&self) -> Value {
        let field_sets: Vec<Value> = self
            .field_sets
            .iter()
            .map(|fs| {
                let fields: Vec<Value> = fs
                    .values
                    .iter()
                    .map(|v| serde_json::json!({ "value": v }))
                    .collect();
                serde_json::json!({ "identifier": fs.identifier, "opacObjectFields": fields })
            })
            .collect();
        let relationships: Vec<Value> = self
            .relationships
            .iter()
            .map(|r| {
                let related: Vec<Value> = r
                    .related_records
                    .iter()
                    .map(|rr| {
                        serde_json::json!({ "relatedRecordId": rr.related_record_id, "title": rr.title })
                    })
                    .collect();
                serde_json::json!({
                    "relationshipId": r.relationship_id,
                    "relatedRecordType": r.related_record_type,
                    "relatedRecords": related,
                })
            })
            .collect();
        let images: Vec<Value> = self
            .image_ids
            .iter()
            .map(|id| serde_json::json!({ "imageId": id }))
            .collect();
        serde_json::json!({
            "opacObjectId": self.object_id,
            "opacObjectFieldSets": field_sets,
            "relationshipsCollection": { "relationships": relationships },
            "imagesCollection": { "images": images },
        })
    }
}

/// Ordered set of permitted attribute keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    keys: Vec<String>,
}

impl Default for AttributeSchema {
    fn default() -> Self {
        Self {
            keys: DEFAULT_SCHEMA.iter().map(|k| k.to_string()).collect(),
        }
    }
}

impl AttributeSchema {
    pub fn new<I, S>(keys: I) -> Result<Self, IngestError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for key in keys {
            let key = key.into();
            if key.is_empty() || key.chars().any(|c| c.is_uppercase()) {
                return Err(IngestError::Schema(format!(
                    "attribute key {key:?} must be non-empty and lower-case"
                )));
            }
            if !seen.insert(key.clone()) {
                return Err(IngestError::Schema(format!("duplicate attribute key {key:?}")));
            }
            out.push(key);
        }
        Ok(Self { keys: out })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.keys.iter().any(|k| k == key)
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Position of `key` in rendering order.
    pub fn position(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }
}

/// A record that was syntactically valid but semantically unusable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub object_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatHint {
    /// Detect from content: arrays are flattened, objects taken as records.
    #[default]
    Auto,
    /// Exactly one JSON value (object or array).
    Json,
    /// One record object per line.
    Ndjson,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub records: Vec<Record>,
    pub rejects: Vec<Reject>,
}

impl ParseOutcome {
    /// Rejects as NDJSON lines `{object_index, reason}`.
    pub fn rejects_ndjson(&self) -> String {
        self.rejects
            .iter()
            .map(|r| serde_json::to_string(r).expect("reject serializes") + "\n")
            .collect()
    }
}

pub fn parse_records_from<R: Read>(mut reader: R, hint: FormatHint) -> Result<ParseOutcome, IngestError> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    parse_records(&buf, hint)
}

/// Parses raw bytes into records. `object_index` in rejects counts record
/// candidates across the whole input, starting at 0.
pub fn parse_records(bytes: &[u8], hint: FormatHint) -> Result<ParseOutcome, IngestError> {
    let values = match hint {
        FormatHint::Auto => stream_values(bytes, 0)?,
        FormatHint::Json => {
            let values = stream_values(bytes, 0)?;
            if values.len() > 1 {
                return Err(IngestError::Syntax {
                    offset: 0,
                    message: "expected a single JSON value".into(),
                });
            }
            values
        }
        FormatHint::Ndjson => {
            let mut values = Vec::new();
            let mut line_start = 0;
            for line in bytes.split(|b| *b == b'\n') {
                if line.iter().any(|b| !b.is_ascii_whitespace()) {
                    let v: Value = serde_json::from_slice(line).map_err(|e| IngestError::Syntax {
                        offset: line_start + offset_of(line, e.line(), e.column()),
                        message: e.to_string(),
                    })?;
                    values.push(v);
                }
                line_start += line.len() + 1;
            }
            values
        }
    };

    let mut outcome = ParseOutcome::default();
    let mut index = 0;
    for value in values {
        let candidates = match value {
            Value::Array(items) => items,
            other => vec![other],
        };
        for candidate in candidates {
            match record_from_value(&candidate) {
                Ok(record) => outcome.records.push(record),
                Err(reason) => outcome.rejects.push(Reject { object_index: index, reason }),
            }
            index += 1;
        }
    }
    Ok(outcome)
}

fn stream_values(bytes: &[u8], base: usize) -> Result<Vec<Value>, IngestError> {
    let mut out = Vec::new();
    for item in serde_json::Deserializer::from_slice(bytes).into_iter::<Value>() {
        let value = item.map_err(|e| IngestError::Syntax {
            offset: base + offset_of(bytes, e.line(), e.column()),
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Converts serde_json's 1-based line / column into a byte offset.
fn offset_of(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut current_line = 1;
    let mut line_start = 0;
    for (i, b) in bytes.iter().enumerate() {
        if current_line == line {
            break;
        }
        if *b == b'\n' {
            current_line += 1;
            line_start = i + 1;
        }
    }
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

fn record_from_value(value: &Value) -> Result<Record, String> {
    let obj = value.as_object().ok_or("record is not a JSON object")?;
    let object_id = match obj.get("opacObjectId") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::String(_)) => return Err("empty opacObjectId".into()),
        Some(_) => return Err("opacObjectId is not a string".into()),
        None => return Err("missing opacObjectId".into()),
    };

    let mut field_sets = Vec::new();
    for fs in array_at(obj, "opacObjectFieldSets")? {
        let fs = fs.as_object().ok_or("field set is not an object")?;
        let identifier = string_at(fs, "identifier")?;
        if identifier.is_empty() {
            return Err("empty field-set identifier".into());
        }
        let mut values = Vec::new();
        for field in array_at(fs, "opacObjectFields")? {
            match field.get("value") {
                Some(Value::String(s)) => values.push(s.clone()),
                Some(Value::Number(n)) => values.push(n.to_string()),
                Some(Value::Null) | None => {}
                Some(_) => return Err(format!("non-scalar value in field set {identifier:?}")),
            }
        }
        field_sets.push(FieldSet { identifier, values });
    }

    let mut relationships = Vec::new();
    if let Some(coll) = obj.get("relationshipsCollection").and_then(Value::as_object) {
        for rel in array_at(coll, "relationships")? {
            let rel = rel.as_object().ok_or("relationship is not an object")?;
            let relationship_id = string_at(rel, "relationshipId")?;
            if relationship_id.is_empty() {
                return Err("empty relationshipId".into());
            }
            let related_record_type = string_at(rel, "relatedRecordType")?;
            let mut related_records = Vec::new();
            for rr in array_at(rel, "relatedRecords")? {
                let rr = rr.as_object().ok_or("related record is not an object")?;
                let related_record_id = match rr.get("relatedRecordId") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => String::new(),
                };
                if related_record_id.is_empty() {
                    return Err(format!("related record without relatedRecordId in {relationship_id:?}"));
                }
                let title = rr.get("title").and_then(Value::as_str).unwrap_or_default().to_string();
                related_records.push(RelatedRecord { related_record_id, title });
            }
            relationships.push(RelationshipRef { relationship_id, related_record_type, related_records });
        }
    }

    let mut image_ids = Vec::new();
    if let Some(coll) = obj.get("imagesCollection").and_then(Value::as_object) {
        for img in array_at(coll, "images")? {
            match img.get("imageId") {
                Some(Value::String(s)) if !s.is_empty() => image_ids.push(s.clone()),
                Some(Value::Number(n)) => image_ids.push(n.to_string()),
                _ => return Err("image entry without imageId".into()),
            }
        }
    }

    Ok(Record { object_id, field_sets, relationships, image_ids })
}

fn array_at<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a [Value], String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(&[]),
        Some(Value::Array(items)) => Ok(items),
        Some(_) => Err(format!("{key} is not an array")),
    }
}

fn string_at(obj: &Map<String, Value>, key: &str) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        None | Some(Value::Null) => Ok(String::new()),
        Some(_) => Err(format!("{key} is not a string")),
    }
}

/// Anything that exposes a title and/or an accession number.
pub trait CanonicalSource {
    fn canonical_title(&self) -> Option<&str>;
    fn canonical_accession(&self) -> Option<&str>;
}

impl CanonicalSource for Record {
    fn canonical_title(&self) -> Option<&str> {
        self.first_value(TITLE_KEY)
    }
    fn canonical_accession(&self) -> Option<&str> {
        self.first_value(ACCESSION_KEY)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no title or accession number to derive a canonical key from")]
pub struct NoCanonicalKey;

/// `accno:<accession>` when an accession number exists, else `title:<title>`.
///
/// Accession numbers are identifiers rather than prose, so token spaces left
/// by punctuation stripping are removed as well.
pub fn canonical_key<T: CanonicalSource + ?Sized>(source: &T) -> Result<String, NoCanonicalKey> {
    if let Some(acc) = source.canonical_accession() {
        let acc: String = normalize_text(acc).chars().filter(|c| *c != ' ').collect();
        if !acc.is_empty() {
            return Ok(format!("accno:{acc}"));
        }
    }
    if let Some(title) = source.canonical_title() {
        let title = normalize_text(title);
        if !title.is_empty() {
            return Ok(format!("title:{title}"));
        }
    }
    Err(NoCanonicalKey)
}
