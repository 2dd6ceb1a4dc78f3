//! Line-delimited JSON records.
//!
//! Every record is one JSON object on one line with a leading `schema` field
//! naming the record type and its version, followed by the type's own fields
//! in declaration order. Lines end with LF.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    AspectScores, AuxiliaryContext, CompositeReward, LabeledPair, Manuscript, Review, RewardGroup,
    SentenceVerdict,
};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: expected schema `{expected}`, found `{found}`")]
    SchemaMismatch {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A type with a stable line-record schema.
pub trait Record: Serialize + DeserializeOwned {
    const SCHEMA: &'static str;
}

#[derive(Serialize)]
struct Outgoing<'a, T> {
    schema: &'static str,
    #[serde(flatten)]
    record: &'a T,
}

/// Serializes one record to a single line (without the trailing LF).
pub fn to_line<T: Record>(record: &T) -> Result<String, RecordError> {
    serde_json::to_string(&Outgoing {
        schema: T::SCHEMA,
        record,
    })
    .map_err(|source| RecordError::Json { line: 0, source })
}

fn parse_line<T: Record>(text: &str, line: usize) -> Result<T, RecordError> {
    let json = |source| RecordError::Json { line, source };
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(json)?;
    let found = value
        .as_object_mut()
        .and_then(|object| object.remove("schema"))
        .and_then(|schema| schema.as_str().map(str::to_string))
        .unwrap_or_default();
    if found != T::SCHEMA {
        return Err(RecordError::SchemaMismatch {
            line,
            expected: T::SCHEMA,
            found,
        });
    }
    serde_json::from_value(value).map_err(json)
}

pub fn from_line<T: Record>(text: &str) -> Result<T, RecordError> {
    parse_line(text, 1)
}

pub fn write_records<'a, W, T, I>(mut out: W, records: I) -> Result<(), RecordError>
where
    W: Write,
    T: Record + 'a,
    I: IntoIterator<Item = &'a T>,
{
    for record in records {
        out.write_all(to_line(record)?.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads every non-blank line as a `T`.
pub fn read_records<R: BufRead, T: Record>(input: R) -> Result<Vec<T>, RecordError> {
    let mut records = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(&line, index + 1)?);
    }
    Ok(records)
}

impl Record for Manuscript {
    const SCHEMA: &'static str = "manuscript/v1";
}
impl Record for Review {
    const SCHEMA: &'static str = "review/v1";
}
impl Record for AuxiliaryContext {
    const SCHEMA: &'static str = "auxiliary_context/v1";
}
impl Record for SentenceVerdict {
    const SCHEMA: &'static str = "sentence_verdict/v1";
}
impl Record for AspectScores {
    const SCHEMA: &'static str = "aspect_scores/v1";
}
impl Record for CompositeReward {
    const SCHEMA: &'static str = "composite_reward/v1";
}
impl Record for RewardGroup {
    const SCHEMA: &'static str = "reward_group/v1";
}
impl Record for LabeledPair {
    const SCHEMA: &'static str = "labeled_pair/v1";
}
