//! The `Anchored` event, its JSONL wire form, and log queries.
//!
//! Each line of an event-log file is one JSON object with the fields, in
//! order: `arId`, `registrant`, `artifactType`, `arIdPlain`, `descriptor`,
//! `title`, `author`, `manifestHash`, `parentArId`, `treeId`, `treeIdPlain`,
//! `tokenCommitment`, `blockNumber`, `logIndex`.
//!
//! `arId` and `treeId` are simulated indexed topics: like an EVM log that
//! indexes a `string`, they carry `keccak256` of the UTF-8 plain value, so
//! only the `*Plain` fields make reconstruction possible.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::commitments::{keccak256, AnchorId, Digest32};
use crate::registry::{ArtifactType, OperatorId};

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("line {line}: malformed event: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: {field} topic does not match its plain field")]
    TopicMismatch { line: usize, field: &'static str },
    #[error("event at block {block_number}/{log_index} is not after the log tail")]
    OutOfOrder { block_number: u64, log_index: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnchoredEvent {
    #[serde(rename = "arId")]
    pub ar_id_topic: Digest32,
    pub registrant: OperatorId,
    pub artifact_type: ArtifactType,
    pub ar_id_plain: AnchorId,
    pub descriptor: String,
    pub title: String,
    pub author: String,
    pub manifest_hash: String,
    #[serde(with = "optional_parent")]
    pub parent_ar_id: Option<AnchorId>,
    #[serde(rename = "treeId")]
    pub tree_id_topic: Digest32,
    pub tree_id_plain: String,
    pub token_commitment: Digest32,
    pub block_number: u64,
    pub log_index: u64,
}

mod optional_parent {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<AnchorId>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(v.as_ref().map_or("", |id| id.as_str()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<AnchorId>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            Ok(None)
        } else {
            AnchorId::new(s).map(Some).map_err(serde::de::Error::custom)
        }
    }
}

/// Topic value for an indexed string field.
pub fn string_topic(plain: &str) -> Digest32 {
    keccak256(plain.as_bytes())
}

/// Topic under which events of the tree with identity `tree_id` are indexed.
pub fn tree_topic(tree_id: &Digest32) -> Digest32 {
    string_topic(&tree_id.to_hex())
}

impl AnchoredEvent {
    /// Recomputes both topics from the plain fields.
    pub fn refresh_topics(&mut self) {
        self.ar_id_topic = string_topic(self.ar_id_plain.as_str());
        self.tree_id_topic = string_topic(&self.tree_id_plain);
    }

    pub fn is_root(&self) -> bool {
        self.parent_ar_id.is_none()
    }

    pub fn position(&self) -> (u64, u64) {
        (self.block_number, self.log_index)
    }

    fn check_topics(&self) -> Result<(), &'static str> {
        if self.ar_id_topic != string_topic(self.ar_id_plain.as_str()) {
            return Err("arId");
        }
        if self.tree_id_topic != string_topic(&self.tree_id_plain) {
            return Err("treeId");
        }
        Ok(())
    }
}

/// One JSONL line, without the trailing newline.
pub fn serialize(event: &AnchoredEvent) -> String {
    serde_json::to_string(event).expect("event serializes")
}

/// Parses one line and checks both topics against the plain fields.
pub fn deserialize(line: &str) -> Result<AnchoredEvent, EventLogError> {
    deserialize_at(line, 1)
}

fn deserialize_at(line: &str, line_no: usize) -> Result<AnchoredEvent, EventLogError> {
    let event: AnchoredEvent = serde_json::from_str(line)
        .map_err(|e| EventLogError::MalformedLine { line: line_no, reason: e.to_string() })?;
    event
        .check_topics()
        .map_err(|field| EventLogError::TopicMismatch { line: line_no, field })?;
    Ok(event)
}

/// Reads a whole JSONL stream. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<AnchoredEvent>, EventLogError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(deserialize_at(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut w: W, events: &[AnchoredEvent]) -> io::Result<()> {
    for e in events {
        writeln!(w, "{}", serialize(e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockBound {
    Number(u64),
    Latest,
}

impl Serialize for BlockBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BlockBound::Number(n) => s.serialize_u64(*n),
            BlockBound::Latest => s.serialize_str("latest"),
        }
    }
}

impl<'de> Deserialize<'de> for BlockBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(n) => Ok(BlockBound::Number(n)),
            Raw::Tag(t) if t == "latest" => Ok(BlockBound::Latest),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unknown block tag {t:?}"))),
        }
    }
}

/// Filter for [`get_logs`]. `from_block` defaults to 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogQuery {
    #[serde(rename = "treeId", default, skip_serializing_if = "Option::is_none")]
    pub tree_id_topic: Option<Digest32>,
    #[serde(default)]
    pub from_block: u64,
    pub to_block: BlockBound,
}

impl LogQuery {
    pub fn all() -> Self {
        LogQuery { tree_id_topic: None, from_block: 0, to_block: BlockBound::Latest }
    }

    pub fn tree(topic: Digest32) -> Self {
        LogQuery { tree_id_topic: Some(topic), ..LogQuery::all() }
    }

    fn matches(&self, e: &AnchoredEvent) -> bool {
        if e.block_number < self.from_block {
            return false;
        }
        if let BlockBound::Number(to) = self.to_block {
            if e.block_number > to {
                return false;
            }
        }
        self.tree_id_topic.is_none_or(|t| e.tree_id_topic == t)
    }
}

/// Linear scan over an ordered slice of events.
pub fn get_logs(log: &[AnchoredEvent], query: &LogQuery) -> Vec<AnchoredEvent> {
    log.iter().filter(|e| query.matches(e)).cloned().collect()
}

/// Append-only event store with a per-tree topic index.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    events: Vec<AnchoredEvent>,
    by_tree: HashMap<Digest32, Vec<usize>>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a log from events that are already in `(block, index)` order.
    pub fn from_events(events: Vec<AnchoredEvent>) -> Result<Self, EventLogError> {
        let mut log = EventLog::new();
        for e in events {
            log.append(e)?;
        }
        Ok(log)
    }

    pub fn append(&mut self, event: AnchoredEvent) -> Result<(), EventLogError> {
        if let Some(last) = self.events.last() {
            if event.position() <= last.position() {
                return Err(EventLogError::OutOfOrder {
                    block_number: event.block_number,
                    log_index: event.log_index,
                });
            }
        }
        self.by_tree.entry(event.tree_id_topic).or_default().push(self.events.len());
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[AnchoredEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last(&self) -> Option<&AnchoredEvent> {
        self.events.last()
    }

    /// Same result as [`get_logs`]; a tree filter is answered from the index.
    pub fn get_logs(&self, query: &LogQuery) -> Vec<AnchoredEvent> {
        match query.tree_id_topic {
            Some(topic) => self
                .by_tree
                .get(&topic)
                .into_iter()
                .flatten()
                .map(|&i| &self.events[i])
                .filter(|e| query.matches(e))
                .cloned()
                .collect(),
            None => get_logs(&self.events, query),
        }
    }
}
