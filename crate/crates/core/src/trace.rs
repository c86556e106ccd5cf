//! JSON-lines trace records.
//!
//! Every message send, delivery, drop, check verdict, rule firing and final
//! decision produces one [`TraceRecord`]. A `run` record at the top carries
//! the configuration and scenario, so a trace file is enough to replay the
//! run (see [`crate::harness::replay`]).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{General, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Run,
    Send,
    Deliver,
    Drop,
    Check,
    Rule,
    Decision,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run_id: u64,
    pub round: u8,
    pub event: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sender: Option<General>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<General>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl TraceRecord {
    pub fn new(run_id: u64, round: u8, event: EventKind) -> Self {
        TraceRecord {
            run_id,
            round,
            event,
            sender: None,
            recipient: None,
            digest: None,
            symbols: None,
            rule: None,
            result: None,
            detail: None,
        }
    }

    pub fn between(mut self, sender: General, recipient: General) -> Self {
        self.sender = Some(sender);
        self.recipient = Some(recipient);
        self
    }

    pub fn rule(mut self, rule: impl Into<String>) -> Self {
        self.rule = Some(rule.into());
        self
    }

    pub fn result(mut self, result: impl Into<String>) -> Self {
        self.result = Some(result.into());
        self
    }

    pub fn detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

/// First 16 hex digits of the SHA-256 of a canonical payload string.
pub fn payload_digest(canonical: &str) -> String {
    let hash = Sha256::digest(canonical.as_bytes());
    hex::encode(&hash[..8])
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    records: Vec<TraceRecord>,
}

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: TraceLog) {
        self.records.extend(other.records);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind(&self, event: EventKind) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.event == event)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(TraceLog { records })
    }
}

impl FromIterator<TraceRecord> for TraceLog {
    fn from_iter<I: IntoIterator<Item = TraceRecord>>(iter: I) -> Self {
        TraceLog {
            records: iter.into_iter().collect(),
        }
    }
}
