//! Synchronous round fabric.
//!
//! Rounds start at 1. Messages sent during round `r` are delivered, in send
//! order, when [`RoundFabric::advance_round`] closes the round. Sending is
//! only possible through an [`Endpoint`], which the fabric hands out once per
//! general, so a sender cannot claim to be someone else. Round 3 is local
//! computation only: any send then is a protocol violation.

use std::collections::{BTreeMap, BTreeSet};

use crate::protocol::{Payload, RoundMessage};
use crate::trace::{EventKind, TraceLog, TraceRecord};
use crate::{Error, General, Result};

pub const FINAL_ROUND: u8 = 3;

/// A general's handle on the fabric.
#[derive(Debug, PartialEq, Eq)]
pub struct Endpoint {
    id: General,
}

impl Endpoint {
    pub fn id(&self) -> General {
        self.id
    }
}

/// A delivered message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub round: u8,
    pub from: General,
    pub payload: Payload,
}

/// Link faults keyed by `(from, to, round)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultPlan {
    pub drop: BTreeSet<(General, General, u8)>,
    /// Deliver only the first `len` symbols of the vector.
    pub truncate: BTreeMap<(General, General, u8), usize>,
}

impl FaultPlan {
    pub fn is_empty(&self) -> bool {
        self.drop.is_empty() && self.truncate.is_empty()
    }
}

#[derive(Debug)]
pub struct RoundFabric {
    run_id: u64,
    n: usize,
    round: u8,
    outbox: Vec<RoundMessage>,
    faults: FaultPlan,
    trace: TraceLog,
    issued: bool,
}

impl RoundFabric {
    pub fn new(run_id: u64, n: usize) -> Self {
        Self::with_faults(run_id, n, FaultPlan::default())
    }

    pub fn with_faults(run_id: u64, n: usize, faults: FaultPlan) -> Self {
        RoundFabric {
            run_id,
            n,
            round: 1,
            outbox: Vec::new(),
            faults,
            trace: TraceLog::new(),
            issued: false,
        }
    }

    /// One endpoint per general, commander first. Only the first call
    /// returns anything.
    pub fn endpoints(&mut self) -> Vec<Endpoint> {
        if std::mem::replace(&mut self.issued, true) {
            return Vec::new();
        }
        std::iter::once(General::Commander)
            .chain((0..self.n - 1).map(General::Lieutenant))
            .map(|id| Endpoint { id })
            .collect()
    }

    pub fn round(&self) -> u8 {
        self.round
    }

    pub fn is_complete(&self) -> bool {
        self.round >= FINAL_ROUND
    }

    fn knows(&self, g: General) -> bool {
        match g {
            General::Commander => true,
            General::Lieutenant(i) => i < self.n - 1,
        }
    }

    pub fn send(&mut self, from: &Endpoint, to: General, payload: Payload) -> Result<()> {
        if self.is_complete() {
            return Err(Error::ProtocolViolation(format!(
                "{} sent a message in round {}",
                from.id, self.round
            )));
        }
        if !self.knows(to) {
            return Err(Error::ProtocolViolation(format!(
                "{} sent to unknown general {to}",
                from.id
            )));
        }
        let msg = RoundMessage {
            round: self.round,
            sender: from.id,
            recipient: to,
            payload,
        };
        msg.validate()?;
        self.trace.push(
            TraceRecord {
                digest: Some(msg.payload.digest()),
                symbols: Some(msg.payload.symbols()),
                ..TraceRecord::new(self.run_id, self.round, EventKind::Send)
            }
            .between(msg.sender, msg.recipient),
        );
        self.outbox.push(msg);
        Ok(())
    }

    /// Closes the current round and returns what each general received.
    pub fn advance_round(&mut self) -> Result<BTreeMap<General, Vec<Envelope>>> {
        if self.is_complete() {
            return Err(Error::RunComplete);
        }
        let mut inboxes: BTreeMap<General, Vec<Envelope>> = BTreeMap::new();
        for mut msg in std::mem::take(&mut self.outbox) {
            let key = (msg.sender, msg.recipient, msg.round);
            let base = TraceRecord::new(self.run_id, msg.round, EventKind::Deliver)
                .between(msg.sender, msg.recipient);
            if self.faults.drop.contains(&key) {
                self.trace.push(TraceRecord {
                    event: EventKind::Drop,
                    ..base
                });
                continue;
            }
            if let Some(&len) = self.faults.truncate.get(&key) {
                let cut = msg.payload.vector().truncated(len);
                *msg.payload.vector_mut() = cut;
            }
            self.trace.push(TraceRecord {
                digest: Some(msg.payload.digest()),
                symbols: Some(msg.payload.symbols()),
                ..base
            });
            inboxes.entry(msg.recipient).or_default().push(Envelope {
                round: msg.round,
                from: msg.sender,
                payload: msg.payload,
            });
        }
        self.round += 1;
        Ok(inboxes)
    }

    /// Hands over the records collected so far.
    pub fn take_trace(&mut self) -> TraceLog {
        std::mem::take(&mut self.trace)
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    pub fn into_trace(self) -> TraceLog {
        self.trace
    }
}
