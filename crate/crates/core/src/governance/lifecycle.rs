use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GovError;
use crate::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    Generated,
    Augmented,
    Calibrated,
    Validated,
    Certified,
    Rejected,
    Archived,
}

pub const ALL_STATES: [LifecycleState; 7] = [
    LifecycleState::Generated,
    LifecycleState::Augmented,
    LifecycleState::Calibrated,
    LifecycleState::Validated,
    LifecycleState::Certified,
    LifecycleState::Rejected,
    LifecycleState::Archived,
];

pub const ACTIONS: [&str; 8] = [
    "ercd_complete",
    "fl_round_complete",
    "metrics_computed",
    "audit_pass",
    "audit_fail",
    "recalibrate",
    "archive",
    "share",
];

/// The legal transition table; `None` for every other pair.
pub fn next_state(state: LifecycleState, action: &str) -> Option<LifecycleState> {
    use LifecycleState::*;
    match (state, action) {
        (Generated, "ercd_complete") => Some(Augmented),
        (Augmented | Calibrated, "fl_round_complete") => Some(Calibrated),
        (Calibrated, "metrics_computed") => Some(Validated),
        (Validated, "audit_pass") => Some(Certified),
        (Validated, "audit_fail") => Some(Rejected),
        (Rejected, "recalibrate") => Some(Calibrated),
        (Certified, "archive") => Some(Archived),
        // sharing is recorded without leaving Certified
        (Certified, "share") => Some(Certified),
        _ => None,
    }
}

pub const GENESIS_HASH: [u8; 32] = [0; 32];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub prev_state: LifecycleState,
    pub action: String,
    pub actor: String,
    /// Logical clock supplied by the caller.
    pub timestamp: u64,
    /// Hex SHA-256 of the previous entry (zeros for the first one).
    pub prev_hash: String,
    pub entry_hash: String,
}

#[derive(Serialize)]
struct HashedBody<'a> {
    subject: &'a str,
    seq: u64,
    prev_state: LifecycleState,
    action: &'a str,
    actor: &'a str,
    timestamp: u64,
}

/// `SHA-256(prev_hash bytes || canonical JSON of the entry body)`.
fn entry_hash(subject: &str, prev_hash: &str, seq: u64, prev_state: LifecycleState, action: &str, actor: &str, timestamp: u64) -> Option<String> {
    let prev = hex::decode(prev_hash).ok().filter(|b| b.len() == 32)?;
    let body = HashedBody { subject, seq, prev_state, action, actor, timestamp };
    let mut h = Sha256::new();
    h.update(&prev);
    h.update(canonical::to_canonical_string(&body).expect("entry body serializes").as_bytes());
    Some(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleRecord {
    /// Digest of the dataset the record governs; bound into every hash.
    pub subject: String,
    pub state: LifecycleState,
    pub history: Vec<LogEntry>,
}

impl LifecycleRecord {
    pub fn new(subject: &str) -> Self {
        Self { subject: subject.into(), state: LifecycleState::Generated, history: Vec::new() }
    }

    fn head_hash(&self) -> String {
        self.history.last().map_or_else(|| hex::encode(GENESIS_HASH), |e| e.entry_hash.clone())
    }

    /// Appends the history as JSON Lines, one entry per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.history {
            writeln!(w, "{}", canonical::to_canonical_string(e).expect("entry serializes"))?;
        }
        Ok(())
    }

    /// Rebuilds a record from a JSON-Lines log; the state is replayed.
    pub fn from_jsonl(subject: &str, text: &str) -> Result<Self, GovError> {
        let history = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| GovError::Format(e.to_string())))
            .collect::<Result<Vec<LogEntry>, _>>()?;
        let state = replay(subject, &history).ok_or(GovError::ChainCorrupt)?;
        Ok(Self { subject: subject.into(), state, history })
    }
}

/// Final state of a history whose links and hashes all check out.
pub fn replay(subject: &str, history: &[LogEntry]) -> Option<LifecycleState> {
    let mut state = LifecycleState::Generated;
    let mut prev = hex::encode(GENESIS_HASH);
    for (i, e) in history.iter().enumerate() {
        if e.seq != i as u64 || e.prev_state != state || e.prev_hash != prev {
            return None;
        }
        let h = entry_hash(subject, &e.prev_hash, e.seq, e.prev_state, &e.action, &e.actor, e.timestamp)?;
        if h != e.entry_hash {
            return None;
        }
        state = next_state(state, &e.action)?;
        prev = h;
    }
    Some(state)
}

pub fn verify_chain(rec: &LifecycleRecord) -> bool {
    replay(&rec.subject, &rec.history) == Some(rec.state)
}

pub fn transition(rec: &LifecycleRecord, action: &str, actor: &str, now: u64) -> Result<LifecycleRecord, GovError> {
    if !verify_chain(rec) {
        return Err(GovError::ChainCorrupt);
    }
    let next = next_state(rec.state, action)
        .ok_or_else(|| GovError::IllegalTransition { state: rec.state, action: action.into() })?;
    let seq = rec.history.len() as u64;
    let prev_hash = rec.head_hash();
    let entry_hash = entry_hash(&rec.subject, &prev_hash, seq, rec.state, action, actor, now).expect("head hash is valid hex");
    let mut out = rec.clone();
    out.history.push(LogEntry {
        seq,
        prev_state: rec.state,
        action: action.into(),
        actor: actor.into(),
        timestamp: now,
        prev_hash,
        entry_hash,
    });
    out.state = next;
    Ok(out)
}
