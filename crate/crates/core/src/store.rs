//! Append-only event log and the service state it folds into.
//!
//! The log is newline-delimited JSON, one [`Event`] per line. State is never
//! written directly: every change is an event, and [`ServiceState::apply`]
//! is the only reducer, so replaying any prefix of the log yields the state
//! the service had at that point. A snapshot file next to the log lets
//! startup skip events it already covers.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregate::{AggregateError, Aggregator};
use crate::clock::Timestamp;
use crate::dialogue::DialogueSession;
use crate::gap::SessionReport;
use crate::llm::{ChatMessage, Role};

pub const DEFAULT_SNAPSHOT_EVERY: u64 = 500;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("corrupt event at seq {seq} (line {line}): {reason}")]
    CorruptEvent { seq: u64, line: usize, reason: String },
    #[error("event rejected: {0}")]
    Rejected(String),
    #[error("event log I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionCreated { session_id: String, course_id: String, student_ref: String },
    MessageAppended { session_id: String, message: ChatMessage },
    ReportStored { report: SessionReport },
    AggregateRecorded { session_id: String },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionCreated { .. } => "session_created",
            EventBody::MessageAppended { .. } => "message_appended",
            EventBody::ReportStored { .. } => "report_stored",
            EventBody::AggregateRecorded { .. } => "aggregate_recorded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub ts: Timestamp,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Everything the service knows, rebuilt from events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceState {
    pub last_seq: u64,
    pub sessions: BTreeMap<String, DialogueSession>,
    pub reports: BTreeMap<String, SessionReport>,
    pub aggregator: Aggregator,
}

impl ServiceState {
    pub fn new(course_id: &str, registry_version: &str) -> Self {
        Self {
            last_seq: 0,
            sessions: BTreeMap::new(),
            reports: BTreeMap::new(),
            aggregator: Aggregator::new(course_id, registry_version),
        }
    }

    /// Fold one event into the state. On error the state is unchanged.
    pub fn apply(&mut self, event: &Event) -> Result<(), String> {
        if event.seq <= self.last_seq {
            return Err(format!("seq {} does not follow {}", event.seq, self.last_seq));
        }
        match &event.body {
            EventBody::SessionCreated { session_id, course_id, student_ref } => {
                if self.sessions.contains_key(session_id) {
                    return Err(format!("session {session_id} already exists"));
                }
                self.sessions.insert(
                    session_id.clone(),
                    DialogueSession::new(session_id.clone(), course_id.clone(), student_ref.clone(), event.ts),
                );
            }
            EventBody::MessageAppended { session_id, message } => {
                let session = self
                    .sessions
                    .get_mut(session_id)
                    .ok_or_else(|| format!("unknown session {session_id}"))?;
                let result = match message.role {
                    Role::User => session.add_student_text(&message.content, event.ts),
                    _ => session.push(message.clone(), event.ts),
                };
                result.map_err(|e| e.to_string())?;
            }
            EventBody::ReportStored { report } => {
                if !self.sessions.contains_key(&report.session_id) {
                    return Err(format!("report for unknown session {}", report.session_id));
                }
                self.reports.insert(report.session_id.clone(), report.clone());
            }
            EventBody::AggregateRecorded { session_id } => {
                let report =
                    self.reports.get(session_id).ok_or_else(|| format!("no stored report for {session_id}"))?;
                match self.aggregator.record(report, event.ts) {
                    // A report from an older KC list is quarantined, not corrupt.
                    Ok(_) | Err(AggregateError::StaleRegistry { .. }) => {}
                    Err(e) => return Err(e.to_string()),
                }
            }
        }
        self.last_seq = event.seq;
        Ok(())
    }
}

/// Fold `reader`'s events into `state`. Events already covered by
/// `state.last_seq` (e.g. from a snapshot) are skipped.
pub fn replay_into<R: BufRead>(state: &mut ServiceState, reader: R) -> Result<(), StoreError> {
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| StoreError::CorruptEvent {
            seq: state.last_seq + 1,
            line: lineno,
            reason: e.to_string(),
        })?;
        if event.seq <= state.last_seq {
            continue;
        }
        state
            .apply(&event)
            .map_err(|reason| StoreError::CorruptEvent { seq: event.seq, line: lineno, reason })?;
    }
    Ok(())
}

pub fn replay<R: BufRead>(reader: R, course_id: &str, registry_version: &str) -> Result<ServiceState, StoreError> {
    let mut state = ServiceState::new(course_id, registry_version);
    replay_into(&mut state, reader)?;
    Ok(state)
}

/// Single-writer event log. Holds the live state alongside the file.
#[derive(Debug)]
pub struct EventStore {
    state: ServiceState,
    file: Option<File>,
    path: Option<PathBuf>,
    snapshot_every: u64,
    since_snapshot: u64,
}

impl EventStore {
    pub fn in_memory(course_id: &str, registry_version: &str) -> Self {
        Self {
            state: ServiceState::new(course_id, registry_version),
            file: None,
            path: None,
            snapshot_every: 0,
            since_snapshot: 0,
        }
    }

    /// Open (or create) the log at `path`, loading the snapshot if present
    /// and replaying the events after it.
    pub fn open(path: &Path, course_id: &str, registry_version: &str) -> Result<Self, StoreError> {
        let mut state = match fs::read(snapshot_path(path)) {
            Ok(bytes) => {
                let mut snap: ServiceState =
                    serde_json::from_slice(&bytes).map_err(|e| StoreError::Snapshot(e.to_string()))?;
                if snap.aggregator.registry_version() != registry_version {
                    // KC list changed since the snapshot; rebuild from the log
                    // so stale reports land in quarantine.
                    snap = ServiceState::new(course_id, registry_version);
                }
                snap
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => ServiceState::new(course_id, registry_version),
            Err(e) => return Err(e.into()),
        };
        if path.exists() {
            replay_into(&mut state, BufReader::new(File::open(path)?))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            state,
            file: Some(file),
            path: Some(path.to_path_buf()),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            since_snapshot: 0,
        })
    }

    pub fn with_snapshot_every(mut self, events: u64) -> Self {
        self.snapshot_every = events;
        self
    }

    pub fn state(&self) -> &ServiceState {
        &self.state
    }

    /// Validate, apply and persist one event.
    pub fn append(&mut self, body: EventBody, ts: Timestamp) -> Result<Event, StoreError> {
        let event = Event { seq: self.state.last_seq + 1, ts, body };
        let mut next = self.state.clone();
        next.apply(&event).map_err(StoreError::Rejected)?;
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_string(&event).expect("events serialize");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        self.state = next;
        self.since_snapshot += 1;
        if self.snapshot_every > 0 && self.since_snapshot >= self.snapshot_every {
            self.snapshot()?;
        }
        Ok(event)
    }

    pub fn snapshot(&mut self) -> Result<(), StoreError> {
        let Some(path) = &self.path else { return Ok(()) };
        if let Some(file) = &self.file {
            file.sync_data()?;
        }
        let target = snapshot_path(path);
        let tmp = target.with_extension("snapshot.tmp");
        fs::write(&tmp, serde_json::to_vec(&self.state).expect("state serializes"))?;
        fs::rename(&tmp, &target)?;
        self.since_snapshot = 0;
        Ok(())
    }
}

pub fn snapshot_path(log: &Path) -> PathBuf {
    let mut name = log.as_os_str().to_owned();
    name.push(".snapshot");
    PathBuf::from(name)
}

/// Salted one-way pseudonym for a client-supplied student identifier.
pub fn pseudonymize(salt: &str, raw_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(salt.as_bytes());
    hasher.update([0]);
    hasher.update(raw_id.as_bytes());
    hex::encode(&hasher.finalize()[..16])
}
