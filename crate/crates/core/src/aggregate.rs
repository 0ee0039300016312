//! Class-wide knowledge-gap frequency table.
//!
//! The counting unit is a session: a KC counts once per session no matter how
//! many turns revealed it. Recording a session again replaces its previous
//! contribution, so a re-analysed session never double counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::gap::{ReportStatus, SessionReport, Verdict};
use crate::registry::KcId;

pub const MAX_SAMPLE_MISCONCEPTIONS: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("report for session {session_id} was built against registry {got}, expected {expected}")]
    StaleRegistry { session_id: String, expected: String, got: String },
    #[error("report for session {0} is not analyzed")]
    NotAnalyzed(String),
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Window {
    pub fn contains(&self, at: Timestamp) -> bool {
        self.start <= at && at < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub kc_id: KcId,
    pub count: usize,
    pub sample_misconceptions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub course_id: String,
    pub registry_version: String,
    /// `None` means all recorded sessions.
    pub window: Option<Window>,
    pub entries: Vec<FrequencyEntry>,
    pub sessions_counted: usize,
}

impl FrequencyReport {
    /// `kc_id,count` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kc_id,count\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.kc_id, e.count));
        }
        out
    }

    pub fn count_of(&self, kc: &KcId) -> usize {
        self.entries.iter().find(|e| &e.kc_id == kc).map_or(0, |e| e.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Contribution {
    recorded_at: Timestamp,
    kcs: Vec<KcContribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KcContribution {
    kc_id: KcId,
    occurrences: usize,
    misconceptions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Inserted,
    Replaced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregator {
    course_id: String,
    registry_version: String,
    contributions: BTreeMap<String, Contribution>,
    quarantined: usize,
}

impl Aggregator {
    pub fn new(course_id: impl Into<String>, registry_version: impl Into<String>) -> Self {
        Self {
            course_id: course_id.into(),
            registry_version: registry_version.into(),
            contributions: BTreeMap::new(),
            quarantined: 0,
        }
    }

    pub fn course_id(&self) -> &str {
        &self.course_id
    }

    pub fn registry_version(&self) -> &str {
        &self.registry_version
    }

    /// Reports rejected for a registry-version mismatch.
    pub fn quarantined(&self) -> usize {
        self.quarantined
    }

    pub fn sessions(&self) -> usize {
        self.contributions.len()
    }

    pub fn record(&mut self, report: &SessionReport, at: Timestamp) -> Result<RecordOutcome, AggregateError> {
        if report.registry_version != self.registry_version {
            self.quarantined += 1;
            return Err(AggregateError::StaleRegistry {
                session_id: report.session_id.clone(),
                expected: self.registry_version.clone(),
                got: report.registry_version.clone(),
            });
        }
        if report.status != ReportStatus::Analyzed {
            return Err(AggregateError::NotAnalyzed(report.session_id.clone()));
        }

        let kcs = report
            .distinct_kcs
            .iter()
            .map(|summary| {
                let mut misconceptions: Vec<String> = Vec::new();
                for f in &report.findings {
                    if f.verdict == Verdict::Gap && f.kc_id.as_ref() == Some(&summary.kc_id) {
                        if let Some(m) = &f.misconception {
                            if !misconceptions.contains(m) {
                                misconceptions.push(m.clone());
                            }
                        }
                    }
                }
                KcContribution { kc_id: summary.kc_id.clone(), occurrences: summary.occurrences, misconceptions }
            })
            .collect();

        let previous =
            self.contributions.insert(report.session_id.clone(), Contribution { recorded_at: at, kcs });
        Ok(if previous.is_some() { RecordOutcome::Replaced } else { RecordOutcome::Inserted })
    }

    /// Drop a session's contribution, if any.
    pub fn forget(&mut self, session_id: &str) -> bool {
        self.contributions.remove(session_id).is_some()
    }

    fn in_window(&self, window: Option<Window>) -> Vec<(&String, &Contribution)> {
        let mut selected: Vec<_> = self
            .contributions
            .iter()
            .filter(|(_, c)| window.is_none_or(|w| w.contains(c.recorded_at)))
            .collect();
        selected.sort_by(|a, b| (a.1.recorded_at, a.0).cmp(&(b.1.recorded_at, b.0)));
        selected
    }

    /// Up to `n` entries ranked by count (descending) then KC id.
    pub fn top_n(&self, n: usize, window: Option<Window>) -> FrequencyReport {
        let sessions = self.in_window(window);
        let mut table: BTreeMap<&KcId, FrequencyEntry> = BTreeMap::new();
        for (_, contribution) in &sessions {
            for kc in &contribution.kcs {
                let entry = table.entry(&kc.kc_id).or_insert_with(|| FrequencyEntry {
                    kc_id: kc.kc_id.clone(),
                    count: 0,
                    sample_misconceptions: Vec::new(),
                });
                entry.count += 1;
                for m in &kc.misconceptions {
                    if entry.sample_misconceptions.len() < MAX_SAMPLE_MISCONCEPTIONS
                        && !entry.sample_misconceptions.contains(m)
                    {
                        entry.sample_misconceptions.push(m.clone());
                    }
                }
            }
        }
        let mut entries: Vec<FrequencyEntry> = table.into_values().collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.kc_id.cmp(&b.kc_id)));
        entries.truncate(n);
        FrequencyReport {
            course_id: self.course_id.clone(),
            registry_version: self.registry_version.clone(),
            window,
            entries,
            sessions_counted: sessions.len(),
        }
    }

    pub fn distribution(&self, window: Option<Window>) -> FrequencyReport {
        self.top_n(usize::MAX, window)
    }

    /// Total gap findings per KC, counting repeats within a session.
    pub fn occurrence_counts(&self) -> BTreeMap<KcId, usize> {
        let mut counts = BTreeMap::new();
        for c in self.contributions.values() {
            for kc in &c.kcs {
                *counts.entry(kc.kc_id.clone()).or_default() += kc.occurrences;
            }
        }
        counts
    }

    pub fn session_kcs(&self, session_id: &str) -> Option<BTreeSet<KcId>> {
        self.contributions.get(session_id).map(|c| c.kcs.iter().map(|k| k.kc_id.clone()).collect())
    }
}
