//! Offline evaluation with simulated students.
//!
//! Each [`StudentProfile`] harbors one missing KC. A profile is played
//! against the dialogue agent (from a canned script, or by a persona-prompted
//! model), the resulting session is analysed, and the per-profile
//! [`EvalResult`]s feed four metrics: detection rate, speed of detection,
//! top-1 accuracy, and the class-wide KC distribution. A separate
//! [`completeness`] score checks analysed dialogues against human label sets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::aggregate::{Aggregator, FrequencyReport};
use crate::clock::{Clock, FixedClock};
use crate::dialogue::{DialogueAgent, DialogueError, DialogueSession};
use crate::gap::{top_kc, GapIdentifier, ReportStatus, SessionReport};
use crate::llm::{ChatMessage, CompletionRequest, Gateway, GatewayError, Role, DEFAULT_CONCURRENCY};
use crate::registry::{KcId, KcRegistry};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no results to score")]
    EmptyResults,
    #[error("no conversation detected its missing KC")]
    NoDetections,
    #[error("labels and reports cover different dialogues: {0}")]
    MisalignedIds(String),
    #[error("dialogue {dialogue} has {size} labeled KCs; expected 1 to 3")]
    LabelSetSize { dialogue: String, size: usize },
    #[error("max_turns must be at least 1")]
    InvalidMaxTurns,
    #[error("profile {0} has no script for scripted simulation")]
    ScriptExhausted(String),
    #[error("profile {profile} references unknown KC {kc}")]
    UnknownKc { profile: String, kc: KcId },
    #[error("duplicate profile id {0}")]
    DuplicateProfile(String),
    #[error("model-driven simulation needs a student gateway")]
    NoStudentModel,
    #[error("simulated student failed: {0}")]
    Student(#[source] GatewayError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persona {
    Terse,
    Verbose,
    CopiesMaterial,
    AsksFollowUps,
}

impl Persona {
    fn describe(self) -> &'static str {
        match self {
            Persona::Terse => "You write very short messages, often without punctuation or capitals.",
            Persona::Verbose => "You write long messages with background about your assignment.",
            Persona::CopiesMaterial => "You often paste a sentence from the textbook and ask what it means.",
            Persona::AsksFollowUps => "You ask practical follow-up questions about next steps.",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub profile_id: String,
    pub group_id: String,
    pub missing_kc: KcId,
    pub behavior: Persona,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Vec<String>>,
}

pub fn validate_profiles(profiles: &[StudentProfile], registry: &KcRegistry) -> Result<(), EvalError> {
    let mut seen = HashSet::new();
    for p in profiles {
        if !seen.insert(p.profile_id.as_str()) {
            return Err(EvalError::DuplicateProfile(p.profile_id.clone()));
        }
        if !registry.contains(&p.missing_kc) {
            return Err(EvalError::UnknownKc { profile: p.profile_id.clone(), kc: p.missing_kc.clone() });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMode {
    Scripted,
    ModelDriven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub profile_id: String,
    pub missing_kc: KcId,
    pub detected: bool,
    pub first_turn: Option<usize>,
    pub top1_match: bool,
    pub report: SessionReport,
}

impl EvalResult {
    pub fn score(profile: &StudentProfile, report: SessionReport) -> Self {
        let first_turn = report.summary(&profile.missing_kc).map(|s| s.first_detected_turn);
        let top1_match = top_kc(&report) == Some(&profile.missing_kc);
        Self {
            profile_id: profile.profile_id.clone(),
            missing_kc: profile.missing_kc.clone(),
            detected: first_turn.is_some(),
            first_turn,
            top1_match,
            report,
        }
    }
}

pub fn detection_rate(results: &[EvalResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let detected = results.iter().filter(|r| r.detected).count();
    Ok(detected as f64 / results.len() as f64)
}

/// Mean first-detection turn over detected conversations only.
pub fn speed_of_detection(results: &[EvalResult]) -> Result<f64, EvalError> {
    let turns: Vec<usize> = results.iter().filter_map(|r| r.first_turn).collect();
    if turns.is_empty() {
        return Err(EvalError::NoDetections);
    }
    Ok(turns.iter().sum::<usize>() as f64 / turns.len() as f64)
}

pub fn top1_accuracy(results: &[EvalResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let hits = results.iter().filter(|r| r.top1_match).count();
    Ok(hits as f64 / results.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completeness {
    pub per_dialogue: BTreeMap<String, bool>,
    pub fraction: f64,
}

/// A dialogue succeeds when its report is analysed and its KC set contains
/// every labeled KC. Extra KCs are allowed.
pub fn completeness(
    labels: &BTreeMap<String, BTreeSet<KcId>>,
    reports: &[SessionReport],
) -> Result<Completeness, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let by_id: BTreeMap<&str, &SessionReport> = reports.iter().map(|r| (r.session_id.as_str(), r)).collect();
    if by_id.len() != reports.len() || by_id.len() != labels.len() || labels.keys().any(|k| !by_id.contains_key(k.as_str())) {
        let label_ids: BTreeSet<&str> = labels.keys().map(String::as_str).collect();
        let report_ids: BTreeSet<&str> = by_id.keys().copied().collect();
        let diff: Vec<&str> = label_ids.symmetric_difference(&report_ids).copied().collect();
        return Err(EvalError::MisalignedIds(if diff.is_empty() {
            "duplicate report ids".into()
        } else {
            diff.join(", ")
        }));
    }
    let mut per_dialogue = BTreeMap::new();
    for (id, wanted) in labels {
        if !(1..=3).contains(&wanted.len()) {
            return Err(EvalError::LabelSetSize { dialogue: id.clone(), size: wanted.len() });
        }
        let report = by_id[id.as_str()];
        let found: BTreeSet<&KcId> = report.kc_ids().collect();
        let ok = report.status == ReportStatus::Analyzed && wanted.iter().all(|kc| found.contains(kc));
        per_dialogue.insert(id.clone(), ok);
    }
    let successes = per_dialogue.values().filter(|&&ok| ok).count();
    Ok(Completeness { fraction: successes as f64 / per_dialogue.len() as f64, per_dialogue })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub profiles: usize,
    pub detected: usize,
    pub detection_rate: f64,
    /// `None` when nothing was detected.
    pub speed_of_detection: Option<f64>,
    pub top1_accuracy: f64,
    /// Undetected conversations are left out of the speed mean.
    pub speed_excludes_undetected: bool,
}

impl Metrics {
    pub fn from_results(results: &[EvalResult]) -> Result<Self, EvalError> {
        Ok(Self {
            profiles: results.len(),
            detected: results.iter().filter(|r| r.detected).count(),
            detection_rate: detection_rate(results)?,
            speed_of_detection: speed_of_detection(results).ok(),
            top1_accuracy: top1_accuracy(results)?,
            speed_excludes_undetected: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFailure {
    pub profile_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOutcome {
    pub results: Vec<EvalResult>,
    pub failures: Vec<ProfileFailure>,
    /// `None` when every profile failed.
    pub metrics: Option<Metrics>,
    pub distribution: FrequencyReport,
    pub sessions: Vec<DialogueSession>,
}

/// Wires a dialogue agent, a gap identifier and (optionally) a student model
/// together for simulation runs.
pub struct Harness {
    agent: Arc<DialogueAgent>,
    identifier: Arc<GapIdentifier>,
    student: Option<Gateway>,
    clock: Arc<dyn Clock>,
    max_turns: usize,
    concurrency: usize,
}

impl Harness {
    pub fn new(agent: Arc<DialogueAgent>, identifier: Arc<GapIdentifier>) -> Self {
        Self {
            agent,
            identifier,
            student: None,
            clock: Arc::new(FixedClock::epoch()),
            max_turns: 5,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }

    pub fn with_student_model(mut self, gateway: Gateway) -> Self {
        self.student = Some(gateway);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_max_turns(mut self, max_turns: usize) -> Self {
        self.max_turns = max_turns;
        self
    }

    pub fn with_concurrency(mut self, concurrency: usize) -> Self {
        self.concurrency = concurrency.max(1);
        self
    }

    pub fn registry(&self) -> &KcRegistry {
        self.identifier.registry()
    }

    fn student_prompt(&self, profile: &StudentProfile) -> String {
        let (title, detail) = self
            .registry()
            .lookup(profile.missing_kc.as_str())
            .map(|kc| (kc.title.as_str(), kc.detail.as_str()))
            .unwrap_or(("", ""));
        format!(
            "You are role-playing an undergraduate student in the course \"{}\" who is chatting with an AI \
             teaching assistant. {}\n\nYou do not understand this idea: {title}. {detail}\n\
             Hold a plausible misconception about it. Do not mention or hint at the misconception on your own; \
             let it show only when the assistant's questions ask you to explain your reasoning, and then answer \
             consistently with it. Ask about a concrete course task related to this topic. Reply with only your \
             next message to the assistant.",
            self.registry().course_id(),
            profile.behavior.describe()
        )
    }

    async fn next_student_message(
        &self,
        profile: &StudentProfile,
        session: &DialogueSession,
    ) -> Result<String, EvalError> {
        let gateway = self.student.as_ref().ok_or(EvalError::NoStudentModel)?;
        let mut messages = vec![ChatMessage::system(self.student_prompt(profile))];
        if session.messages.is_empty() {
            messages.push(ChatMessage::user("Start the conversation with your first question."));
        }
        // The student model speaks as the assistant; the tutor is its user.
        for m in &session.messages {
            messages.push(match m.role {
                Role::User => ChatMessage::assistant(m.content.clone()),
                _ => ChatMessage::user(m.content.clone()),
            });
        }
        let request = CompletionRequest::new(messages).with_temperature(0.9).with_max_tokens(300);
        gateway.complete(&request).await.map_err(EvalError::Student)
    }

    pub async fn simulate_dialogue(
        &self,
        profile: &StudentProfile,
        max_turns: usize,
        mode: SimulationMode,
    ) -> Result<DialogueSession, EvalError> {
        if max_turns == 0 {
            return Err(EvalError::InvalidMaxTurns);
        }
        let mut session = DialogueSession::new(
            profile.profile_id.clone(),
            self.registry().course_id(),
            profile.profile_id.clone(),
            self.clock.now(),
        );
        match mode {
            SimulationMode::Scripted => {
                let script = profile
                    .script
                    .as_ref()
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| EvalError::ScriptExhausted(profile.profile_id.clone()))?;
                for utterance in script.iter().take(max_turns) {
                    self.agent.respond(&mut session, utterance).await?;
                }
            }
            SimulationMode::ModelDriven => {
                for _ in 0..max_turns {
                    let utterance = self.next_student_message(profile, &session).await?;
                    self.agent.respond(&mut session, &utterance).await?;
                }
            }
        }
        Ok(session)
    }

    async fn run_profile(
        &self,
        profile: &StudentProfile,
        mode: SimulationMode,
    ) -> Result<(DialogueSession, SessionReport), EvalError> {
        let session = self.simulate_dialogue(profile, self.max_turns, mode).await?;
        let report = self.identifier.analyze_session(&session).await;
        Ok((session, report))
    }

    /// Simulate, analyse and aggregate every profile.
    ///
    /// Scripted runs go one profile at a time so that shared scripted
    /// providers hand out replies in a fixed order.
    pub async fn run_benchmark(
        &self,
        profiles: &[StudentProfile],
        mode: SimulationMode,
    ) -> Result<BenchmarkOutcome, EvalError> {
        validate_profiles(profiles, self.registry())?;
        let width = match mode {
            SimulationMode::Scripted => 1,
            SimulationMode::ModelDriven => self.concurrency,
        };
        let outcomes: Vec<_> = stream::iter(profiles)
            .map(|p| async move { (p, self.run_profile(p, mode).await) })
            .buffered(width)
            .collect()
            .await;

        let registry = self.registry();
        let mut aggregator = Aggregator::new(registry.course_id(), registry.version());
        let mut results = Vec::new();
        let mut failures = Vec::new();
        let mut sessions = Vec::new();
        for (profile, outcome) in outcomes {
            match outcome {
                Ok((session, report)) => {
                    if report.status == ReportStatus::Analyzed {
                        aggregator
                            .record(&report, self.clock.now())
                            .expect("report built against the harness registry");
                    }
                    results.push(EvalResult::score(profile, report));
                    sessions.push(session);
                }
                Err(err) => failures.push(ProfileFailure { profile_id: profile.profile_id.clone(), error: err.to_string() }),
            }
        }
        let metrics = if results.is_empty() { None } else { Some(Metrics::from_results(&results)?) };
        Ok(BenchmarkOutcome { metrics, distribution: aggregator.distribution(None), results, failures, sessions })
    }
}
