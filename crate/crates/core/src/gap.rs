//! Knowledge-gap identification.
//!
//! Each turn pair of a session is sent to the analyst model together with the
//! rendered KC list and the preceding conversation. The model answers with a
//! `FindingList` document; gap findings are kept only when their KC id exists
//! in the registry. Findings roll up into a [`SessionReport`] with one entry
//! per distinct KC (max confidence, earliest turn).
//!
//! Analysis never touches the session's message history.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dialogue::{history_before, turn_pairs, DialogueSession, TurnPair};
use crate::llm::{ChatMessage, CompletionRequest, Gateway, GatewayError, ResponseSchema, Role};
use crate::registry::{KcId, KcRegistry};

pub const FINDING_LIST_SCHEMA: &str = include_str!("../schemas/finding_list.schema.json");
pub const ANALYSIS_TEMPERATURE: f32 = 0.2;
pub const DEFAULT_MIN_EVIDENCE_CHARS: usize = 40;

pub fn finding_list_schema() -> ResponseSchema {
    static SCHEMA: OnceLock<ResponseSchema> = OnceLock::new();
    SCHEMA
        .get_or_init(|| {
            let value = serde_json::from_str(FINDING_LIST_SCHEMA).expect("bundled schema is JSON");
            ResponseSchema::new("FindingList", value).expect("bundled schema compiles")
        })
        .clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Gap,
    Correct,
    InsufficientEvidence,
}

/// Wire form of the analyst model's reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingList {
    pub findings: Vec<RawFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFinding {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misconception: Option<String>,
}

impl RawFinding {
    pub fn gap(kc_id: &str, confidence: f64, misconception: &str) -> Self {
        Self {
            verdict: Verdict::Gap,
            kc_id: Some(kc_id.into()),
            confidence: Some(confidence),
            misconception: Some(misconception.into()),
        }
    }

    pub fn verdict_only(verdict: Verdict) -> Self {
        Self { verdict, kc_id: None, confidence: None, misconception: None }
    }
}

impl FindingList {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finding list serializes")
    }
}

/// One validated judgement about one turn.
///
/// `kc_id`, `confidence` and `misconception` are present exactly when the
/// verdict is [`Verdict::Gap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFinding {
    pub session_id: String,
    pub turn_index: usize,
    pub verdict: Verdict,
    pub kc_id: Option<KcId>,
    pub confidence: Option<f64>,
    pub misconception: Option<String>,
}

impl GapFinding {
    pub fn gap(session_id: &str, turn_index: usize, kc_id: KcId, confidence: f64, misconception: &str) -> Self {
        Self {
            session_id: session_id.into(),
            turn_index,
            verdict: Verdict::Gap,
            kc_id: Some(kc_id),
            confidence: Some(confidence.clamp(0.0, 1.0)),
            misconception: Some(misconception.into()),
        }
    }

    pub fn non_gap(session_id: &str, turn_index: usize, verdict: Verdict) -> Self {
        debug_assert_ne!(verdict, Verdict::Gap);
        Self {
            session_id: session_id.into(),
            turn_index,
            verdict,
            kc_id: None,
            confidence: None,
            misconception: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KcSummary {
    pub kc_id: KcId,
    pub max_confidence: f64,
    pub first_detected_turn: usize,
    /// Number of gap findings on this KC within the session.
    pub occurrences: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Analyzed,
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub registry_version: String,
    pub status: ReportStatus,
    pub findings: Vec<GapFinding>,
    /// One entry per KC, sorted by id.
    pub distinct_kcs: Vec<KcSummary>,
    pub turns_analyzed: usize,
    /// Turns whose analysis failed; they can be retried.
    pub unanalyzed_turns: Vec<usize>,
    /// Gap findings discarded because their KC id is not in the registry.
    pub dropped_unknown_kcs: usize,
}

impl SessionReport {
    pub fn summary(&self, kc: &KcId) -> Option<&KcSummary> {
        self.distinct_kcs.iter().find(|s| &s.kc_id == kc)
    }

    pub fn kc_ids(&self) -> impl Iterator<Item = &KcId> {
        self.distinct_kcs.iter().map(|s| &s.kc_id)
    }
}

/// Deduplicate gap findings per KC: max confidence, min turn, count.
pub fn rollup(findings: &[GapFinding]) -> Vec<KcSummary> {
    let mut by_kc: BTreeMap<&KcId, KcSummary> = BTreeMap::new();
    for finding in findings.iter().filter(|f| f.verdict == Verdict::Gap) {
        let (Some(kc), Some(conf)) = (&finding.kc_id, finding.confidence) else { continue };
        by_kc
            .entry(kc)
            .and_modify(|s| {
                s.max_confidence = s.max_confidence.max(conf);
                s.first_detected_turn = s.first_detected_turn.min(finding.turn_index);
                s.occurrences += 1;
            })
            .or_insert_with(|| KcSummary {
                kc_id: kc.clone(),
                max_confidence: conf,
                first_detected_turn: finding.turn_index,
                occurrences: 1,
            });
    }
    by_kc.into_values().collect()
}

/// Highest-confidence KC; ties go to the earlier turn, then the smaller id.
pub fn top_kc(report: &SessionReport) -> Option<&KcId> {
    report
        .distinct_kcs
        .iter()
        .min_by(|a, b| {
            b.max_confidence
                .total_cmp(&a.max_confidence)
                .then(a.first_detected_turn.cmp(&b.first_detected_turn))
                .then_with(|| a.kc_id.cmp(&b.kc_id))
        })
        .map(|s| &s.kc_id)
}

#[derive(Debug, thiserror::Error)]
pub enum GapError {
    #[error("analysis of turn {turn} failed: {source}")]
    AnalysisFailed {
        turn: usize,
        #[source]
        source: GatewayError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnAnalysis {
    pub findings: Vec<GapFinding>,
    pub dropped_unknown: usize,
}

#[derive(Debug, Clone)]
pub struct GapConfig {
    pub min_evidence_chars: usize,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self { min_evidence_chars: DEFAULT_MIN_EVIDENCE_CHARS, temperature: ANALYSIS_TEMPERATURE, max_tokens: 1024 }
    }
}

#[derive(Debug, Clone)]
struct CachedTurn {
    fingerprint: [u8; 32],
    analysis: TurnAnalysis,
}

/// Backend analyst. Caches per-turn results so re-analysing a growing
/// session only pays for the new turns.
pub struct GapIdentifier {
    gateway: Gateway,
    registry: Arc<KcRegistry>,
    config: GapConfig,
    cache: Mutex<HashMap<(String, usize), CachedTurn>>,
}

impl GapIdentifier {
    pub fn new(gateway: Gateway, registry: Arc<KcRegistry>, config: GapConfig) -> Self {
        Self { gateway, registry, config, cache: Mutex::new(HashMap::new()) }
    }

    pub fn registry(&self) -> &Arc<KcRegistry> {
        &self.registry
    }

    pub fn config(&self) -> &GapConfig {
        &self.config
    }

    pub fn system_prompt(&self) -> String {
        format!(
            "You analyze conversations between a student and a course tutor to find the student's \
             knowledge gaps. Gaps must be expressed as knowledge components (KCs) from this list:\n\n{}\n\
             For the turn pair under analysis, judge whether the student's response is correct. For every \
             misconception or missing understanding the response reveals, report the most specific matching \
             KC id from the list, a one-sentence description of the misconception, and your confidence \
             between 0 and 1. If the response is correct, report a single finding with verdict \"correct\". \
             If the turn does not contain enough information to judge, report verdict \"insufficient_evidence\". \
             Use only KC ids that appear in the list.\n\n\
             Reply with JSON only, in exactly this shape:\n\
             {{\"findings\": [{{\"verdict\": \"gap\" | \"correct\" | \"insufficient_evidence\", \
             \"kc_id\": string, \"confidence\": number, \"misconception\": string}}]}}\n\
             kc_id, confidence and misconception are required for gaps and omitted otherwise.",
            self.registry.render_for_prompt()
        )
    }

    pub fn user_prompt(pair: &TurnPair, history: &[ChatMessage]) -> String {
        let mut text = String::from("Conversation before this turn:\n");
        if history.is_empty() {
            text.push_str("(none)\n");
        }
        for m in history {
            let who = if m.role == Role::User { "Student" } else { "Tutor" };
            text.push_str(&format!("{who}: {}\n", m.content));
        }
        let agent = if pair.agent_turn.is_empty() { "(conversation start)" } else { &pair.agent_turn };
        text.push_str(&format!(
            "\nTurn pair under analysis (turn {}):\nTutor: {agent}\nStudent: {}\n",
            pair.index, pair.student_response
        ));
        text
    }

    pub async fn analyze_turn_pair(
        &self,
        session_id: &str,
        pair: &TurnPair,
        history: &[ChatMessage],
    ) -> Result<TurnAnalysis, GapError> {
        let request = CompletionRequest::new(vec![
            ChatMessage::system(self.system_prompt()),
            ChatMessage::user(Self::user_prompt(pair, history)),
        ])
        .with_schema(finding_list_schema())
        .with_temperature(self.config.temperature)
        .with_max_tokens(self.config.max_tokens);

        let reply: FindingList = self
            .gateway
            .complete_json(&request)
            .await
            .map_err(|source| GapError::AnalysisFailed { turn: pair.index, source })?;
        Ok(self.validate(session_id, pair.index, reply))
    }

    fn validate(&self, session_id: &str, turn: usize, reply: FindingList) -> TurnAnalysis {
        let mut findings = Vec::new();
        let mut dropped_unknown = 0;
        for raw in reply.findings {
            match raw.verdict {
                Verdict::Gap => {
                    let kc = raw.kc_id.as_deref().and_then(|id| KcId::parse(id.trim()).ok());
                    match (kc, raw.confidence, raw.misconception) {
                        (Some(kc), Some(conf), Some(text))
                            if self.registry.contains(&kc) && !text.trim().is_empty() =>
                        {
                            findings.push(GapFinding::gap(session_id, turn, kc, conf, text.trim()));
                        }
                        _ => {
                            tracing::debug!(session_id, turn, kc = ?raw.kc_id, "dropping gap with unknown KC");
                            dropped_unknown += 1;
                        }
                    }
                }
                verdict => findings.push(GapFinding::non_gap(session_id, turn, verdict)),
            }
        }
        TurnAnalysis { findings, dropped_unknown }
    }

    fn insufficient(&self, session: &DialogueSession) -> SessionReport {
        SessionReport {
            session_id: session.session_id.clone(),
            registry_version: self.registry.version().to_string(),
            status: ReportStatus::Insufficient,
            findings: Vec::new(),
            distinct_kcs: Vec::new(),
            turns_analyzed: 0,
            unanalyzed_turns: Vec::new(),
            dropped_unknown_kcs: 0,
        }
    }

    pub async fn analyze_session(&self, session: &DialogueSession) -> SessionReport {
        let pairs = turn_pairs(session);
        if pairs.is_empty() || session.student_chars() < self.config.min_evidence_chars {
            return self.insufficient(session);
        }

        let mut findings = Vec::new();
        let mut unanalyzed_turns = Vec::new();
        let mut dropped_unknown_kcs = 0;
        let mut turns_analyzed = 0;
        for pair in &pairs {
            let history = history_before(session, pair.index);
            let key = (session.session_id.clone(), pair.index);
            let fingerprint = fingerprint(pair, history);
            let cached = self.cache.lock().unwrap().get(&key).filter(|c| c.fingerprint == fingerprint).cloned();
            let analysis = match cached {
                Some(hit) => hit.analysis,
                None => match self.analyze_turn_pair(&session.session_id, pair, history).await {
                    Ok(analysis) => {
                        self.cache
                            .lock()
                            .unwrap()
                            .insert(key, CachedTurn { fingerprint, analysis: analysis.clone() });
                        analysis
                    }
                    Err(err) => {
                        tracing::warn!(session = %session.session_id, error = %err, "turn left unanalyzed");
                        unanalyzed_turns.push(pair.index);
                        continue;
                    }
                },
            };
            turns_analyzed += 1;
            dropped_unknown_kcs += analysis.dropped_unknown;
            findings.extend(analysis.findings);
        }

        let distinct_kcs = rollup(&findings);
        let declared_insufficient = distinct_kcs.is_empty()
            && findings.iter().all(|f| f.verdict != Verdict::Correct)
            && findings.iter().any(|f| f.verdict == Verdict::InsufficientEvidence);
        SessionReport {
            session_id: session.session_id.clone(),
            registry_version: self.registry.version().to_string(),
            status: if declared_insufficient { ReportStatus::Insufficient } else { ReportStatus::Analyzed },
            findings,
            distinct_kcs,
            turns_analyzed,
            unanalyzed_turns,
            dropped_unknown_kcs,
        }
    }

    pub fn clear_cache(&self, session_id: &str) {
        self.cache.lock().unwrap().retain(|(sid, _), _| sid != session_id);
    }
}

fn fingerprint(pair: &TurnPair, history: &[ChatMessage]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for m in history {
        hasher.update([m.role as u8]);
        hasher.update(m.content.as_bytes());
        hasher.update([0]);
    }
    hasher.update(pair.agent_turn.as_bytes());
    hasher.update([0]);
    hasher.update(pair.student_response.as_bytes());
    hasher.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;
    use crate::llm::ScriptedProvider;
    use crate::registry::parse_kc_list;

    fn registry() -> Arc<KcRegistry> {
        Arc::new(
            parse_kc_list(
                r#"{"course_id":"cs-ai","components":[
                {"id":"KC1","title":"Machine Learning Fundamentals"},
                {"id":"KC1.2","title":"Model evaluation"},
                {"id":"KC1.2.1","title":"Distinguish model accuracy from per-prediction probability"},
                {"id":"KC1.3","title":"Regression"},
                {"id":"KC1.3.1","title":"Interpret regression coefficients"}]}"#,
            )
            .unwrap(),
        )
    }

    fn kc(id: &str) -> KcId {
        KcId::parse(id).unwrap()
    }

    fn identifier(script: Vec<String>) -> (GapIdentifier, Arc<ScriptedProvider>) {
        let provider = Arc::new(ScriptedProvider::new(script));
        (GapIdentifier::new(Gateway::scripted(provider.clone()), registry(), GapConfig::default()), provider)
    }

    fn session(msgs: &[&str]) -> DialogueSession {
        let now = FixedClock::epoch().0;
        let mut s = DialogueSession::new("s1", "cs-ai", "anon", now);
        for (i, m) in msgs.iter().enumerate() {
            let msg = if i % 2 == 0 { ChatMessage::user(*m) } else { ChatMessage::assistant(*m) };
            s.push(msg, now).unwrap();
        }
        s
    }

    fn list(findings: Vec<RawFinding>) -> String {
        FindingList { findings }.to_json()
    }

    fn pair(index: usize, t: &str, s: &str) -> TurnPair {
        TurnPair { index, agent_turn: t.into(), student_response: s.into() }
    }

    #[tokio::test]
    async fn score_probability_confusion_maps_to_kc() {
        let reply = list(vec![RawFinding::gap(
            "KC1.2.1",
            0.9,
            "Reads the accuracy returned by .score() as a per-point likelihood.",
        )]);
        let (gi, provider) = identifier(vec![reply]);
        let history = vec![ChatMessage::user("what is .score() on my sklearn logistic regression actually measuring?")];
        let p = pair(
            2,
            "The score is the model accuracy: the proportion of correctly classified samples.",
            "so my model had a 93.33% chance of getting each point right?",
        );
        let out = gi.analyze_turn_pair("s1", &p, &history).await.unwrap();
        assert_eq!(out.findings.len(), 1);
        assert_eq!(out.findings[0].kc_id, Some(kc("KC1.2.1")));
        assert_eq!(out.findings[0].turn_index, 2);

        let req = provider.last_request().unwrap();
        assert!(req.messages[0].content.contains(&registry().render_for_prompt()));
        assert!(req.messages[1].content.contains("93.33%"));
        assert!(req.messages[1].content.contains("actually measuring"));
        assert!((req.temperature - 0.2).abs() < 1e-6);
    }

    #[tokio::test]
    async fn correct_answer_has_no_kc() {
        let (gi, _) = identifier(vec![list(vec![RawFinding {
            verdict: Verdict::Correct,
            kc_id: Some("KC1.2.1".into()),
            confidence: Some(0.4),
            misconception: None,
        }])]);
        let p = pair(1, "Is accuracy a probability?", "yes, because accuracy is the fraction of correct test predictions");
        let out = gi.analyze_turn_pair("s1", &p, &[]).await.unwrap();
        assert_eq!(out.findings, vec![GapFinding::non_gap("s1", 1, Verdict::Correct)]);
    }

    #[tokio::test]
    async fn unknown_kc_dropped_and_counted() {
        let (gi, _) = identifier(vec![list(vec![
            RawFinding::gap("KC9.9.9", 0.8, "x"),
            RawFinding::gap("not-an-id", 0.8, "x"),
            RawFinding::gap("KC1.3.1", 0.5, "sign of coefficient"),
        ])]);
        let out = gi.analyze_turn_pair("s1", &pair(1, "", "q"), &[]).await.unwrap();
        assert_eq!(out.dropped_unknown, 2);
        assert_eq!(out.findings.len(), 1);
    }

    #[tokio::test]
    async fn schema_violation_becomes_analysis_failed() {
        let (gi, provider) = identifier(vec!["{}".into(), r#"{"findings":[{"verdict":"gap"}]}"#.into()]);
        let err = gi.analyze_turn_pair("s1", &pair(3, "t", "s"), &[]).await.unwrap_err();
        let GapError::AnalysisFailed { turn, source } = err;
        assert_eq!(turn, 3);
        assert!(matches!(source, GatewayError::SchemaViolation { .. }));
        assert_eq!(provider.calls(), 2);
    }

    #[tokio::test]
    async fn session_rollup_takes_max_conf_and_first_turn() {
        let (gi, _) = identifier(vec![
            list(vec![RawFinding::gap("KC1.2.1", 0.6, "a")]),
            list(vec![RawFinding::verdict_only(Verdict::Correct)]),
            list(vec![RawFinding::gap("KC1.2.1", 0.9, "b")]),
        ]);
        let s = session(&[
            "what does the score for logistic regression measure?",
            "t1",
            "ok I think I see",
            "t2",
            "so it is 93% sure about each point?",
        ]);
        let report = gi.analyze_session(&s).await;
        assert_eq!(report.status, ReportStatus::Analyzed);
        assert_eq!(
            report.distinct_kcs,
            vec![KcSummary { kc_id: kc("KC1.2.1"), max_confidence: 0.9, first_detected_turn: 1, occurrences: 2 }]
        );
        assert_eq!(report.turns_analyzed, 3);
    }

    #[tokio::test]
    async fn short_dialogue_is_insufficient_without_calls() {
        let (gi, provider) = identifier(vec![]);
        let report = gi.analyze_session(&session(&["implement rnn using torch"])).await;
        assert_eq!(report.status, ReportStatus::Insufficient);
        assert!(report.distinct_kcs.is_empty());
        assert_eq!(provider.calls(), 0);

        let empty = gi.analyze_session(&session(&[])).await;
        assert_eq!(empty.status, ReportStatus::Insufficient);
    }

    #[tokio::test]
    async fn model_declared_insufficiency() {
        let (gi, _) = identifier(vec![list(vec![RawFinding::verdict_only(Verdict::InsufficientEvidence)])]);
        let report = gi.analyze_session(&session(&["please explain everything about neural networks to me"])).await;
        assert_eq!(report.status, ReportStatus::Insufficient);
    }

    #[tokio::test]
    async fn incremental_reanalysis_reuses_cache() {
        let (gi, provider) = identifier(vec![
            list(vec![RawFinding::gap("KC1.3.1", 0.7, "a")]),
            list(vec![RawFinding::verdict_only(Verdict::Correct)]),
        ]);
        let mut s = session(&["why is my regression coefficient negative here?"]);
        let first = gi.analyze_session(&s).await;
        assert_eq!(provider.calls(), 1);
        s.push(ChatMessage::assistant("What does the sign tell you?"), s.updated_at).unwrap();
        s.push(ChatMessage::user("the feature lowers the target"), s.updated_at).unwrap();
        let second = gi.analyze_session(&s).await;
        assert_eq!(provider.calls(), 2);
        assert_eq!(first.distinct_kcs, second.distinct_kcs);
        // Idempotent: nothing new to analyze.
        let third = gi.analyze_session(&s).await;
        assert_eq!(provider.calls(), 2);
        assert_eq!(second, third);
    }

    #[tokio::test]
    async fn failed_turn_listed_and_report_still_produced() {
        let (gi, _) = identifier(vec![list(vec![RawFinding::gap("KC1.3.1", 0.7, "a")])]);
        let s = session(&["why is my regression coefficient negative here?", "t1", "no idea honestly"]);
        let report = gi.analyze_session(&s).await;
        assert_eq!(report.unanalyzed_turns, vec![2]);
        assert_eq!(report.distinct_kcs.len(), 1);
        assert_eq!(report.status, ReportStatus::Analyzed);
    }

    #[tokio::test]
    async fn analysis_does_not_touch_history() {
        let (gi, _) = identifier(vec![list(vec![])]);
        let s = session(&["why is my regression coefficient negative here?"]);
        let before = s.clone();
        gi.analyze_session(&s).await;
        assert_eq!(s, before);
    }

    fn summary(kc_id: &str, conf: f64, turn: usize) -> KcSummary {
        KcSummary { kc_id: kc(kc_id), max_confidence: conf, first_detected_turn: turn, occurrences: 1 }
    }

    fn report_with(distinct: Vec<KcSummary>) -> SessionReport {
        SessionReport {
            session_id: "s".into(),
            registry_version: "v".into(),
            status: ReportStatus::Analyzed,
            findings: vec![],
            distinct_kcs: distinct,
            turns_analyzed: 1,
            unanalyzed_turns: vec![],
            dropped_unknown_kcs: 0,
        }
    }

    #[test]
    fn top_kc_ordering() {
        let r = report_with(vec![summary("KC1", 0.8, 1), summary("KC2", 0.6, 1)]);
        assert_eq!(top_kc(&r), Some(&kc("KC1")));
        let r = report_with(vec![summary("KC1", 0.8, 2), summary("KC2", 0.8, 1)]);
        assert_eq!(top_kc(&r), Some(&kc("KC2")));
        let r = report_with(vec![summary("KC2", 0.8, 1), summary("KC1", 0.8, 1)]);
        assert_eq!(top_kc(&r), Some(&kc("KC1")));
        let mut r = report_with(vec![]);
        r.status = ReportStatus::Insufficient;
        assert_eq!(top_kc(&r), None);
    }

    #[test]
    fn bundled_schema_accepts_wire_examples() {
        let schema = finding_list_schema();
        assert!(schema.check(&list(vec![RawFinding::gap("KC1", 0.5, "m")])).is_ok());
        assert!(schema.check(r#"{"findings":[{"verdict":"correct"}]}"#).is_ok());
        assert!(schema.check(r#"{"findings":[{"verdict":"gap","kc_id":"KC1","confidence":1.5,"misconception":"m"}]}"#).is_err());
        assert!(schema.check(r#"{"findings":[{"verdict":"gap","kc_id":"KC1","confidence":0.5,"misconception":""}]}"#).is_err());
        assert!(schema.check(r#"{"findings":[{"verdict":"maybe"}]}"#).is_err());
        assert!(schema.check(r#"{"finding":[]}"#).is_err());
    }
}
