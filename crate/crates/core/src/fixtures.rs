//! Bundled course fixtures: a sample KC list, a small corpus, the scripted
//! 20-profile benchmark and the labelled completeness transcripts.
//!
//! Everything is compiled into the binary so tests, benches and the demo
//! server run without touching the filesystem or the network.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::FixedClock;
use crate::dialogue::retrieval::{
    ingest_course_material, ChunkIndex, SourceDoc, DEFAULT_CHUNK_CHARS, DEFAULT_OVERLAP_CHARS,
};
use crate::dialogue::{DialogueAgent, DialogueConfig, DialogueSession};
use crate::eval::{Harness, StudentProfile};
use crate::gap::{GapConfig, GapIdentifier};
use crate::llm::{ChatMessage, Gateway, ScriptedProvider};
use crate::registry::{parse_kc_list, KcId, KcRegistry};

pub const KC_LIST: &str = include_str!("../fixtures/kc_list.json");

const CORPUS: &[(&str, &str)] = &[
    ("linear_models.txt", include_str!("../fixtures/corpus/linear_models.txt")),
    ("logistic_regression.txt", include_str!("../fixtures/corpus/logistic_regression.txt")),
    ("model_selection.txt", include_str!("../fixtures/corpus/model_selection.txt")),
    ("neural_networks.txt", include_str!("../fixtures/corpus/neural_networks.txt")),
    ("search.txt", include_str!("../fixtures/corpus/search.txt")),
];

const PROFILES: &str = include_str!("../fixtures/benchmark/profiles.json");
const DIALOGUE_SCRIPT: &str = include_str!("../fixtures/benchmark/dialogue_script.json");
const ANALYSIS_SCRIPT: &str = include_str!("../fixtures/benchmark/analysis_script.json");
const TRANSCRIPTS: &str = include_str!("../fixtures/completeness/transcripts.json");
const LABELS: &str = include_str!("../fixtures/completeness/labels.json");
const COMPLETENESS_SCRIPT: &str = include_str!("../fixtures/completeness/analysis_script.json");

/// KCs planted in the four benchmark groups, in group order.
pub const PLANTED_KCS: [&str; 4] = ["KC1.6.1", "KC2.4.1", "KC1.3.1", "KC1.2.1"];

/// A stored conversation with a stable id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub dialogue_id: String,
    pub messages: Vec<ChatMessage>,
}

impl Transcript {
    pub fn to_session(&self, course_id: &str) -> DialogueSession {
        let now = FixedClock::epoch().0;
        let mut session = DialogueSession::new(self.dialogue_id.clone(), course_id, self.dialogue_id.clone(), now);
        for m in &self.messages {
            session.push(m.clone(), now).expect("fixture transcripts alternate");
        }
        session
    }
}

pub fn registry() -> KcRegistry {
    parse_kc_list(KC_LIST).expect("bundled KC list parses")
}

pub fn corpus_docs() -> Vec<SourceDoc> {
    CORPUS.iter().map(|(id, text)| SourceDoc::new(*id, *text)).collect()
}

pub fn corpus_index() -> ChunkIndex {
    ingest_course_material(&corpus_docs(), DEFAULT_CHUNK_CHARS, DEFAULT_OVERLAP_CHARS).expect("bundled corpus indexes")
}

fn strings(json: &str) -> Vec<String> {
    serde_json::from_str(json).expect("bundled script is a string array")
}

pub struct CanonicalBenchmark {
    pub registry: Arc<KcRegistry>,
    pub profiles: Vec<StudentProfile>,
    pub dialogue_script: Vec<String>,
    pub analysis_script: Vec<String>,
}

pub fn canonical_benchmark() -> CanonicalBenchmark {
    CanonicalBenchmark {
        registry: Arc::new(registry()),
        profiles: serde_json::from_str(PROFILES).expect("bundled profiles parse"),
        dialogue_script: strings(DIALOGUE_SCRIPT),
        analysis_script: strings(ANALYSIS_SCRIPT),
    }
}

impl CanonicalBenchmark {
    /// Harness whose tutor and analyser replay the bundled scripts. The two
    /// providers are returned so callers can check call counts.
    pub fn harness(&self) -> (Harness, Arc<ScriptedProvider>, Arc<ScriptedProvider>) {
        let tutor = Arc::new(ScriptedProvider::new(self.dialogue_script.clone()));
        let analyst = Arc::new(ScriptedProvider::new(self.analysis_script.clone()));
        let clock = Arc::new(FixedClock::epoch());
        let agent = DialogueAgent::new(Gateway::scripted(tutor.clone()), Arc::new(corpus_index()), DialogueConfig::default())
            .with_clock(clock.clone());
        let identifier = GapIdentifier::new(Gateway::scripted(analyst.clone()), self.registry.clone(), GapConfig::default());
        let harness = Harness::new(Arc::new(agent), Arc::new(identifier)).with_clock(clock).with_max_turns(5);
        (harness, tutor, analyst)
    }
}

pub struct CompletenessFixture {
    pub registry: Arc<KcRegistry>,
    pub transcripts: Vec<Transcript>,
    pub labels: BTreeMap<String, BTreeSet<KcId>>,
    pub analysis_script: Vec<String>,
}

pub fn completeness_fixture() -> CompletenessFixture {
    CompletenessFixture {
        registry: Arc::new(registry()),
        transcripts: serde_json::from_str(TRANSCRIPTS).expect("bundled transcripts parse"),
        labels: serde_json::from_str(LABELS).expect("bundled labels parse"),
        analysis_script: strings(COMPLETENESS_SCRIPT),
    }
}

impl CompletenessFixture {
    pub fn identifier(&self) -> (GapIdentifier, Arc<ScriptedProvider>) {
        let analyst = Arc::new(ScriptedProvider::new(self.analysis_script.clone()));
        let identifier = GapIdentifier::new(Gateway::scripted(analyst.clone()), self.registry.clone(), GapConfig::default());
        (identifier, analyst)
    }
}
