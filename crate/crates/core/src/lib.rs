//! Dialogue-based knowledge gap detection for course assistants.
//!
//! A tutor agent answers student questions from course material and asks
//! diagnostic follow-ups; a gap identifier maps each student turn onto an
//! instructor-authored list of knowledge components (KCs); an aggregator
//! counts which KCs the class is missing. The `eval` module scores the whole
//! pipeline against simulated students.

pub mod aggregate;
pub mod clock;
pub mod dialogue;
pub mod eval;
pub mod fixtures;
pub mod gap;
pub mod llm;
pub mod registry;
pub mod store;

pub use aggregate::{AggregateError, Aggregator, FrequencyEntry, FrequencyReport, Window};
pub use clock::{Clock, FixedClock, SystemClock, Timestamp};
pub use dialogue::retrieval::{ChunkIndex, CourseChunk, Retriever, ScoredChunk, SourceDoc};
pub use dialogue::{DialogueAgent, DialogueConfig, DialogueError, DialogueSession, ProbingIntensity, TurnPair};
pub use eval::{EvalError, EvalResult, Harness, Metrics, SimulationMode, StudentProfile};
pub use gap::{GapConfig, GapFinding, GapIdentifier, KcSummary, ReportStatus, SessionReport, Verdict};
pub use llm::{ChatMessage, CompletionRequest, Gateway, GatewayError, ProviderConfig, Role, ScriptedProvider};
pub use registry::{parse_kc_list, KcId, KcRegistry, KnowledgeComponent, RegistryError};
pub use store::{pseudonymize, Event, EventBody, EventStore, ServiceState, StoreError};
