//! Student-facing tutor.
//!
//! The agent answers each student message from retrieved course passages and
//! the running conversation, and is instructed to close (or interleave) its
//! replies with diagnostic questions so that the student's reasoning ends up
//! in the transcript where the gap identifier can see it.

pub mod retrieval;
mod session;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::llm::{ChatMessage, CompletionRequest, Gateway, GatewayError};
use retrieval::{Retriever, ScoredChunk, DEFAULT_TOP_K};

pub use session::{history_before, turn_pairs, DialogueSession, SessionError, TurnPair};

pub const DIALOGUE_TEMPERATURE: f32 = 0.7;

/// Fixed interaction strategy embedded in every probing system prompt.
pub const INTERACTION_STRATEGY: &str = "\
Interaction Strategy
1. First, acknowledge their specific issue and offer a solution
2. As you explain the solution, naturally incorporate questions that help reveal their conceptual understanding
3. Conclude with follow-up questions as next steps";

pub const DIAGNOSTIC_EXAMPLES: &str = "\
Examples of Natural Diagnostic Questions:
1. It seems you might be encountering an issue with [concept]. How do you typically think about [concept] when you're designing your solution?
2. What's your goal after this step? Knowing that will help me suggest the most appropriate method.";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbingIntensity {
    /// Plain assistant; no diagnostic questions. Baseline runs only.
    Off,
    #[default]
    ClosingQuestion,
    Interleaved,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DialogueConfig {
    pub top_k: usize,
    pub temperature: f32,
    pub max_tokens: u32,
    pub probing: ProbingIntensity,
}

impl Default for DialogueConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            temperature: DIALOGUE_TEMPERATURE,
            max_tokens: 1024,
            probing: ProbingIntensity::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DialogueError {
    #[error("student message is empty")]
    EmptyMessage,
    #[error("tutor reply failed: {0}")]
    RespondFailed(#[source] GatewayError),
    #[error("session has no unanswered student message")]
    NothingPending,
    #[error("model returned an empty reply")]
    EmptyReply,
    #[error(transparent)]
    Session(#[from] SessionError),
}

pub struct DialogueAgent {
    gateway: Gateway,
    retriever: Arc<dyn Retriever>,
    config: DialogueConfig,
    clock: Arc<dyn Clock>,
}

impl DialogueAgent {
    pub fn new(gateway: Gateway, retriever: Arc<dyn Retriever>, config: DialogueConfig) -> Self {
        Self { gateway, retriever, config, clock: Arc::new(SystemClock) }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &DialogueConfig {
        &self.config
    }

    pub fn system_prompt(&self, course_id: &str, passages: &[ScoredChunk]) -> String {
        let mut prompt = format!(
            "You are a teaching assistant for the course \"{course_id}\". Help the student with \
             their question, grounding your answer in the course material below when it is relevant.\n\n"
        );
        match self.config.probing {
            ProbingIntensity::Off => {
                prompt.push_str("Answer the question directly and completely.\n");
            }
            probing => {
                prompt.push_str(INTERACTION_STRATEGY);
                prompt.push_str("\n\n");
                prompt.push_str(DIAGNOSTIC_EXAMPLES);
                prompt.push_str("\n\n");
                prompt.push_str(match probing {
                    ProbingIntensity::Interleaved => {
                        "Weave short diagnostic questions into the explanation itself, and end with one as well.\n"
                    }
                    _ => "Always end your reply with a diagnostic follow-up question.\n",
                });
            }
        }
        if !passages.is_empty() {
            prompt.push_str("\nCourse material:\n");
            for hit in passages {
                prompt.push_str(&format!("[{} #{}]\n{}\n\n", hit.chunk.doc_id, hit.chunk.seq, hit.chunk.text.trim()));
            }
        }
        prompt
    }

    pub fn build_request(&self, session: &DialogueSession, query: &str) -> CompletionRequest {
        let passages = self.retriever.retrieve(query, self.config.top_k);
        let mut messages = Vec::with_capacity(session.messages.len() + 1);
        messages.push(ChatMessage::system(self.system_prompt(&session.course_id, &passages)));
        messages.extend(session.messages.iter().cloned());
        CompletionRequest::new(messages)
            .with_temperature(self.config.temperature)
            .with_max_tokens(self.config.max_tokens)
    }

    /// Store the student message, ask the model for a reply, store and return it.
    ///
    /// On failure the student message stays in the session without a reply.
    /// A later message on the same session is folded into that pending
    /// message so roles keep alternating.
    pub async fn respond(
        &self,
        session: &mut DialogueSession,
        student_message: &str,
    ) -> Result<String, DialogueError> {
        let text = student_message.trim();
        if text.is_empty() {
            return Err(DialogueError::EmptyMessage);
        }
        session.add_student_text(text, self.clock.now())?;
        self.reply_to_pending(session).await
    }

    /// Answer the session's unanswered student message and store the reply.
    pub async fn reply_to_pending(&self, session: &mut DialogueSession) -> Result<String, DialogueError> {
        let query = match session.messages.last() {
            Some(m) if session.awaiting_reply() => m.content.clone(),
            _ => return Err(DialogueError::NothingPending),
        };
        let request = self.build_request(session, &query);
        let reply = self.gateway.complete(&request).await.map_err(DialogueError::RespondFailed)?;
        let reply = reply.trim().to_string();
        if reply.is_empty() {
            return Err(DialogueError::EmptyReply);
        }
        session.push(ChatMessage::assistant(reply.clone()), self.clock.now())?;
        Ok(reply)
    }
}
