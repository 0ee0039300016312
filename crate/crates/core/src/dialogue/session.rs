use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::llm::{ChatMessage, Role};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("message content is empty")]
    EmptyMessage,
    #[error("expected a {expected:?} message next, got {got:?}")]
    OutOfTurn { expected: Role, got: Role },
    #[error("system messages are not stored in sessions")]
    SystemMessage,
}

/// Ordered student/tutor conversation. The first stored message is always
/// from the student and roles alternate after that.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub session_id: String,
    pub course_id: String,
    pub student_ref: String,
    pub messages: Vec<ChatMessage>,
    pub created_at: Timestamp,
    pub updated_at: Timestamp,
}

impl DialogueSession {
    pub fn new(
        session_id: impl Into<String>,
        course_id: impl Into<String>,
        student_ref: impl Into<String>,
        now: Timestamp,
    ) -> Self {
        Self {
            session_id: session_id.into(),
            course_id: course_id.into(),
            student_ref: student_ref.into(),
            messages: Vec::new(),
            created_at: now,
            updated_at: now,
        }
    }

    /// Role the next appended message must have.
    pub fn expected_role(&self) -> Role {
        match self.messages.last().map(|m| m.role) {
            Some(Role::User) => Role::Assistant,
            _ => Role::User,
        }
    }

    pub fn push(&mut self, message: ChatMessage, now: Timestamp) -> Result<(), SessionError> {
        if message.role == Role::System {
            return Err(SessionError::SystemMessage);
        }
        if message.content.trim().is_empty() {
            return Err(SessionError::EmptyMessage);
        }
        let expected = self.expected_role();
        if message.role != expected {
            return Err(SessionError::OutOfTurn { expected, got: message.role });
        }
        self.messages.push(message);
        self.updated_at = self.updated_at.max(now);
        Ok(())
    }

    /// Append a student message. When the previous student message is still
    /// unanswered the new text is folded into it, keeping roles alternating.
    pub fn add_student_text(&mut self, text: &str, now: Timestamp) -> Result<(), SessionError> {
        if text.trim().is_empty() {
            return Err(SessionError::EmptyMessage);
        }
        if self.awaiting_reply() {
            let pending = self.messages.last_mut().expect("awaiting reply implies a message");
            pending.content.push_str("\n\n");
            pending.content.push_str(text);
            self.updated_at = self.updated_at.max(now);
            Ok(())
        } else {
            self.push(ChatMessage::user(text), now)
        }
    }

    /// True when the last student message has not been answered.
    pub fn awaiting_reply(&self) -> bool {
        self.expected_role() == Role::Assistant
    }

    pub fn student_messages(&self) -> impl Iterator<Item = &str> {
        self.messages.iter().filter(|m| m.role == Role::User).map(|m| m.content.as_str())
    }

    /// Total characters of trimmed student text.
    pub fn student_chars(&self) -> usize {
        self.student_messages().map(|s| s.trim().chars().count()).sum()
    }
}

/// An agent turn and the student response that follows it.
///
/// The opening student message is paired with an empty agent turn, so a
/// session with `n` student messages yields pairs indexed `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnPair {
    pub index: usize,
    pub agent_turn: String,
    pub student_response: String,
}

pub fn turn_pairs(session: &DialogueSession) -> Vec<TurnPair> {
    let mut pairs = Vec::new();
    let mut prev_assistant: Option<&str> = None;
    for message in &session.messages {
        match message.role {
            Role::Assistant => prev_assistant = Some(&message.content),
            Role::User => {
                pairs.push(TurnPair {
                    index: pairs.len() + 1,
                    agent_turn: prev_assistant.take().unwrap_or_default().to_string(),
                    student_response: message.content.clone(),
                });
            }
            Role::System => {}
        }
    }
    pairs
}

/// Messages that precede the agent turn of pair `index` (1-based).
pub fn history_before(session: &DialogueSession, index: usize) -> &[ChatMessage] {
    let mut seen = 0;
    for (i, message) in session.messages.iter().enumerate() {
        if message.role == Role::User {
            seen += 1;
            if seen == index {
                // Drop the agent turn that belongs to this pair.
                let end = if i > 0 && session.messages[i - 1].role == Role::Assistant { i - 1 } else { i };
                return &session.messages[..end];
            }
        }
    }
    &session.messages
}
