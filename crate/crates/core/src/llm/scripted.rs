use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use async_trait::async_trait;

use super::{ChatProvider, CompletionRequest, GatewayError};

/// Deterministic provider: the nth call returns the nth queued reply.
///
/// Every request is recorded so tests can inspect the assembled prompts.
/// Without a fallback, calls past the end of the script fail with
/// [`GatewayError::ScriptExhausted`].
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    replies: Mutex<VecDeque<String>>,
    fallback: Option<String>,
    calls: AtomicUsize,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedProvider {
    pub fn new<I, S>(script: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(script.into_iter().map(Into::into).collect()),
            ..Default::default()
        }
    }

    /// Reply returned once the script runs out (demo servers).
    pub fn with_fallback(mut self, reply: impl Into<String>) -> Self {
        self.fallback = Some(reply.into());
        self
    }

    pub fn push(&self, reply: impl Into<String>) {
        self.replies.lock().unwrap().push_back(reply.into());
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn last_request(&self) -> Option<CompletionRequest> {
        self.requests.lock().unwrap().last().cloned()
    }
}

#[async_trait]
impl ChatProvider for ScriptedProvider {
    async fn chat(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let calls = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        self.requests.lock().unwrap().push(request.clone());
        let next = self.replies.lock().unwrap().pop_front();
        next.or_else(|| self.fallback.clone())
            .ok_or(GatewayError::ScriptExhausted { calls })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn req() -> CompletionRequest {
        CompletionRequest::new(vec![ChatMessage::user("q")])
    }

    #[tokio::test]
    async fn replays_in_order() {
        let p = ScriptedProvider::new(["a", "b"]);
        assert_eq!(p.chat(&req()).await.unwrap(), "a");
        assert_eq!(p.chat(&req()).await.unwrap(), "b");
        assert!(matches!(p.chat(&req()).await, Err(GatewayError::ScriptExhausted { calls: 3 })));
    }

    #[tokio::test]
    async fn empty_script_exhausts_immediately() {
        let p = ScriptedProvider::new(Vec::<String>::new());
        assert!(matches!(p.chat(&req()).await, Err(GatewayError::ScriptExhausted { calls: 1 })));
    }

    #[tokio::test]
    async fn fallback_after_script() {
        let p = ScriptedProvider::new(["a"]).with_fallback("z");
        assert_eq!(p.chat(&req()).await.unwrap(), "a");
        assert_eq!(p.chat(&req()).await.unwrap(), "z");
        assert_eq!(p.chat(&req()).await.unwrap(), "z");
        assert_eq!(p.requests().len(), 3);
    }
}
