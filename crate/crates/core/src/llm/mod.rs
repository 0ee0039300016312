//! Model gateway.
//!
//! Every model call in the crate goes through [`Gateway::complete`]. The
//! gateway validates the request, caps concurrency per provider, and enforces
//! structured output: when a request carries a [`ResponseSchema`], the reply
//! must be a JSON document matching it. A non-conforming reply gets exactly
//! one repair reprompt before the call fails with
//! [`GatewayError::SchemaViolation`].

mod http;
mod scripted;

use std::fmt;
use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Semaphore;

pub use http::{http_requests_sent, HttpProvider, ProviderConfig, ENV_API_KEY_VAR, ENV_MODEL, ENV_PROVIDER_URL};
pub use scripted::ScriptedProvider;

/// Default number of in-flight requests per provider.
pub const DEFAULT_CONCURRENCY: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider rejected request with status {status}: {body}")]
    ProviderRejection { status: u16, body: String },
    #[error("reply does not match schema {schema}: {detail}")]
    SchemaViolation { schema: String, detail: String },
    #[error("scripted provider exhausted after {calls} calls")]
    ScriptExhausted { calls: usize },
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// A compiled JSON schema that replies must satisfy.
#[derive(Clone)]
pub struct ResponseSchema {
    name: String,
    schema: Value,
    validator: Arc<jsonschema::Validator>,
}

impl fmt::Debug for ResponseSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResponseSchema").field("name", &self.name).finish()
    }
}

impl ResponseSchema {
    pub fn new(name: impl Into<String>, schema: Value) -> Result<Self, GatewayError> {
        let name = name.into();
        let validator = jsonschema::validator_for(&schema)
            .map_err(|e| GatewayError::InvalidRequest(format!("schema {name}: {e}")))?;
        Ok(Self { name, schema, validator: Arc::new(validator) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Value {
        &self.schema
    }

    /// Parse `reply` as JSON (tolerating a surrounding code fence) and
    /// validate it. Returns the parsed document.
    pub fn check(&self, reply: &str) -> Result<Value, String> {
        let value: Value =
            serde_json::from_str(strip_code_fence(reply)).map_err(|e| format!("not JSON: {e}"))?;
        let errors: Vec<String> = self
            .validator
            .iter_errors(&value)
            .map(|e| format!("{} at {}", e, e.instance_path()))
            .collect();
        if errors.is_empty() {
            Ok(value)
        } else {
            Err(errors.join("; "))
        }
    }
}

fn strip_code_fence(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let body = rest.split_once('\n').map(|(_, body)| body).unwrap_or("");
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub response_schema: Option<ResponseSchema>,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        Self { messages, response_schema: None, temperature: 0.7, max_tokens: 1024 }
    }

    pub fn with_schema(mut self, schema: ResponseSchema) -> Self {
        self.response_schema = Some(schema);
        self
    }

    pub fn with_temperature(mut self, temperature: f32) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |msg: &str| Err(GatewayError::InvalidRequest(msg.to_string()));
        if self.messages.is_empty() {
            return bad("no messages");
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return bad("temperature outside [0, 1]");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        for (i, m) in self.messages.iter().enumerate() {
            match m.role {
                Role::System if i != 0 => return bad("system message must come first and only once"),
                Role::User | Role::Assistant if m.content.trim().is_empty() => {
                    return bad("empty user/assistant message")
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// All message contents joined; convenient for prompt assertions.
    pub fn prompt_text(&self) -> String {
        self.messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n")
    }
}

/// A chat-completion backend. Implementations return the assistant text.
#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn chat(&self, request: &CompletionRequest) -> Result<String, GatewayError>;
}

/// Shareable handle in front of one provider.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    permits: Arc<Semaphore>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway").field("available_permits", &self.permits.available_permits()).finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Self::with_concurrency(provider, DEFAULT_CONCURRENCY)
    }

    pub fn with_concurrency(provider: Arc<dyn ChatProvider>, max_in_flight: usize) -> Self {
        Self { provider, permits: Arc::new(Semaphore::new(max_in_flight.max(1))) }
    }

    pub fn http(config: ProviderConfig) -> Result<Self, GatewayError> {
        let cap = config.max_concurrency;
        Ok(Self::with_concurrency(Arc::new(HttpProvider::new(config)?), cap))
    }

    pub fn scripted(provider: Arc<ScriptedProvider>) -> Self {
        Self::new(provider)
    }

    async fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        self.provider.chat(request).await
    }

    pub async fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let reply = self.call(request).await?;
        let Some(schema) = &request.response_schema else {
            return Ok(reply);
        };
        let detail = match schema.check(&reply) {
            Ok(_) => return Ok(strip_code_fence(&reply).to_string()),
            Err(detail) => detail,
        };

        tracing::debug!(schema = schema.name(), %detail, "reply failed schema, sending repair prompt");
        let mut repair = request.clone();
        repair.messages.push(ChatMessage::assistant(if reply.trim().is_empty() {
            "(empty reply)".to_string()
        } else {
            reply
        }));
        repair.messages.push(ChatMessage::user(format!(
            "Your previous reply was rejected: {detail}. Reply again with only a JSON document \
             that matches this schema, with no surrounding prose:\n{}",
            schema.schema()
        )));
        let second = self.call(&repair).await?;
        match schema.check(&second) {
            Ok(_) => Ok(strip_code_fence(&second).to_string()),
            Err(detail) => {
                Err(GatewayError::SchemaViolation { schema: schema.name().to_string(), detail })
            }
        }
    }

    /// [`Gateway::complete`] followed by deserialization into `T`.
    pub async fn complete_json<T: serde::de::DeserializeOwned>(
        &self,
        request: &CompletionRequest,
    ) -> Result<T, GatewayError> {
        let name = request
            .response_schema
            .as_ref()
            .map(|s| s.name().to_string())
            .unwrap_or_else(|| "unnamed".into());
        let text = self.complete(request).await?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::SchemaViolation { schema: name, detail: e.to_string() })
    }
}
