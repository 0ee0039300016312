use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatProvider, CompletionRequest, GatewayError, DEFAULT_CONCURRENCY};

pub const ENV_PROVIDER_URL: &str = "QQ_PROVIDER_URL";
pub const ENV_MODEL: &str = "QQ_MODEL";
pub const ENV_API_KEY_VAR: &str = "QQ_API_KEY_VAR";

static HTTP_REQUESTS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests sent to model providers by this process.
pub fn http_requests_sent() -> u64 {
    HTTP_REQUESTS.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key. The key itself
    /// is read at request time and never stored.
    pub api_key_var: Option<String>,
    pub timeout_secs: u64,
    pub retry_limit: u32,
    pub max_concurrency: usize,
}

impl ProviderConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_var: None,
            timeout_secs: 60,
            retry_limit: 2,
            max_concurrency: DEFAULT_CONCURRENCY,
        }
    }

    /// Reads `QQ_PROVIDER_URL`, `QQ_MODEL` and `QQ_API_KEY_VAR`.
    pub fn from_env() -> Result<Self, GatewayError> {
        let get = |name: &str| {
            std::env::var(name)
                .ok()
                .filter(|v| !v.trim().is_empty())
        };
        let endpoint = get(ENV_PROVIDER_URL)
            .ok_or_else(|| GatewayError::InvalidConfig(format!("{ENV_PROVIDER_URL} is not set")))?;
        let model = get(ENV_MODEL)
            .ok_or_else(|| GatewayError::InvalidConfig(format!("{ENV_MODEL} is not set")))?;
        let mut config = Self::new(endpoint, model);
        config.api_key_var = get(ENV_API_KEY_VAR);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.timeout_secs == 0 {
            return Err(GatewayError::InvalidConfig("timeout must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(GatewayError::InvalidConfig("max_concurrency must be positive".into()));
        }
        reqwest::Url::parse(&self.endpoint)
            .map_err(|e| GatewayError::InvalidConfig(format!("endpoint {}: {e}", self.endpoint)))?;
        Ok(())
    }
}

/// Chat-completions client for OpenAI-style HTTP endpoints.
#[derive(Debug)]
pub struct HttpProvider {
    config: ProviderConfig,
    client: reqwest::Client,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        Ok(Self { config, client })
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if request.response_schema.is_some() {
            body["response_format"] = json!({"type": "json_object"});
        }
        body
    }

    async fn send_once(&self, body: &Value) -> Result<Value, Attempt> {
        let mut builder = self.client.post(&self.config.endpoint).json(body);
        if let Some(var) = &self.config.api_key_var {
            if let Ok(key) = std::env::var(var) {
                builder = builder.bearer_auth(key);
            }
        }
        HTTP_REQUESTS.fetch_add(1, Ordering::SeqCst);
        let response = builder.send().await.map_err(|e| Attempt::Retryable(GatewayError::Transport(e.to_string())))?;
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| Attempt::Retryable(GatewayError::Transport(e.to_string())))?;
        if !status.is_success() {
            let err = GatewayError::ProviderRejection { status: status.as_u16(), body: text };
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Retryable(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        serde_json::from_str(&text).map_err(|e| {
            Attempt::Fatal(GatewayError::ProviderRejection {
                status: status.as_u16(),
                body: format!("unparseable response body: {e}"),
            })
        })
    }
}

enum Attempt {
    Retryable(GatewayError),
    Fatal(GatewayError),
}

fn extract_content(response: &Value) -> Result<String, GatewayError> {
    response
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::ProviderRejection {
            status: 200,
            body: "response has no choices[0].message.content".into(),
        })
}

#[async_trait]
impl ChatProvider for HttpProvider {
    async fn chat(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let body = self.body(request);
        let mut attempt = 0;
        loop {
            match self.send_once(&body).await {
                Ok(response) => return extract_content(&response),
                Err(Attempt::Fatal(err)) => return Err(err),
                Err(Attempt::Retryable(err)) if attempt >= self.config.retry_limit => return Err(err),
                Err(Attempt::Retryable(err)) => {
                    tracing::warn!(attempt, error = %err, "provider call failed, retrying");
                    tokio::time::sleep(Duration::from_millis(100 << attempt.min(6))).await;
                    attempt += 1;
                }
            }
        }
    }
}
