//! Helpers for talking to a live service over HTTP.
#![allow(dead_code)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::Value;

use gaplens_cli::{router, schemas, AppState};

/// Serve `state` on an ephemeral local port and return its base URL.
pub async fn spawn(state: Arc<AppState>) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(state)).await.unwrap();
    });
    format!("http://{addr}")
}

/// Validate `value` against a committed response schema.
pub fn check_schema(name: &str, value: &Value) -> Result<(), String> {
    let schema: Value = serde_json::from_str(schemas::by_name(name).ok_or(format!("no schema {name}"))?).unwrap();
    let validator = jsonschema::validator_for(&schema).map_err(|e| format!("schema {name}: {e}"))?;
    let errors: Vec<String> = validator.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(format!("{name}: {}", errors.join("; ")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SseFrame {
    pub event: String,
    pub data: String,
}

/// Minimal text/event-stream parser: blank-line separated frames, `event:`
/// and (possibly repeated) `data:` fields, comments ignored.
pub fn parse_sse(body: &str) -> Vec<SseFrame> {
    let mut frames = Vec::new();
    for block in body.replace("\r\n", "\n").split("\n\n") {
        let mut event = String::from("message");
        let mut data: Vec<&str> = Vec::new();
        let mut any = false;
        for line in block.lines() {
            if line.starts_with(':') {
                continue;
            }
            let (field, value) = line.split_once(':').unwrap_or((line, ""));
            let value = value.strip_prefix(' ').unwrap_or(value);
            match field {
                "event" => {
                    event = value.to_string();
                    any = true;
                }
                "data" => {
                    data.push(value);
                    any = true;
                }
                _ => {}
            }
        }
        if any {
            frames.push(SseFrame { event, data: data.join("\n") });
        }
    }
    frames
}

pub struct Client {
    pub base: String,
    pub http: reqwest::Client,
    pub token: Option<String>,
}

impl Client {
    pub fn new(base: String, token: Option<&str>) -> Self {
        Self { base, http: reqwest::Client::new(), token: token.map(str::to_string) }
    }

    pub async fn get(&self, path: &str, auth: bool) -> (u16, Value) {
        let mut req = self.http.get(format!("{}{path}", self.base));
        if auth {
            if let Some(t) = &self.token {
                req = req.bearer_auth(t);
            }
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let resp = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    /// POST to the streaming endpoint and collect every frame.
    pub async fn post_stream(&self, path: &str, body: Value) -> (u16, String, Vec<SseFrame>) {
        let resp = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = resp.status().as_u16();
        let ctype = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let text = resp.text().await.unwrap();
        (status, ctype, parse_sse(&text))
    }

    /// Poll /healthz until no analysis is pending.
    pub async fn wait_idle(&self, timeout: Duration) -> Result<Value, String> {
        let started = Instant::now();
        loop {
            let (_, health) = self.get("/healthz", false).await;
            if health["pending"] == 0 {
                return Ok(health);
            }
            if started.elapsed() > timeout {
                return Err(format!("analysis still pending after {timeout:?}: {health}"));
            }
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
    }
}
