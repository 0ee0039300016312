//! HTTP service: student chat endpoints, instructor reports, and the
//! background analysis workers that turn new student messages into
//! aggregated gap counts.

use std::collections::{HashMap, HashSet};
use std::convert::Infallible;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Duration;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, Notify};

use gaplens_core::aggregate::{FrequencyReport, Window};
use gaplens_core::store::{pseudonymize, EventBody, EventStore, StoreError};
use gaplens_core::{
    ChatMessage, Clock, DialogueAgent, DialogueError, GapIdentifier, KcRegistry, ReportStatus, SessionReport, Timestamp,
};

pub const DEFAULT_TOP_N: usize = 5;
pub const DEFAULT_LECTURE_MINUTES: i64 = 90;
pub const DEFAULT_WORKERS: usize = 4;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Bearer token for report endpoints. `None` locks them entirely.
    pub instructor_token: Option<String>,
    pub pseudonym_salt: String,
    pub workers: usize,
    pub lecture_minutes: i64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            instructor_token: None,
            pseudonym_salt: "gaplens".into(),
            workers: DEFAULT_WORKERS,
            lecture_minutes: DEFAULT_LECTURE_MINUTES,
        }
    }
}

// ---------------------------------------------------------------------------
// Wire types

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub student_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub course_id: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageReply {
    pub session_id: String,
    /// 1-based index of the student message this reply answers.
    pub turn: usize,
    pub reply: ChatMessage,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptView {
    pub session_id: String,
    pub course_id: String,
    pub messages: Vec<ChatMessage>,
    pub awaiting_reply: bool,
    pub created_at: Timestamp,
    pub updated_at: Timestamp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub course_id: String,
    pub registry_version: String,
    pub last_seq: u64,
    pub sessions: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
pub struct TopQuery {
    pub n: Option<usize>,
    pub window: Option<String>,
}

// ---------------------------------------------------------------------------
// Errors

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("message text is empty")]
    EmptyMessage,
    #[error("missing or invalid instructor token")]
    Unauthorized,
    #[error("tutor model failed: {0}")]
    Provider(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn parts(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, "NotFound"),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "InvalidRequest"),
            ApiError::EmptyMessage => (StatusCode::BAD_REQUEST, "EmptyMessage"),
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, "Unauthorized"),
            ApiError::Provider(_) => (StatusCode::BAD_GATEWAY, "ProviderError"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal"),
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { error: self.parts().1.to_string(), message: self.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.parts().0, Json(self.body())).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

fn session_not_found(id: &str) -> ApiError {
    ApiError::NotFound(format!("no session {id}"))
}

// ---------------------------------------------------------------------------
// State

pub struct AppState {
    store: Mutex<EventStore>,
    agent: Arc<DialogueAgent>,
    identifier: Arc<GapIdentifier>,
    registry: Arc<KcRegistry>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
    chat_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    analysis_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    queue: mpsc::UnboundedSender<String>,
    queued: Mutex<HashSet<String>>,
    pending: AtomicUsize,
    idle: Notify,
}

impl AppState {
    /// Build the state and spawn the analysis workers. Must run inside a
    /// tokio runtime.
    pub fn start(
        store: EventStore,
        agent: Arc<DialogueAgent>,
        identifier: Arc<GapIdentifier>,
        clock: Arc<dyn Clock>,
        config: ServiceConfig,
    ) -> Arc<Self> {
        let (tx, rx) = mpsc::unbounded_channel();
        let state = Arc::new(Self {
            store: Mutex::new(store),
            registry: identifier.registry().clone(),
            agent,
            identifier,
            clock,
            config,
            chat_locks: Mutex::new(HashMap::new()),
            analysis_locks: Mutex::new(HashMap::new()),
            queue: tx,
            queued: Mutex::new(HashSet::new()),
            pending: AtomicUsize::new(0),
            idle: Notify::new(),
        });
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..state.config.workers.max(1) {
            // Workers hold a weak handle so dropping the service stops them.
            let weak = Arc::downgrade(&state);
            let rx = rx.clone();
            tokio::spawn(async move {
                loop {
                    let next = rx.lock().await.recv().await;
                    let (Some(session_id), Some(state)) = (next, weak.upgrade()) else { break };
                    state.run_analysis(&session_id).await;
                }
            });
        }
        // Sessions with unanalyzed student messages from a previous run.
        let backlog: Vec<String> = {
            let store = state.store.lock().unwrap();
            let st = store.state();
            st.sessions
                .values()
                .filter(|s| s.student_chars() > 0)
                .filter(|s| st.reports.get(&s.session_id).is_none_or(|r| r.turns_analyzed < gaplens_core::dialogue::turn_pairs(s).len()))
                .map(|s| s.session_id.clone())
                .collect()
        };
        for id in backlog {
            state.enqueue(&id);
        }
        state
    }

    pub fn registry(&self) -> &Arc<KcRegistry> {
        &self.registry
    }

    pub fn pending(&self) -> usize {
        self.pending.load(Ordering::SeqCst)
    }

    pub fn last_seq(&self) -> u64 {
        self.store.lock().unwrap().state().last_seq
    }

    /// Wait until every queued analysis has finished.
    pub async fn drain(&self) {
        loop {
            let notified = self.idle.notified();
            tokio::pin!(notified);
            notified.as_mut().enable();
            if self.pending() == 0 {
                return;
            }
            notified.await;
        }
    }

    fn lock_for(map: &Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        map.lock().unwrap().entry(id.to_string()).or_default().clone()
    }

    fn enqueue(&self, session_id: &str) {
        if self.queued.lock().unwrap().insert(session_id.to_string()) {
            self.pending.fetch_add(1, Ordering::SeqCst);
            if self.queue.send(session_id.to_string()).is_err() {
                self.finish_job();
            }
        }
    }

    fn finish_job(&self) {
        if self.pending.fetch_sub(1, Ordering::SeqCst) == 1 {
            self.idle.notify_waiters();
        }
    }

    async fn run_analysis(&self, session_id: &str) {
        let lock = Self::lock_for(&self.analysis_locks, session_id);
        let _guard = lock.lock().await;
        // Later messages re-queue the session from here on.
        self.queued.lock().unwrap().remove(session_id);
        let session = self.store.lock().unwrap().state().sessions.get(session_id).cloned();
        if let Some(session) = session {
            let report = self.identifier.analyze_session(&session).await;
            let analyzed = report.status == ReportStatus::Analyzed;
            let now = self.clock.now();
            let mut store = self.store.lock().unwrap();
            let result = store.append(EventBody::ReportStored { report }, now).and_then(|_| {
                if analyzed {
                    store.append(EventBody::AggregateRecorded { session_id: session_id.to_string() }, now)?;
                }
                Ok(())
            });
            if let Err(err) = result {
                tracing::error!(session = session_id, error = %err, "storing analysis failed");
            }
        }
        self.finish_job();
    }

    pub fn create_session(&self, student_id: Option<&str>) -> Result<SessionCreated, ApiError> {
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let raw = student_id.filter(|s| !s.trim().is_empty()).unwrap_or(&session_id);
        let student_ref = pseudonymize(&self.config.pseudonym_salt, raw);
        let course_id = self.registry.course_id().to_string();
        self.store.lock().unwrap().append(
            EventBody::SessionCreated { session_id: session_id.clone(), course_id: course_id.clone(), student_ref },
            self.clock.now(),
        )?;
        Ok(SessionCreated { session_id, course_id })
    }

    pub fn transcript(&self, session_id: &str) -> Result<TranscriptView, ApiError> {
        let store = self.store.lock().unwrap();
        let s = store.state().sessions.get(session_id).ok_or_else(|| session_not_found(session_id))?;
        Ok(TranscriptView {
            session_id: s.session_id.clone(),
            course_id: s.course_id.clone(),
            messages: s.messages.clone(),
            awaiting_reply: s.awaiting_reply(),
            created_at: s.created_at,
            updated_at: s.updated_at,
        })
    }

    fn check_message(&self, session_id: &str, text: &str) -> Result<(), ApiError> {
        if text.trim().is_empty() {
            return Err(ApiError::EmptyMessage);
        }
        if !self.store.lock().unwrap().state().sessions.contains_key(session_id) {
            return Err(session_not_found(session_id));
        }
        Ok(())
    }

    /// Log the student message, queue it for analysis, get the tutor reply
    /// and log that too. Messages on one session are handled one at a time.
    pub async fn send_message(&self, session_id: &str, text: &str) -> Result<MessageReply, ApiError> {
        self.check_message(session_id, text)?;
        let lock = Self::lock_for(&self.chat_locks, session_id);
        let _guard = lock.lock().await;

        let mut session = {
            let mut store = self.store.lock().unwrap();
            store
                .append(
                    EventBody::MessageAppended { session_id: session_id.to_string(), message: ChatMessage::user(text.trim()) },
                    self.clock.now(),
                )
                .map_err(|e| match e {
                    StoreError::Rejected(msg) => ApiError::BadRequest(msg),
                    other => other.into(),
                })?;
            store.state().sessions[session_id].clone()
        };
        self.enqueue(session_id);

        let reply = self.agent.reply_to_pending(&mut session).await.map_err(|e| match e {
            DialogueError::RespondFailed(g) => ApiError::Provider(g.to_string()),
            DialogueError::EmptyReply => ApiError::Provider("model returned an empty reply".into()),
            other => ApiError::Internal(other.to_string()),
        })?;
        let message = ChatMessage::assistant(reply);
        self.store.lock().unwrap().append(
            EventBody::MessageAppended { session_id: session_id.to_string(), message: message.clone() },
            self.clock.now(),
        )?;
        let turn = session.student_messages().count();
        Ok(MessageReply { session_id: session_id.to_string(), turn, reply: message })
    }

    fn authorize(&self, headers: &HeaderMap) -> Result<(), ApiError> {
        let expected = self.config.instructor_token.as_deref().ok_or(ApiError::Unauthorized)?;
        let given = headers
            .get(axum::http::header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ApiError::Unauthorized)?;
        if constant_time_eq(given.as_bytes(), expected.as_bytes()) {
            Ok(())
        } else {
            Err(ApiError::Unauthorized)
        }
    }

    pub fn lecture_window(&self) -> Window {
        let now = self.clock.now();
        // Half-open, so push the end just past now to include this instant.
        Window { start: now - Duration::minutes(self.config.lecture_minutes), end: now + Duration::milliseconds(1) }
    }

    pub fn top(&self, n: usize, window: Option<Window>) -> FrequencyReport {
        self.store.lock().unwrap().state().aggregator.top_n(n, window)
    }

    pub fn session_report(&self, session_id: &str) -> Result<SessionReport, ApiError> {
        self.store
            .lock()
            .unwrap()
            .state()
            .reports
            .get(session_id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no report for session {session_id}")))
    }

    pub fn health(&self) -> Health {
        let store = self.store.lock().unwrap();
        let st = store.state();
        Health {
            status: "ok".into(),
            course_id: self.registry.course_id().to_string(),
            registry_version: self.registry.version().to_string(),
            last_seq: st.last_seq,
            sessions: st.sessions.len(),
            pending: self.pending(),
        }
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

// ---------------------------------------------------------------------------
// Routes

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/messages", post(post_message_stream))
        .route("/api/sessions/{id}/messages/sync", post(post_message_sync))
        .route("/api/reports/top", get(get_top))
        .route("/api/reports/sessions/{id}", get(get_session_report))
        .route("/healthz", get(health))
        .with_state(state)
}

fn parse_json<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateSessionRequest = parse_json(&body)?;
    let created = state.create_session(req.student_id.as_deref())?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<TranscriptView>, ApiError> {
    state.transcript(&id).map(Json)
}

fn message_request(body: &Bytes) -> Result<MessageRequest, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("expected {{\"text\": ...}}: {e}")))
}

async fn post_message_sync(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<MessageReply>, ApiError> {
    let req = message_request(&body)?;
    state.send_message(&id, &req.text).await.map(Json)
}

/// Streams `delta` events carrying reply text, then one `done` event with
/// the full [`MessageReply`], or one `error` event with an [`ErrorBody`].
async fn post_message_stream(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req = message_request(&body)?;
    state.check_message(&id, &req.text)?;
    let (tx, rx) = mpsc::channel::<SseEvent>(32);
    tokio::spawn(async move {
        match state.send_message(&id, &req.text).await {
            Ok(reply) => {
                for piece in reply.reply.content.split_inclusive(' ') {
                    if tx.send(SseEvent::default().event("delta").data(piece)).await.is_err() {
                        // Client went away; the reply is already stored.
                        return;
                    }
                }
                let done = SseEvent::default().event("done").json_data(&reply).expect("reply serializes");
                let _ = tx.send(done).await;
            }
            Err(err) => {
                let event = SseEvent::default().event("error").json_data(err.body()).expect("error serializes");
                let _ = tx.send(event).await;
            }
        }
    });
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|ev| (Ok::<_, Infallible>(ev), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()).into_response())
}

async fn get_top(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(q): Query<TopQuery>,
) -> Result<Json<FrequencyReport>, ApiError> {
    state.authorize(&headers)?;
    let n = q.n.unwrap_or(DEFAULT_TOP_N);
    if n == 0 {
        return Err(ApiError::BadRequest("n must be at least 1".into()));
    }
    let window = match q.window.as_deref().unwrap_or("lecture") {
        "lecture" => Some(state.lecture_window()),
        "all" => None,
        other => return Err(ApiError::BadRequest(format!("unknown window {other:?}; use lecture or all"))),
    };
    Ok(Json(state.top(n, window)))
}

async fn get_session_report(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> Result<Json<SessionReport>, ApiError> {
    state.authorize(&headers)?;
    state.session_report(&id).map(Json)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(state.health())
}
