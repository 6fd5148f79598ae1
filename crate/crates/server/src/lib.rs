//! HTTP API for the flow editor: node specs, live validation and test
//! sessions with a streamed provenance feed.
//!
//! Validation is stateless; the only server-side state is live sessions.
//! Every JSON body uses the same serialization as `edgeflow` CLI output.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use edgeflow_core::flow::{load_flow, FlowError, Registry};
use edgeflow_core::report::{pretty, to_json, validate};
use edgeflow_core::runtime::{lineage, window, MsgId, Record, RunError, Session, SessionConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::watch;

/// Steps taken between publishing records to subscribers.
const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Running,
    Finished,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub id: u64,
    pub state: SessionState,
    pub records: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Progress {
    records: usize,
    state: SessionState,
}

struct Live {
    id: u64,
    log: Mutex<Vec<Record>>,
    progress: watch::Sender<Progress>,
    stop: AtomicBool,
}

impl Live {
    fn status(&self) -> SessionStatus {
        let p = *self.progress.borrow();
        SessionStatus {
            id: self.id,
            state: p.state,
            records: p.records,
        }
    }
}

pub struct AppState {
    registry: Registry,
    sessions: Mutex<HashMap<u64, Arc<Live>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(registry: Registry) -> Arc<Self> {
        Arc::new(AppState {
            registry,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Live>, ApiError> {
        id.parse::<u64>()
            .ok()
            .and_then(|id| self.sessions.lock().unwrap().get(&id).cloned())
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown-session", format!("no session `{id}`")))
    }

    /// Ask every running session to stop, so open streams end.
    pub fn stop_all(&self) {
        for live in self.sessions.lock().unwrap().values() {
            live.stop.store(true, Ordering::SeqCst);
        }
    }
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": { "code": code, "message": message.into() } }),
        }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body["error"][key] = value;
        self
    }

    fn flow(e: FlowError) -> Self {
        let code = match e {
            FlowError::Parse { .. } => "parse-error",
            _ => "invalid-flow",
        };
        let location = e.location();
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string()).with("location", location)
    }

    fn run(e: RunError) -> Self {
        let err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string());
        match e {
            RunError::Refused(diags) => err.with("diagnostics", serde_json::to_value(diags).unwrap()),
            _ => err,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, json_body(pretty(&self.body))).into_response()
    }
}

fn json_body(text: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], text)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/nodespecs", get(nodespecs))
        .route("/api/flows/validate", post(validate_flow))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_status))
        .route("/api/sessions/{id}/stream", get(stream))
        .route("/api/sessions/{id}/provenance", get(provenance))
        .route("/api/sessions/{id}/stop", post(stop))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such route") })
        .with_state(state)
}

/// Serve until `shutdown` resolves, then stop live sessions and drain.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(state.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            shutdown.await;
            state.stop_all();
        })
        .await
}

async fn health() -> impl IntoResponse {
    json_body(pretty(&json!({ "status": "ok" })))
}

async fn nodespecs(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    json_body(state.registry.to_json())
}

async fn validate_flow(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let flow = load_flow(&body, &state.registry).map_err(ApiError::flow)?;
    Ok(json_body(to_json(&validate(&flow, &state.registry))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionRequest {
    flow: Value,
    seed: u64,
    duration: u64,
    #[serde(default)]
    profiles: BTreeMap<String, String>,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: SessionRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad-request", e.to_string()))?;
    let flow_bytes = serde_json::to_vec(&req.flow).expect("value serializes");
    let flow = load_flow(&flow_bytes, &state.registry).map_err(ApiError::flow)?;
    let config = SessionConfig {
        seed: req.seed,
        duration: req.duration,
        profiles: req.profiles,
    };
    let session = Session::new(&flow, &state.registry, config).map_err(ApiError::run)?;
    let id = state.next_id.fetch_add(1, Ordering::SeqCst);
    let (progress, _) = watch::channel(Progress {
        records: 0,
        state: SessionState::Running,
    });
    let live = Arc::new(Live {
        id,
        log: Mutex::new(Vec::new()),
        progress,
        stop: AtomicBool::new(false),
    });
    state.sessions.lock().unwrap().insert(id, live.clone());
    tokio::task::spawn_blocking(move || drive(session, &live));
    Ok((StatusCode::CREATED, json_body(pretty(&json!({ "id": id })))))
}

/// Step the session on a blocking thread, publishing records in batches.
fn drive(mut session: Session, live: &Live) {
    let mut published = 0;
    loop {
        if live.stop.load(Ordering::SeqCst) {
            live.progress.send_modify(|p| p.state = SessionState::Stopped);
            return;
        }
        let mut done = false;
        for _ in 0..BATCH {
            if session.step().is_none() {
                done = true;
                break;
            }
        }
        let log = session.log();
        live.log.lock().unwrap().extend_from_slice(&log[published..]);
        published = log.len();
        let state = if done { SessionState::Finished } else { SessionState::Running };
        live.progress.send_replace(Progress {
            records: published,
            state,
        });
        if done {
            return;
        }
    }
}

async fn session_status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(json_body(pretty(&state.session(&id)?.status())))
}

async fn stop(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let live = state.session(&id)?;
    live.stop.store(true, Ordering::SeqCst);
    let mut rx = live.progress.subscribe();
    // The driver always leaves Running before it exits.
    let _ = rx.wait_for(|p| p.state != SessionState::Running).await;
    Ok(json_body(pretty(&live.status())))
}

/// One provenance record per line, in session order, until the session
/// finishes or is stopped.
async fn stream(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let live = state.session(&id)?;
    let rx = live.progress.subscribe();
    let frames = futures::stream::unfold((live, rx, 0usize), |(live, mut rx, cursor)| async move {
        loop {
            let next = live.log.lock().unwrap().get(cursor).cloned();
            if let Some(record) = next {
                let line = serde_json::to_string(&record).expect("records serialize") + "\n";
                return Some((Ok::<_, std::io::Error>(Bytes::from(line)), (live, rx, cursor + 1)));
            }
            let progress = *rx.borrow_and_update();
            if progress.state != SessionState::Running && cursor >= progress.records {
                return None;
            }
            if rx.changed().await.is_err() {
                return None;
            }
        }
    });
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], Body::from_stream(frames)))
}

#[derive(Debug, Deserialize)]
struct ProvenanceQuery {
    node: Option<String>,
    message: Option<String>,
    from: Option<u64>,
    to: Option<u64>,
}

/// `?node=&from=&to=` lists a node's records in a time window;
/// `?message=seed:seq` returns that message's lineage tree.
async fn provenance(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ProvenanceQuery>,
) -> Result<impl IntoResponse, ApiError> {
    let live = state.session(&id)?;
    let log = live.log.lock().unwrap();
    let inspect = |e: edgeflow_core::runtime::InspectError| {
        let status = match e.code() {
            "bad-range" => StatusCode::BAD_REQUEST,
            _ => StatusCode::NOT_FOUND,
        };
        ApiError::new(status, e.code(), e.to_string())
    };
    let text = match (q.node, q.message) {
        (Some(node), None) => {
            let records = window(&log, &node, q.from.unwrap_or(0), q.to.unwrap_or(u64::MAX)).map_err(inspect)?;
            pretty(&records)
        }
        (None, Some(message)) => {
            let id: MsgId = message
                .parse()
                .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "bad-request", e))?;
            pretty(&lineage(&log, id).map_err(inspect)?)
        }
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad-request",
                "give exactly one of `node` or `message`",
            ))
        }
    };
    Ok(json_body(text))
}
