//! HTTP command API and per-session WebSocket stream.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | [`SessionConfig`] |
//! | GET | `/sessions` | |
//! | POST | `/sessions/{id}/events` | `{"event": "reveal"}` (script syntax) |
//! | GET | `/sessions/{id}` | |
//! | GET | `/sessions/{id}/stream?from_seq=N` | WebSocket upgrade |
//! | GET | `/stats?player=NAME` | |
//! | GET | `/devices` | |
//! | POST | `/devices/{id}/calibrate` | `{"fidelity": {"1": 0.9, ...}}` |
//! | POST | `/devices/{id}/kill` | |
//!
//! The stream only ever carries log records, one JSON text message each.
//! Commands go through the HTTP endpoints.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use thea_core::clock::{Clock, Millis, WallClock};
use thea_core::control::ScriptAction;
use tokio::sync::{broadcast, Notify};

use crate::config::SessionConfig;
use crate::error::ServiceError;
use crate::log::LogRecord;
use crate::registry::Registry;

const STREAM_BUFFER: usize = 1024;

struct Live {
    tx: broadcast::Sender<LogRecord>,
    wake: Arc<Notify>,
}

struct Inner {
    registry: Registry,
    live: HashMap<String, Live>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Mutex<Inner>>,
    clock: Arc<dyn Clock + Send + Sync>,
}

impl AppState {
    pub fn new(registry: Registry) -> Self {
        Self::with_clock(registry, Arc::new(WallClock))
    }

    pub fn with_clock(registry: Registry, clock: Arc<dyn Clock + Send + Sync>) -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner {
                registry,
                live: HashMap::new(),
            })),
            clock,
        }
    }

    fn now(&self) -> Millis {
        self.clock.now_ms()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }
}

impl Inner {
    /// Hands new records to stream subscribers.
    fn publish(&mut self, id: &str) -> Result<(), ServiceError> {
        let records = self.registry.take_new(id)?;
        if let Some(live) = self.live.get(id) {
            for r in records {
                // No subscribers is fine.
                let _ = live.tx.send(r);
            }
        }
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/stream", get(stream))
        .route("/stats", get(stats))
        .route("/devices", get(list_devices))
        .route("/devices/{id}/calibrate", post(calibrate))
        .route("/devices/{id}/kill", post(kill))
        .with_state(state)
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            ServiceError::InvalidConfig(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_config"),
            ServiceError::DevicesNotCalibrated(_) => {
                (StatusCode::CONFLICT, "devices_not_calibrated")
            }
            ServiceError::UnknownDevice(_) => (StatusCode::NOT_FOUND, "unknown_device"),
            ServiceError::DeviceBusy(_) => (StatusCode::CONFLICT, "device_busy"),
            ServiceError::KillSwitchEngaged(_) => (StatusCode::CONFLICT, "kill_switch_engaged"),
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::SessionEnded(_) => (StatusCode::GONE, "session_ended"),
            ServiceError::InvalidEvent(_) => (StatusCode::CONFLICT, "invalid_event"),
            ServiceError::Device(_) => (StatusCode::UNPROCESSABLE_ENTITY, "device_error"),
            ServiceError::BadLog(_) | ServiceError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        (
            status,
            Json(json!({ "error": kind, "message": self.0.to_string() })),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn create_session(
    State(app): State<AppState>,
    Json(config): Json<SessionConfig>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let now = app.now();
    let (id, wake) = {
        let mut inner = app.lock();
        let id = inner.registry.create_session(config, now)?;
        let (tx, _) = broadcast::channel(STREAM_BUFFER);
        let wake = Arc::new(Notify::new());
        inner.live.insert(
            id.clone(),
            Live {
                tx,
                wake: wake.clone(),
            },
        );
        inner.publish(&id)?;
        (id, wake)
    };
    tokio::spawn(drive(app.clone(), id.clone(), wake));
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session_id": id, "stream": format!("/sessions/{id}/stream") })),
    ))
}

/// Runs a session's timers and device traffic on the wall clock.
async fn drive(app: AppState, id: String, wake: Arc<Notify>) {
    loop {
        let now = app.now();
        let due = {
            let mut inner = app.lock();
            if inner.registry.tick(&id, now).is_err() {
                return;
            }
            let _ = inner.publish(&id);
            if inner.registry.is_ended(&id).unwrap_or(true) {
                return;
            }
            inner.registry.next_due(&id).ok().flatten()
        };
        match due {
            Some(t) => {
                let wait = std::time::Duration::from_millis(t.saturating_sub(app.now()));
                tokio::select! {
                    _ = tokio::time::sleep(wait) => {}
                    _ = wake.notified() => {}
                }
            }
            None => wake.notified().await,
        }
    }
}

async fn list_sessions(State(app): State<AppState>) -> Json<Vec<String>> {
    Json(app.lock().registry.session_ids())
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let now = app.now();
    let mut inner = app.lock();
    inner.registry.tick(&id, now)?;
    inner.publish(&id)?;
    Ok(Json(inner.registry.session_view(&id)?).into_response())
}

#[derive(Deserialize)]
struct EventBody {
    event: String,
}

async fn post_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<EventBody>,
) -> ApiResult<Json<serde_json::Value>> {
    let action: ScriptAction = body.event.parse().map_err(ServiceError::InvalidConfig)?;
    let now = app.now();
    let mut inner = app.lock();
    let result = inner.registry.dispatch(&id, action, now);
    if !matches!(result, Err(ServiceError::UnknownSession(_))) {
        inner.publish(&id)?;
        if let Some(live) = inner.live.get(&id) {
            live.wake.notify_one();
        }
    }
    result?;
    let view = inner.registry.session_view(&id)?;
    Ok(Json(
        json!({ "accepted": true, "phase": view.phase, "next_seq": view.next_seq }),
    ))
}

#[derive(Deserialize)]
struct StatsQuery {
    player: String,
}

async fn stats(State(app): State<AppState>, Query(q): Query<StatsQuery>) -> Response {
    Json(app.lock().registry.stats(&q.player)).into_response()
}

async fn list_devices(State(app): State<AppState>) -> ApiResult<Response> {
    let inner = app.lock();
    let views = inner
        .registry
        .device_ids()
        .iter()
        .map(|id| inner.registry.device_view(id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(views).into_response())
}

#[derive(Deserialize)]
struct CalibrateBody {
    fidelity: BTreeMap<String, f64>,
}

async fn calibrate(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<CalibrateBody>,
) -> ApiResult<Response> {
    let view = app.lock().registry.calibrate(&id, &body.fidelity)?;
    Ok(Json(view).into_response())
}

async fn kill(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let now = app.now();
    let mut inner = app.lock();
    let view = inner.registry.toggle_kill(&id, now)?;
    if let Some(sid) = view.session.clone() {
        inner.publish(&sid)?;
        if let Some(live) = inner.live.get(&sid) {
            live.wake.notify_one();
        }
    }
    Ok(Json(view).into_response())
}

#[derive(Deserialize)]
struct StreamQuery {
    #[serde(default)]
    from_seq: u64,
}

async fn stream(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
    ws: WebSocketUpgrade,
) -> ApiResult<Response> {
    // Subscribe and read the backlog under one lock so nothing falls between.
    let (backlog, rx) = {
        let inner = app.lock();
        let backlog = inner.registry.records_from(&id, q.from_seq)?;
        let rx = if inner.registry.is_ended(&id)? {
            None
        } else {
            inner.live.get(&id).map(|l| l.tx.subscribe())
        };
        (backlog, rx)
    };
    Ok(ws.on_upgrade(move |socket| forward(socket, backlog, rx)))
}

async fn forward(
    mut socket: WebSocket,
    backlog: Vec<LogRecord>,
    rx: Option<broadcast::Receiver<LogRecord>>,
) {
    let mut next_seq = 0;
    for r in backlog {
        next_seq = r.seq + 1;
        if socket
            .send(Message::Text(r.to_line().into()))
            .await
            .is_err()
        {
            return;
        }
    }
    let Some(mut rx) = rx else {
        let _ = socket.send(Message::Close(None)).await;
        return;
    };
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(r) => {
                    if r.seq < next_seq {
                        continue;
                    }
                    next_seq = r.seq + 1;
                    let ended = r.kind.name() == "session_ended";
                    if socket.send(Message::Text(r.to_line().into())).await.is_err() {
                        return;
                    }
                    if ended {
                        let _ = socket.send(Message::Close(None)).await;
                        return;
                    }
                }
                // A lagging client reconnects with from_seq.
                Err(broadcast::error::RecvError::Lagged(_)) | Err(broadcast::error::RecvError::Closed) => {
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                // Commands never travel on the stream.
                Some(Ok(_)) => {}
            },
        }
    }
}

/// Binds and serves until the process is stopped.
pub async fn serve(registry: Registry, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("thea listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(registry))).await
}
