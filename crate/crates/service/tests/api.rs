use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use futures::StreamExt;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use thea_core::control::TimingConfig;
use thea_core::game::{GameKind, GameMode};
use thea_service::api::{router, AppState};
use thea_service::config::default_rig;
use thea_service::log::{LogRecord, SessionLog};
use thea_service::registry::Registry;
use thea_service::{ServiceConfig, SessionConfig};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

struct Server {
    app: Router,
    addr: std::net::SocketAddr,
    dir: tempfile::TempDir,
}

async fn start() -> Server {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(&ServiceConfig {
        log_dir: dir.path().to_path_buf(),
        devices: default_rig(0.9),
    })
    .unwrap();
    let app = router(AppState::new(reg));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let served = app.clone();
    tokio::spawn(async move { axum::serve(listener, served).await });
    Server { app, addr, dir }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

/// Wall-clock timings short enough for a whole game to run in about a second.
fn quick(game: GameKind, mode: GameMode, seed: u64) -> Value {
    let mut c = SessionConfig::new(&["ren"], game, mode, seed);
    c.timing = TimingConfig {
        countdown_tick_ms: 15,
        actuation_ms: 30,
        interpret_window_ms: 30,
        reveal_ms: 20,
        breathing_max_ms: 60,
        inter_round_gap_ms: 15,
        first_pitch_ms: 5,
    };
    serde_json::to_value(c).unwrap()
}

type Ws =
    tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

/// Subscribed once this returns.
async fn subscribe(addr: std::net::SocketAddr, id: &str, from_seq: u64) -> Ws {
    let url = format!("ws://{addr}/sessions/{id}/stream?from_seq={from_seq}");
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

/// Collects stream records until the server closes the socket.
async fn drain(mut ws: Ws) -> Vec<LogRecord> {
    let mut out = Vec::new();
    let read = async {
        while let Some(msg) = ws.next().await {
            match msg.unwrap() {
                Message::Text(t) => out.push(serde_json::from_str::<LogRecord>(&t).unwrap()),
                Message::Close(_) => break,
                _ => {}
            }
        }
    };
    tokio::time::timeout(Duration::from_secs(30), read)
        .await
        .expect("stream ended in time");
    out
}

#[tokio::test(flavor = "multi_thread")]
async fn stream_carries_the_whole_log() {
    let srv = start().await;
    let (status, created) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Godai, GameMode::BestOf3, 11)),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();

    let reader = tokio::spawn(drain(subscribe(srv.addr, &id, 0).await));
    let (status, _) = call(
        &srv.app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some(json!({"event": "start"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let streamed = reader.await.unwrap();

    assert!(
        streamed.iter().enumerate().all(|(i, r)| r.seq == i as u64),
        "gap or reorder in stream"
    );
    assert_eq!(streamed.last().unwrap().kind.name(), "session_ended");
    let text = std::fs::read_to_string(srv.dir.path().join(format!("{id}.jsonl"))).unwrap();
    let log = SessionLog::parse(&text).unwrap();
    assert_eq!(log.records, streamed);

    let (status, view) = call(&srv.app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["ended"], "completed");

    // Reconnecting resumes from the requested sequence number.
    let tail = drain(subscribe(srv.addr, &id, 10).await).await;
    assert_eq!(tail, streamed[10..].to_vec());

    let (status, stats) = call(&srv.app, "GET", "/stats?player=ren", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["games"]["godai"]["count"], 1);
    assert_eq!(stats["games"]["epta"]["count"], 0);

    let (status, again) = call(
        &srv.app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some(json!({"event": "reveal"})),
    )
    .await;
    assert_eq!(status, StatusCode::GONE);
    assert_eq!(again["error"], "session_ended");
}

#[tokio::test(flavor = "multi_thread")]
async fn command_errors_map_to_statuses() {
    let srv = start().await;
    let (status, body) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Epta, GameMode::BestOf3, 1)),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "invalid_config");

    let (status, created) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Idio, GameMode::FreePlay, 1)),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap();

    let (status, body) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Godai, GameMode::BestOf5, 2)),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "device_busy");

    let (status, body) = call(
        &srv.app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some(json!({"event": "reveal"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "invalid_event");

    let (status, _) = call(
        &srv.app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some(json!({"event": "dance"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, body) = call(
        &srv.app,
        "POST",
        "/sessions/nope/events",
        Some(json!({"event": "start"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown_session");

    let (status, body) = call(
        &srv.app,
        "POST",
        "/devices/left/calibrate",
        Some(json!({"fidelity": {"1": 0.5}})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "device_busy");

    let (status, body) = call(&srv.app, "POST", "/devices/ghost/kill", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown_device");

    let (status, list) = call(&srv.app, "GET", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list, json!([id]));
}

#[tokio::test(flavor = "multi_thread")]
async fn kill_switch_over_http_reaches_safe_off() {
    let srv = start().await;
    let (_, created) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Godai, GameMode::BestOf5, 4)),
    )
    .await;
    let id = created["session_id"].as_str().unwrap().to_string();
    let reader = tokio::spawn(drain(subscribe(srv.addr, &id, 0).await));
    call(
        &srv.app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some(json!({"event": "start"})),
    )
    .await;
    call(
        &srv.app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some(json!({"event": "voice skip_breathing"})),
    )
    .await;
    tokio::time::sleep(Duration::from_millis(50)).await;
    let (status, dev) = call(&srv.app, "POST", "/devices/left/kill", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(dev["status"]["kill_switch_on"], true);

    let streamed = reader.await.unwrap();
    let names: Vec<&str> = streamed.iter().map(|r| r.kind.name()).collect();
    assert!(names.contains(&"kill_switch"));
    let (_, view) = call(&srv.app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["ended"], "safe_off");

    // The engaged switch blocks a new session until it is released.
    let (status, body) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Godai, GameMode::BestOf3, 5)),
    )
    .await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::CONFLICT, Some("kill_switch_engaged"))
    );
    call(&srv.app, "POST", "/devices/left/kill", None).await;
    let (status, devices) = call(&srv.app, "GET", "/devices", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(devices.as_array().unwrap().len(), 2);
    assert_eq!(devices[0]["status"]["kill_switch_on"], false);
    let (status, _) = call(
        &srv.app,
        "POST",
        "/sessions",
        Some(quick(GameKind::Godai, GameMode::BestOf3, 5)),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
}
