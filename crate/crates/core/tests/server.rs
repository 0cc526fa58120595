//! Session service over real sockets: HTTP routes, the gaze WebSocket,
//! status codes, assets and log persistence.

use std::time::Duration;

use echotrain::geometry::ShapeMask;
use echotrain::session::server::{AppState, ServerMessage};
use echotrain::session::{parse_log, GridLayout, LogRecord, ScreenRect, TargetCatalog};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

struct Server {
    base: String,
    ws: String,
    http: reqwest::Client,
}

async fn start(catalog: TargetCatalog, log_dir: Option<std::path::PathBuf>) -> Server {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(echotrain::session::server::serve(listener, AppState::new(catalog, log_dir)));
    Server { base: format!("http://{addr}"), ws: format!("ws://{addr}"), http: reqwest::Client::new() }
}

impl Server {
    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn post_text(&self, path: &str, body: &str) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).body(body.to_string()).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn get(&self, path: &str) -> (u16, String) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.text().await.unwrap())
    }
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next_msg(ws: &mut Ws) -> Option<(String, ServerMessage)> {
    loop {
        match tokio::time::timeout(Duration::from_millis(500), ws.next()).await {
            Ok(Some(Ok(Message::Text(t)))) => {
                let m = serde_json::from_str(&t).unwrap();
                return Some((t.to_string(), m));
            }
            Ok(Some(Ok(_))) => continue,
            _ => return None,
        }
    }
}

async fn send_gaze(ws: &mut Ws, t: f64, x: f64, y: f64) {
    let m = json!({ "t": t, "x": x, "y": y, "valid": true }).to_string();
    ws.send(Message::Text(m.into())).await.unwrap();
}

fn layout() -> GridLayout {
    GridLayout { rect: ScreenRect::default(), cols: 5, rows: 5 }
}

/// Row patterns of a mask, as they would appear if occupancy leaked.
fn leaks(payload: &str, mask: &ShapeMask) -> bool {
    payload.contains(&mask.to_text()) || payload.contains("\"mask\"") || payload.contains("\"cells\"")
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_trial_over_http_and_websocket() {
    let logs = tempfile::tempdir().unwrap();
    let catalog = TargetCatalog::default_library();
    let t1 = catalog.get("T1").unwrap().mask.clone();
    let srv = start(catalog, Some(logs.path().to_path_buf())).await;

    let (status, targets) = srv.get("/targets").await;
    assert_eq!(status, 200);
    let targets: Vec<Value> = serde_json::from_str(&targets).unwrap();
    assert_eq!(targets.len(), 13);
    assert!(targets.iter().all(|t| t["cols"] == 5 && t["rows"] == 5 && t.get("mask").is_none()));

    let (status, view) =
        srv.post("/sessions", json!({ "training_trials": ["T1"], "test_trials": ["U2"] })).await;
    assert_eq!(status, 201);
    assert_eq!(view["phase"], "idle");
    assert_eq!(view["trial_count"], 2);
    let id = view["session_id"].as_str().unwrap().to_string();

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("{}/sessions/{id}/gaze", srv.ws)).await.unwrap();
    let mut sensing_payloads: Vec<String> = Vec::new();
    let hello = next_msg(&mut ws).await.unwrap().1;
    assert_eq!(hello, ServerMessage::Phase { phase: echotrain::session::Phase::Idle, trial: Some(0) });

    let (status, view) = srv.post(&format!("/sessions/{id}/begin"), json!({ "t": 0.0 })).await;
    assert_eq!(status, 200);
    assert_eq!(view["phase"], "sensing");
    sensing_payloads.push(view.to_string());
    let (raw, m) = next_msg(&mut ws).await.unwrap();
    assert_eq!(m, ServerMessage::Phase { phase: echotrain::session::Phase::Sensing, trial: Some(0) });
    sensing_payloads.push(raw);

    // three distinct cells, a repeat, and a point off the grid
    let l = layout();
    let path = [(0.5, 0), (0.6, 0), (0.7, 6), (0.8, 6), (0.9, 12)];
    let mut triggers = Vec::new();
    for (t, cell) in path {
        let (x, y) = l.cell_center(cell);
        send_gaze(&mut ws, t, x, y).await;
    }
    send_gaze(&mut ws, 1.0, 1.5, 0.5).await;
    while let Some((raw, m)) = next_msg(&mut ws).await {
        sensing_payloads.push(raw);
        if let ServerMessage::Trigger { cell, asset, .. } = m {
            assert_eq!(asset, format!("/assets/T1/{cell}.wav"));
            triggers.push(cell);
        }
    }
    assert_eq!(triggers, vec![0, 6, 12]);
    let (_, view) = srv.get(&format!("/sessions/{id}")).await;
    sensing_payloads.push(view);
    for p in &sensing_payloads {
        assert!(!leaks(p, &t1), "sensing payload leaks the target: {p}");
    }

    let (status, end) = srv.post(&format!("/sessions/{id}/end_sensing"), json!({ "t": 5.0 })).await;
    assert_eq!(status, 200);
    assert_eq!(end["phase"], "drawing");
    assert_eq!(end["sensing_time"], 5.0);
    assert!(matches!(next_msg(&mut ws).await.unwrap().1, ServerMessage::Phase { phase: echotrain::session::Phase::Drawing, .. }));

    // training trial: feedback carries the true mask, cell for cell
    let (status, out) = srv.post_text(&format!("/sessions/{id}/drawing?t=6"), &t1.to_text()).await;
    assert_eq!(status, 200, "{out}");
    assert_eq!(out["result"]["difference"], 0.0);
    assert_eq!(out["result"]["matched"], true);
    assert_eq!(ShapeMask::parse(out["feedback"].as_str().unwrap()).unwrap(), t1);
    assert_eq!(out["phase"], "idle");

    // test trial: no feedback, session finishes
    srv.post(&format!("/sessions/{id}/begin"), json!({ "t": 10.0 })).await;
    srv.post(&format!("/sessions/{id}/end_sensing"), json!({ "t": 12.0 })).await;
    let (status, out) = srv.post_text(&format!("/sessions/{id}/drawing?t=13"), &ShapeMask::full(5, 5).to_text()).await;
    assert_eq!(status, 200);
    assert!(out["feedback"].is_null());
    assert_eq!(out["phase"], "finished");
    assert!(out["result"]["difference"].as_f64().unwrap() > 0.0);

    let (status, text) = srv.get(&format!("/sessions/{id}/log")).await;
    assert_eq!(status, 200);
    let recs = parse_log(&text).unwrap();
    assert_eq!(recs.iter().filter(|r| matches!(r, LogRecord::Trigger { .. })).count(), 3);
    assert_eq!(recs.iter().filter(|r| matches!(r, LogRecord::Result { .. })).count(), 2);

    drop(ws);
    tokio::time::sleep(Duration::from_millis(100)).await;
    let on_disk = std::fs::read_to_string(logs.path().join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(on_disk, text);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn error_statuses() {
    let srv = start(TargetCatalog::default_library(), None).await;
    assert_eq!(srv.post("/sessions/nope/begin", json!({})).await.0, 404);
    assert_eq!(srv.get("/sessions/nope").await.0, 404);
    assert_eq!(srv.post("/sessions", json!({ "test_trials": ["Q7"] })).await.0, 400);
    assert_eq!(srv.post_text("/sessions", "{not json").await.0, 400);

    let (_, view) = srv.post("/sessions", json!({ "training_trials": ["T2"], "test_trials": [] })).await;
    let id = view["session_id"].as_str().unwrap();
    assert_eq!(srv.post(&format!("/sessions/{id}/end_sensing"), json!({})).await.0, 409);
    assert_eq!(srv.post_text(&format!("/sessions/{id}/drawing"), "#\n").await.0, 409);
    srv.post(&format!("/sessions/{id}/begin"), json!({ "t": 1.0 })).await;
    assert_eq!(srv.post(&format!("/sessions/{id}/begin"), json!({})).await.0, 409);
    srv.post(&format!("/sessions/{id}/end_sensing"), json!({ "t": 2.0 })).await;
    assert_eq!(srv.post_text(&format!("/sessions/{id}/drawing?t=3"), "##\n##\n").await.0, 422);
    assert_eq!(srv.post_text(&format!("/sessions/{id}/drawing?t=3"), ".....\n.....\n.....\n.....\n.....\n").await.0, 422);
    assert_eq!(srv.post_text(&format!("/sessions/{id}/drawing?t=3"), "#x\n").await.0, 422);
    assert_eq!(srv.post_text(&format!("/sessions/{id}/drawing?t=1"), &ShapeMask::full(5, 5).to_text()).await.0, 409);
    let (status, out) = srv.post_text(&format!("/sessions/{id}/drawing?t=3"), &ShapeMask::full(5, 5).to_text()).await;
    assert_eq!(status, 200);
    assert_eq!(out["phase"], "finished");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_reports_bad_samples() {
    let srv = start(TargetCatalog::default_library(), None).await;
    let (_, view) = srv.post("/sessions", json!({ "training_trials": ["T2"], "test_trials": [] })).await;
    let id = view["session_id"].as_str().unwrap();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("{}/sessions/{id}/gaze", srv.ws)).await.unwrap();
    next_msg(&mut ws).await.unwrap();
    ws.send(Message::Text("{\"x\": 1}".into())).await.unwrap();
    assert!(matches!(next_msg(&mut ws).await.unwrap().1, ServerMessage::Error { .. }));
    // gaze outside Sensing is an error too
    send_gaze(&mut ws, 0.1, 0.5, 0.5).await;
    assert!(matches!(next_msg(&mut ws).await.unwrap().1, ServerMessage::Error { .. }));
    assert!(tokio_tungstenite::connect_async(format!("{}/sessions/missing/gaze", srv.ws)).await.is_err());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn assets_and_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("T1")).unwrap();
    std::fs::write(dir.path().join("T1/3.wav"), b"RIFFfake").unwrap();
    let srv = start(TargetCatalog::default_library().with_assets(dir.path()), None).await;

    let (status, body) = srv.get("/assets/T1/3.wav").await;
    assert_eq!((status, body.as_str()), (200, "RIFFfake"));
    assert_eq!(srv.get("/assets/T1/4.wav").await.0, 404);
    assert_eq!(srv.get("/assets/T1/25.wav").await.0, 404);
    assert_eq!(srv.get("/assets/T1/x.wav").await.0, 404);
    assert_eq!(srv.get("/assets/ZZ/0.wav").await.0, 404);

    // T1 lacks most of its cells, so no session may use it
    let (status, err) = srv.post("/sessions", json!({ "training_trials": ["T1"], "test_trials": [] })).await;
    assert_eq!(status, 400);
    assert!(err["error"].as_str().unwrap().contains("T1"));
}
