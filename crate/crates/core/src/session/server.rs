//! HTTP and WebSocket front end for sessions.
//!
//! Routes:
//! - `POST /sessions` (optional JSON `ProtocolConfig`; empty or `null`
//!   uses the server default) creates a session
//! - `GET /targets` lists target ids and grid sizes (never occupancy)
//! - `GET /sessions/{id}` current view
//! - `POST /sessions/{id}/begin`, `POST /sessions/{id}/end_sensing`
//!   (optional JSON `{"t": seconds}`)
//! - `POST /sessions/{id}/drawing` mask text body, optional `?t=`
//! - `GET /sessions/{id}/log` JSON lines
//! - `GET /assets/{target}/{cell}.wav`
//! - `GET /sessions/{id}/gaze` WebSocket: client sends `{t, x, y, valid}`,
//!   server sends `{"type":"trigger",..}` and `{"type":"phase",..}`, the
//!   latter once on connect and again on every transition

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use super::protocol::{Phase, ProtocolConfig, Session, SubmitOutcome, TargetCatalog, TrialPlan};
use super::{GazeSample, GridLayout, SessionError};
use crate::geometry::{ShapeMask, TargetRole};

/// Messages pushed to WebSocket clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Trigger { t: f64, cell: usize, asset: String },
    Phase { phase: Phase, trial: Option<usize> },
    Error { message: String },
}

struct SessionHandle {
    session: Mutex<Session>,
    events: broadcast::Sender<ServerMessage>,
    flushed: Mutex<usize>,
}

pub struct AppState {
    catalog: TargetCatalog,
    log_dir: Option<PathBuf>,
    default_config: ProtocolConfig,
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
}

impl AppState {
    /// `log_dir`, when set, receives `<session>.jsonl` appended as records
    /// accumulate.
    pub fn new(catalog: TargetCatalog, log_dir: Option<PathBuf>) -> Arc<Self> {
        Self::with_config(catalog, log_dir, ProtocolConfig::default())
    }

    /// Like [`AppState::new`], with the config used when `POST /sessions`
    /// has an empty or `null` body.
    pub fn with_config(catalog: TargetCatalog, log_dir: Option<PathBuf>, default_config: ProtocolConfig) -> Arc<Self> {
        Arc::new(Self { catalog, log_dir, default_config, sessions: Mutex::new(HashMap::new()) })
    }

    fn handle(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()).into())
    }

    fn persist(&self, h: &SessionHandle) -> std::io::Result<()> {
        let Some(dir) = &self.log_dir else { return Ok(()) };
        let s = h.session.lock().unwrap();
        let mut flushed = h.flushed.lock().unwrap();
        let fresh = &s.records()[*flushed..];
        if fresh.is_empty() {
            return Ok(());
        }
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(dir.join(format!("{}.jsonl", s.id())))?;
        f.write_all(super::log::to_json_lines(fresh).as_bytes())?;
        *flushed = s.records().len();
        Ok(())
    }
}

pub struct ApiError(StatusCode, String);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::WrongPhase { .. } | SessionError::NonMonotonic { .. } => StatusCode::CONFLICT,
            SessionError::DimensionMismatch { .. } | SessionError::EmptyDrawing | SessionError::InvalidDrawing(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::Io(_) | SessionError::Analytics(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(status, e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

/// What a client may know about the session: no target occupancy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub phase: Phase,
    pub trial: Option<TrialPlan>,
    pub trial_count: usize,
    pub layout: Option<GridLayout>,
}

fn view(s: &Session) -> SessionView {
    SessionView {
        session_id: s.id().to_string(),
        phase: s.phase(),
        trial: s.current_trial().cloned(),
        trial_count: s.trials().len(),
        layout: s.layout(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetInfo {
    pub id: String,
    pub cols: usize,
    pub rows: usize,
    pub role: TargetRole,
}

#[derive(Debug, Default, Deserialize)]
struct TimeArg {
    t: Option<f64>,
}

fn time_arg(body: &Bytes) -> Result<Option<f64>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(None);
    }
    serde_json::from_slice::<TimeArg>(body)
        .map(|a| a.t)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid body: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/targets", get(list_targets))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/begin", post(begin))
        .route("/sessions/{id}/end_sensing", post(end_sensing))
        .route("/sessions/{id}/drawing", post(drawing))
        .route("/sessions/{id}/log", get(log))
        .route("/sessions/{id}/gaze", get(gaze_ws))
        .route("/assets/{target}/{file}", get(asset))
        .with_state(state)
}

/// Serves until the listener fails or the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn list_targets(State(st): State<Arc<AppState>>) -> Json<Vec<TargetInfo>> {
    Json(
        st.catalog
            .targets()
            .map(|t| TargetInfo { id: t.id.clone(), cols: t.mask.cols(), rows: t.mask.rows(), role: t.role })
            .collect(),
    )
}

async fn create_session(State(st): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let config: Option<ProtocolConfig> = if body.iter().all(u8::is_ascii_whitespace) {
        None
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid config: {e}")))?
    };
    let config = config.unwrap_or_else(|| st.default_config.clone());
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), config, &st.catalog)?;
    let v = view(&session);
    let handle = Arc::new(SessionHandle {
        session: Mutex::new(session),
        events: broadcast::channel(256).0,
        flushed: Mutex::new(0),
    });
    st.persist(&handle)?;
    st.sessions.lock().unwrap().insert(id, handle);
    Ok((StatusCode::CREATED, Json(v)))
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let h = st.handle(&id)?;
    let v = view(&h.session.lock().unwrap());
    Ok(Json(v))
}

fn announce(h: &SessionHandle, s: &Session) {
    let trial = s.current_trial().map(|t| t.index);
    // no subscribers is fine
    let _ = h.events.send(ServerMessage::Phase { phase: s.phase(), trial });
}

async fn begin(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<SessionView>, ApiError> {
    let t = time_arg(&body)?;
    let h = st.handle(&id)?;
    let v = {
        let mut s = h.session.lock().unwrap();
        s.begin(t)?;
        announce(&h, &s);
        view(&s)
    };
    st.persist(&h)?;
    Ok(Json(v))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EndSensingResponse {
    pub phase: Phase,
    pub sensing_time: f64,
}

async fn end_sensing(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<EndSensingResponse>, ApiError> {
    let t = time_arg(&body)?;
    let h = st.handle(&id)?;
    let r = {
        let mut s = h.session.lock().unwrap();
        let sensing_time = s.end_sensing(t)?;
        announce(&h, &s);
        EndSensingResponse { phase: s.phase(), sensing_time }
    };
    st.persist(&h)?;
    Ok(Json(r))
}

async fn drawing(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<TimeArg>,
    body: String,
) -> Result<Json<SubmitOutcome>, ApiError> {
    let mask = ShapeMask::parse(&body).map_err(SessionError::InvalidDrawing)?;
    let h = st.handle(&id)?;
    let out = {
        let mut s = h.session.lock().unwrap();
        let out = s.submit_drawing(mask, q.t)?;
        announce(&h, &s);
        out
    };
    st.persist(&h)?;
    Ok(Json(out))
}

async fn log(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let h = st.handle(&id)?;
    let text = h.session.lock().unwrap().export_log();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn asset(State(st): State<Arc<AppState>>, Path((target, file)): Path<(String, String)>) -> Result<Response, ApiError> {
    let not_found = || ApiError(StatusCode::NOT_FOUND, format!("no asset {target}/{file}"));
    let spec = st.catalog.get(&target).ok_or_else(not_found)?;
    let cell: usize = file.strip_suffix(".wav").and_then(|n| n.parse().ok()).ok_or_else(not_found)?;
    if cell >= spec.mask.len() {
        return Err(not_found());
    }
    let path = st.catalog.asset_path(&target, cell).ok_or_else(not_found)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    Ok(([(header::CONTENT_TYPE, "audio/wav"), (header::CACHE_CONTROL, "max-age=3600")], bytes).into_response())
}

async fn gaze_ws(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let h = st.handle(&id)?;
    Ok(ws.on_upgrade(move |socket| gaze_loop(socket, st, h)))
}

fn to_text(m: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(m).expect("messages serialize").into())
}

async fn gaze_loop(socket: WebSocket, st: Arc<AppState>, h: Arc<SessionHandle>) {
    let (mut tx, mut rx) = socket.split();
    let mut events = h.events.subscribe();
    // current phase first, so a (re)connecting client starts in sync
    let hello = {
        let s = h.session.lock().unwrap();
        ServerMessage::Phase { phase: s.phase(), trial: s.current_trial().map(|t| t.index) }
    };
    if tx.send(to_text(&hello)).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            incoming = rx.next() => {
                let text = match incoming {
                    Some(Ok(Message::Text(text))) => text,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<GazeSample>(&text) {
                    Err(e) => Some(ServerMessage::Error { message: format!("invalid gaze sample: {e}") }),
                    Ok(sample) => {
                        let r = h.session.lock().unwrap().ingest_gaze(sample);
                        match r {
                            Ok(Some(ev)) => Some(ServerMessage::Trigger { t: ev.t, cell: ev.cell, asset: ev.asset }),
                            Ok(None) => None,
                            Err(e) => Some(ServerMessage::Error { message: e.to_string() }),
                        }
                    }
                };
                if let Some(m) = reply {
                    if tx.send(to_text(&m)).await.is_err() {
                        break;
                    }
                }
            }
            ev = events.recv() => {
                match ev {
                    Ok(m) => {
                        if tx.send(to_text(&m)).await.is_err() {
                            break;
                        }
                    }
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                }
            }
        }
    }
    if let Err(e) = st.persist(&h) {
        log::warn!("could not write session log: {e}");
    }
}
