//! Session server for live ring-task trials.
//!
//! HTTP endpoints:
//!
//! - `POST /sessions` with an optional JSON body `{"participant": "..."}`
//!   creates a session and returns its id and schedule.
//! - `GET /sessions/{id}` returns the session manifest.
//! - `GET /ws?session={id}` upgrades to the websocket described in
//!   [`protocol`].
//! - `GET /health` answers `ok`.
//!
//! Sessions are numbered in creation order. Session `k` runs row `k` of the
//! counterbalanced schedule drawn from the configured seed, so two servers with
//! the same configuration assign the same schedules.

pub mod outbox;
pub mod protocol;
pub mod session;

use std::collections::HashMap;
use std::fs;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fittsbench::config::BenchConfig;
use fittsbench::geometry::Condition;
use serde::{Deserialize, Serialize};

use crate::protocol::{ClientMessage, ServerBody, ServerMessage, PROTOCOL_VERSION};
use crate::session::{parse_session_id, Session};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    Conflict(String),
    #[error("storage unavailable: {0}")]
    Storage(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Core(#[from] fittsbench::Error),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Storage(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Protocol(_) | ServiceError::Core(_) => StatusCode::BAD_REQUEST,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

struct Registry {
    next_ordinal: u64,
    sessions: HashMap<String, Arc<Session>>,
}

#[derive(Clone)]
pub struct AppState {
    cfg: Arc<BenchConfig>,
    registry: Arc<Mutex<Registry>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    participant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub ordinal: u64,
    pub schedule: Vec<Condition>,
    pub websocket: String,
}

impl AppState {
    /// Numbering continues after the sessions already in the data directory.
    pub fn new(cfg: BenchConfig) -> Result<Self, ServiceError> {
        cfg.validate()?;
        let next_ordinal = match fs::read_dir(&cfg.server.data_dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok())
                .filter_map(|e| parse_session_id(e.file_name().to_str()?))
                .map(|k| k + 1)
                .max()
                .unwrap_or(0),
            Err(_) => 0,
        };
        Ok(Self { cfg: Arc::new(cfg), registry: Arc::new(Mutex::new(Registry { next_ordinal, sessions: HashMap::new() })) })
    }

    pub fn config(&self) -> &BenchConfig {
        &self.cfg
    }

    pub fn create_session(&self, participant: Option<String>) -> Result<CreatedSession, ServiceError> {
        let mut reg = self.registry.lock().unwrap();
        let ordinal = reg.next_ordinal;
        let session = Session::create(&self.cfg, ordinal, participant)?;
        reg.next_ordinal += 1;
        let created = CreatedSession {
            session_id: session.id.clone(),
            ordinal,
            schedule: session.manifest().schedule(),
            websocket: format!("/ws?session={}", session.id),
        };
        reg.sessions.insert(session.id.clone(), Arc::new(session));
        Ok(created)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ServiceError> {
        self.registry.lock().unwrap().sessions.get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/ws", get(ws_upgrade))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(cfg: BenchConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let listen = cfg.server.listen.clone();
    let state = AppState::new(cfg)?;
    let listener = tokio::net::TcpListener::bind(&listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Json<CreatedSession>, ServiceError> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::Protocol(e.to_string()))?
    };
    Ok(Json(state.create_session(req.participant)?))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<session::Manifest>, ServiceError> {
    Ok(Json(state.session(&id)?.manifest()))
}

#[derive(Deserialize)]
struct WsQuery {
    session: String,
}

async fn ws_upgrade(State(state): State<AppState>, Query(q): Query<WsQuery>, ws: WebSocketUpgrade) -> Result<Response, ServiceError> {
    let session = state.session(&q.session)?;
    session.connect()?;
    Ok(ws.on_upgrade(move |socket| async move {
        connection(socket, &session).await;
        session.disconnect();
    }))
}

struct Sender {
    seq: u64,
    opened: Instant,
}

impl Sender {
    async fn send(&mut self, socket: &mut WebSocket, body: ServerBody) -> bool {
        let msg = ServerMessage { seq: self.seq, ts: self.opened.elapsed().as_secs_f64(), body };
        self.seq += 1;
        let text = serde_json::to_string(&msg).expect("server messages serialize");
        socket.send(Message::Text(text.into())).await.is_ok()
    }
}

async fn connection(mut socket: WebSocket, session: &Arc<Session>) {
    let mut tx = Sender { seq: 0, opened: Instant::now() };
    let mut greeted = false;
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<ClientMessage>(&text) {
                    Err(e) => Some(ServerBody::error(format!("bad message: {e}"))),
                    Ok(ClientMessage::Hello { protocol_version }) if protocol_version != PROTOCOL_VERSION => {
                        let msg = format!("protocol version {protocol_version} not supported, server speaks {PROTOCOL_VERSION}");
                        tx.send(&mut socket, ServerBody::error(msg)).await;
                        return;
                    }
                    Ok(ClientMessage::Hello { .. }) => {
                        greeted = true;
                        Some(session.hello())
                    }
                    Ok(_) if !greeted => Some(ServerBody::error("send hello first")),
                    Ok(ClientMessage::StartTrial) => session.start_trial().err().map(|e| ServerBody::error(e.to_string())),
                    Ok(ClientMessage::Input { x, y }) => session.ingest_input(x, y).err().map(|e| ServerBody::error(e.to_string())),
                };
                if let Some(body) = reply {
                    if !tx.send(&mut socket, body).await {
                        return;
                    }
                }
            }
            _ = session.outbox.notified() => {
                for body in session.outbox.drain() {
                    if !tx.send(&mut socket, body).await {
                        return;
                    }
                }
            }
        }
    }
}
