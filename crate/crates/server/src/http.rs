//! HTTP endpoints.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use presence_core::{AdmitError, Admitted, AggregatorKind, Evidence, OptInConfig, Timestamp};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tracing::{debug, info};

use crate::clock::ClockError;
use crate::hub::{Hub, HubError, SessionKind};
use crate::stream::{ndjson, HEARTBEAT_AFTER};

/// How often stored evidence is expired and fading states are published.
pub const SWEEP_INTERVAL: Duration = Duration::from_secs(10);

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    heartbeat: Duration,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn malformed(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed", message)
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            HubError::UnknownUser(_) => (StatusCode::NOT_FOUND, "unknown_user"),
            HubError::Admit(AdmitError::OptInDisabled { .. }) => (StatusCode::FORBIDDEN, "opt_in_disabled"),
            HubError::Admit(AdmitError::Malformed(_)) => (StatusCode::BAD_REQUEST, "malformed_evidence"),
            HubError::Admit(AdmitError::FutureTimestamp { .. }) => (StatusCode::BAD_REQUEST, "future_timestamp"),
            HubError::StatusTooLong { .. } => (StatusCode::BAD_REQUEST, "status_too_long"),
            HubError::Clock(ClockError::NotVirtual) => (StatusCode::CONFLICT, "clock_not_virtual"),
            HubError::Clock(ClockError::Backwards { .. }) => (StatusCode::BAD_REQUEST, "clock_backwards"),
            HubError::Log(_) => (StatusCode::INTERNAL_SERVER_ERROR, "log_failure"),
        };
        ApiError::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        debug!(status = %self.status, code = self.code, message = %self.message, "request refused");
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

/// Bodies are decoded by hand so every decoding failure is a plain 400.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

pub fn router(hub: Arc<Hub>) -> Router {
    router_with_heartbeat(hub, HEARTBEAT_AFTER)
}

pub fn router_with_heartbeat(hub: Arc<Hub>, heartbeat: Duration) -> Router {
    Router::new()
        .route("/evidence", post(post_evidence))
        .route("/stream", get(stream))
        .route("/status", post(post_status))
        .route("/prefs", post(post_prefs))
        .route("/prefs/{user_id}", get(get_prefs))
        .route("/card/{user_id}", get(get_card))
        .route("/session", post(post_session))
        .route("/aggregator-config/{kind}", get(allow_list))
        .route("/users", get(users))
        .route("/states", get(states))
        .route("/clock", post(post_clock))
        .with_state(AppState { hub, heartbeat })
}

async fn post_evidence(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let ev: Evidence = parse(&body)?;
    let admitted = app.hub.post_evidence(&ev)?;
    Ok(Json(json!({ "accepted": true, "stored": admitted == Admitted::Stored })).into_response())
}

async fn stream(State(app): State<AppState>) -> Response {
    let sub = app.hub.subscribe();
    (
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from_stream(ndjson(sub, app.heartbeat)),
    )
        .into_response()
}

#[derive(Deserialize)]
struct StatusBody {
    user_id: String,
    text: String,
}

async fn post_status(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let b: StatusBody = parse(&body)?;
    Ok(Json(app.hub.post_status(&b.user_id, &b.text)?).into_response())
}

async fn post_prefs(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let optin: OptInConfig = parse(&body)?;
    let changed = app.hub.update_prefs(optin)?;
    Ok(Json(json!({ "changed": changed })).into_response())
}

async fn get_prefs(State(app): State<AppState>, Path(user_id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(app.hub.prefs(&user_id)?).into_response())
}

async fn get_card(State(app): State<AppState>, Path(user_id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(app.hub.card(&user_id)?).into_response())
}

#[derive(Deserialize)]
struct SessionBody {
    user_id: String,
    kind: SessionKind,
}

async fn post_session(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let b: SessionBody = parse(&body)?;
    Ok(Json(app.hub.session(&b.user_id, b.kind)?).into_response())
}

async fn allow_list(State(app): State<AppState>, Path(kind): Path<String>) -> Result<Response, ApiError> {
    let kind: AggregatorKind = kind
        .parse()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "unknown_kind", format!("unknown aggregator kind `{kind}`")))?;
    Ok(Json(app.hub.allow_list(kind)).into_response())
}

async fn users(State(app): State<AppState>) -> Response {
    Json(app.hub.users()).into_response()
}

async fn states(State(app): State<AppState>) -> Response {
    Json(app.hub.states()).into_response()
}

#[derive(Serialize, Deserialize)]
struct ClockBody {
    now: Timestamp,
}

async fn post_clock(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let b: ClockBody = parse(&body)?;
    app.hub.set_clock(b.now)?;
    Ok(Json(ClockBody { now: app.hub.clock().now() }).into_response())
}

/// Periodic expiry; stops when the hub is dropped elsewhere and this is the
/// last handle, or when the task is aborted.
pub fn spawn_sweeper(hub: Arc<Hub>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(every);
        interval.tick().await;
        loop {
            interval.tick().await;
            let changed = hub.sweep();
            if changed > 0 {
                debug!(changed, "sweep published changes");
            }
        }
    })
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    hub: Arc<Hub>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    info!(addr = %listener.local_addr()?, "hub listening");
    let sweeper = spawn_sweeper(hub.clone(), SWEEP_INTERVAL);
    let result = axum::serve(listener, router(hub)).with_graceful_shutdown(shutdown).await;
    sweeper.abort();
    result
}
