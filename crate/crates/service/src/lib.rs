//! HTTP oracle service: serves the uncertainty-ranked query queue, takes
//! labels from a human, retrains in the background and reports progress.
//!
//! | route | |
//! |---|---|
//! | `GET /api/queue?limit=K` | top `K` pool windows by current score |
//! | `POST /api/labels` | `{"id":"w12","label":1}` |
//! | `POST /api/retrain` | `{"epochs":10}`, answered with `202` while training runs |
//! | `GET /api/status` | model version, counts, last test accuracy |
//!
//! All state lives in one [`ServiceState`] behind a lock, so the sequence of
//! observable states is always some serial order of label submissions and
//! retrain completions. Reads during a retrain see the last finished model.

mod state;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

pub use state::{LabelError, QueueItem, RetrainStart, ServiceConfig, ServiceState, Status};

pub type Shared = Arc<RwLock<ServiceState>>;

const DEFAULT_QUEUE_LIMIT: usize = 10;

pub fn shared(state: ServiceState) -> Shared {
    Arc::new(RwLock::new(state))
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/queue", get(queue))
        .route("/api/labels", post(label))
        .route("/api/retrain", post(retrain))
        .route("/api/status", get(status))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

fn read(state: &Shared) -> std::sync::RwLockReadGuard<'_, ServiceState> {
    state.read().unwrap_or_else(|e| e.into_inner())
}

fn write(state: &Shared) -> std::sync::RwLockWriteGuard<'_, ServiceState> {
    state.write().unwrap_or_else(|e| e.into_inner())
}

#[derive(Deserialize)]
struct QueueParams {
    limit: Option<usize>,
}

async fn queue(State(state): State<Shared>, Query(params): Query<QueueParams>) -> Response {
    match read(&state).queue(params.limit.unwrap_or(DEFAULT_QUEUE_LIMIT)) {
        Some(items) => Json(json!({ "items": items })).into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "error": "no model loaded" })),
        )
            .into_response(),
    }
}

#[derive(Deserialize)]
struct LabelBody {
    id: String,
    label: i64,
}

async fn label(State(state): State<Shared>, Json(body): Json<LabelBody>) -> Response {
    let (outcome, auto) = {
        let mut s = write(&state);
        let outcome = s.submit_label(&body.id, body.label);
        let auto = if outcome.is_ok() && s.wants_auto_retrain() {
            let epochs = s.config().retrain_epochs;
            s.begin_retrain(epochs).1
        } else {
            None
        };
        (outcome, auto)
    };
    if let Some(job) = auto {
        spawn_retrain(state.clone(), job);
    }
    match outcome {
        Ok(count) => Json(json!({ "accepted": true, "labeled_count": count })).into_response(),
        Err(e) => {
            let code = match e {
                LabelError::UnknownId => StatusCode::NOT_FOUND,
                LabelError::AlreadyLabeled | LabelError::BudgetExhausted => StatusCode::CONFLICT,
                LabelError::InvalidLabel => StatusCode::UNPROCESSABLE_ENTITY,
            };
            (code, Json(json!({ "accepted": false, "reason": e.reason() }))).into_response()
        }
    }
}

#[derive(Deserialize)]
struct RetrainBody {
    epochs: Option<usize>,
}

async fn retrain(State(state): State<Shared>, body: Option<Json<RetrainBody>>) -> Response {
    let (start, job) = {
        let mut s = write(&state);
        let epochs = body.and_then(|b| b.epochs).unwrap_or(s.config().retrain_epochs);
        s.begin_retrain(epochs)
    };
    if let Some(job) = job {
        spawn_retrain(state.clone(), job);
    }
    match start {
        RetrainStart::Started { version } => (
            StatusCode::ACCEPTED,
            Json(json!({ "job": "retrain", "model_version_on_start": version })),
        )
            .into_response(),
        RetrainStart::NothingNew { version } => {
            Json(json!({ "job": "none", "model_version_on_start": version })).into_response()
        }
        RetrainStart::Busy => (
            StatusCode::CONFLICT,
            Json(json!({ "error": "retrain already running" })),
        )
            .into_response(),
        RetrainStart::NotReady => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "error": "no model loaded" })),
        )
            .into_response(),
    }
}

async fn status(State(state): State<Shared>) -> Json<Status> {
    Json(read(&state).status())
}

fn spawn_retrain(state: Shared, job: state::RetrainJob) {
    tokio::task::spawn_blocking(move || {
        let result = job.run();
        write(&state).finish_retrain(result);
    });
}
