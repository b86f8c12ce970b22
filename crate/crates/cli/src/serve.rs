//! HTTP backend for the curation workbench.
//!
//! | route | |
//! |---|---|
//! | `GET /healthz` | `{status}` |
//! | `GET /api/assays` | `[{id, title}]` |
//! | `GET /api/assays/{id}/next?session=` | `{assay_id, suggestion, decisions, approvals}` |
//! | `POST /api/assays/{id}/decision` | body `{statement_id, decision, session}`, returns the acknowledgment |
//! | `GET /api/assays/{id}/log?session=` | decision log |
//! | `GET /api/assays/{id}/triples?session=[&format=text]` | curated triples |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use semantify_core::curation::{CurationStore, Suggestion, Verdict};
use semantify_core::kgexport::triples_to_string;
use semantify_core::seed::{self, label};
use semantify_core::{Error, SamplingConfig, StatementId};

use crate::args::{CorpusArgs, ModelArgs};

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 170)]
    false_per_assay: usize,
    /// Listen address; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Write the bound address to this file once listening.
    #[arg(long)]
    address_file: Option<PathBuf>,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

fn error_response(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": message }))).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownAssay(_) => StatusCode::NOT_FOUND,
            Error::UnknownStatement(_) | Error::InvalidArgument(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::AlreadyDecided(_) => StatusCode::CONFLICT,
            e if e.is_remote() => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        error_response(status, self.0.to_string())
    }
}

type AppState = Arc<CurationStore>;

#[derive(Deserialize)]
pub struct SessionQuery {
    session: String,
    #[serde(default)]
    format: Option<String>,
}

fn session_of(q: Result<Query<SessionQuery>, QueryRejection>) -> Result<SessionQuery, Response> {
    match q {
        Ok(Query(q)) if !q.session.trim().is_empty() => Ok(q),
        Ok(_) => Err(error_response(StatusCode::BAD_REQUEST, "empty session token".into())),
        Err(e) => Err(error_response(StatusCode::BAD_REQUEST, e.body_text())),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(Error::Model(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

async fn assays(State(store): State<AppState>) -> Response {
    Json(store.assays()).into_response()
}

#[derive(Serialize)]
struct NextResponse {
    assay_id: String,
    suggestion: Option<Suggestion>,
    decisions: usize,
    approvals: usize,
}

async fn next(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<SessionQuery>, QueryRejection>,
) -> Response {
    let q = match session_of(query) {
        Ok(q) => q,
        Err(r) => return r,
    };
    let result = blocking(move || {
        let suggestion = store.next(&id, &q.session)?;
        let log = store.log(&id, &q.session)?;
        Ok(NextResponse {
            assay_id: id,
            suggestion,
            decisions: log.len(),
            approvals: log.iter().filter(|d| d.decision == Verdict::Approve).count(),
        })
    })
    .await;
    match result {
        Ok(r) => Json(r).into_response(),
        Err(e) => e.into_response(),
    }
}

#[derive(Deserialize)]
pub struct DecisionBody {
    statement_id: StatementId,
    decision: Verdict,
    session: String,
}

async fn decision(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DecisionBody>, JsonRejection>,
) -> Response {
    let body = match body {
        Ok(Json(b)) if !b.session.trim().is_empty() => b,
        Ok(_) => return error_response(StatusCode::BAD_REQUEST, "empty session token".into()),
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.body_text()),
    };
    match blocking(move || store.decide(&id, &body.session, body.statement_id, body.decision)).await {
        Ok(ack) => Json(ack).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn decision_log(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<SessionQuery>, QueryRejection>,
) -> Response {
    let q = match session_of(query) {
        Ok(q) => q,
        Err(r) => return r,
    };
    match store.log(&id, &q.session) {
        Ok(log) => Json(log).into_response(),
        Err(e) => ApiError(e).into_response(),
    }
}

async fn triples(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<SessionQuery>, QueryRejection>,
) -> Response {
    let q = match session_of(query) {
        Ok(q) => q,
        Err(r) => return r,
    };
    let set = match store.triples(&id, &q.session) {
        Ok(s) => s,
        Err(e) => return ApiError(e).into_response(),
    };
    match q.format.as_deref() {
        None | Some("json") => Json(set).into_response(),
        Some("text") => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], triples_to_string(&set)).into_response(),
        Some(other) => error_response(StatusCode::BAD_REQUEST, format!("unknown format `{other}`")),
    }
}

pub fn router(store: Arc<CurationStore>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/assays", get(assays))
        .route("/api/assays/{id}/next", get(next))
        .route("/api/assays/{id}/decision", post(decision))
        .route("/api/assays/{id}/log", get(decision_log))
        .route("/api/assays/{id}/triples", get(triples))
        .with_state(store)
}

pub fn serve(args: ServeArgs, run_seed: u64) -> Result<()> {
    let corpus = Arc::new(args.corpus.load()?.corpus);
    let sampling = SamplingConfig::new(args.false_per_assay, seed::derive(run_seed, label::SAMPLING));
    let model = args.model.resolve(Some(&corpus), &sampling, run_seed)?;
    let store = Arc::new(CurationStore::new(corpus, model.scorer));

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .with_context(|| format!("binding {}", args.bind))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        if let Some(path) = &args.address_file {
            std::fs::write(path, addr.to_string()).with_context(|| format!("writing {}", path.display()))?;
        }
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("serving")?;
        Ok(())
    })
}
