use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use connprof_core::stats::Aggregation;
use connprof_core::Granularity;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::net::TcpListener;

use crate::error::ServiceError;
use crate::reports::{build_reports, ReportView};
use crate::service::EvalService;
use crate::view::ScreenView;

type Shared = State<Arc<EvalService>>;
type Reply<T> = Result<Json<T>, ServiceError>;

pub fn router(service: Arc<EvalService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/screen", get(screen))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/topic-comment", post(topic_comment))
        .route("/sessions/{id}/conjunct", post(conjunct))
        .route("/sessions/{id}/backtrack", post(backtrack))
        .route("/sessions/{id}/profile", get(profile))
        .route("/reports", get(reports))
        .fallback(|| async {
            ServiceError::BadRequest("no such route".into()).with_status(StatusCode::NOT_FOUND)
        })
        .with_state(service)
}

pub async fn serve(listener: TcpListener, service: Arc<EvalService>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}

impl ServiceError {
    fn with_status(self, status: StatusCode) -> (StatusCode, Json<crate::error::ErrorBody>) {
        (status, Json(self.body()))
    }
}

/// JSON body; an empty body reads as the default value.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ServiceError> {
    let bytes: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(format!("invalid body: {e}")))
}

async fn create_session(State(s): Shared, bytes: Bytes) -> Result<(StatusCode, Json<ScreenView>), ServiceError> {
    let view = s.create_session(body(&bytes)?).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn screen(State(s): Shared, Path(id): Path<String>) -> Reply<ScreenView> {
    Ok(Json(s.screen(&id).await?))
}

async fn answer(State(s): Shared, Path(id): Path<String>, bytes: Bytes) -> Reply<ScreenView> {
    Ok(Json(s.post_answer(&id, body(&bytes)?).await?))
}

async fn topic_comment(State(s): Shared, Path(id): Path<String>, bytes: Bytes) -> Reply<ScreenView> {
    Ok(Json(s.post_topic_comment(&id, body(&bytes)?).await?))
}

async fn conjunct(State(s): Shared, Path(id): Path<String>, bytes: Bytes) -> Reply<ScreenView> {
    Ok(Json(s.post_conjunct(&id, body(&bytes)?).await?))
}

async fn backtrack(State(s): Shared, Path(id): Path<String>, bytes: Bytes) -> Reply<ScreenView> {
    Ok(Json(s.post_backtrack(&id, body(&bytes)?).await?))
}

async fn profile(State(s): Shared, Path(id): Path<String>) -> Reply<connprof_core::ConnectivityProfile> {
    Ok(Json(s.profile(&id).await?))
}

#[derive(Debug, Default, Deserialize)]
struct ReportQuery {
    docs: Option<String>,
    granularity: Option<String>,
    pooled: Option<bool>,
    aggregation: Option<String>,
}

async fn reports(
    State(s): Shared,
    query: Result<Query<ReportQuery>, QueryRejection>,
) -> Reply<Vec<ReportView>> {
    let Query(q) = query.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let docs: Vec<String> = q
        .docs
        .as_deref()
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|d| !d.is_empty())
        .map(str::to_owned)
        .collect();
    let granularity: Granularity = q
        .granularity
        .as_deref()
        .unwrap_or("category")
        .parse()
        .map_err(|e: String| ServiceError::BadRequest(e))?;
    let aggregation: Aggregation = match q.aggregation.as_deref() {
        Some(a) => a.parse().map_err(ServiceError::BadRequest)?,
        None => Aggregation::default(),
    };
    let project = Arc::clone(s.project());
    let pooled = q.pooled.unwrap_or(false);
    let views = tokio::task::spawn_blocking(move || {
        build_reports(&project, &docs, granularity, pooled, aggregation)
    })
    .await
    .map_err(|e| ServiceError::Internal(format!("report task failed: {e}")))??;
    Ok(Json(views))
}
