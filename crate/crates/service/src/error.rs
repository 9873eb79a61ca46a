use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use connprof_core::dialog::DialogError;
use connprof_core::stats::StatsError;
use connprof_core::store::{ArtifactKind, StoreError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown-artifact: {kind} '{id}' is not in the project")]
    UnknownArtifact { kind: ArtifactKind, id: String },
    #[error("not-found: session '{0}'")]
    SessionNotFound(String),
    #[error("invalid-config: {0}")]
    InvalidConfig(String),
    #[error("stale-request: stage token {got} is outdated, the session is at {current}")]
    StaleRequest { got: u64, current: u64 },
    #[error("session-in-progress: session '{0}' has no profile yet")]
    SessionInProgress(String),
    #[error("bad-request: {0}")]
    BadRequest(String),
    #[error("internal-error: {0}")]
    Internal(String),
    #[error(transparent)]
    Dialog(#[from] DialogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownArtifact { .. } => "unknown-artifact",
            ServiceError::SessionNotFound(_) => "not-found",
            ServiceError::InvalidConfig(_) => "invalid-config",
            ServiceError::StaleRequest { .. } => "stale-request",
            ServiceError::SessionInProgress(_) => "session-in-progress",
            ServiceError::BadRequest(_) => "bad-request",
            ServiceError::Internal(_) => "internal-error",
            ServiceError::Dialog(e) => e.code(),
            ServiceError::Store(e) => e.code(),
            ServiceError::Stats(e) => e.code(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self.code() {
            "unknown-artifact" | "not-found" | "no-profiles" => StatusCode::NOT_FOUND,
            "bad-request" | "invalid-id" => StatusCode::BAD_REQUEST,
            "stale-request" | "session-in-progress" | "session-finalized" | "nothing-to-backtrack"
            | "pair-already-finalized" | "duplicate-id" | "seq-conflict" => StatusCode::CONFLICT,
            "corrupt-log" | "internal-error" | "io-error" | "invalid-manifest" | "not-a-project" => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error_code: self.code().to_owned(),
            message: self.to_string(),
        }
    }
}

/// Wire form of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}
