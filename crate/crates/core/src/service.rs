//! HTTP front end: `POST /v1/verify` and `GET /v1/health`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aggregator::MeanKind;
use crate::pipeline::{Mode, Pipeline, PipelineError, VerificationRequest, VerifyOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBody {
    pub question: String,
    pub context: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<MeanKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub models: Vec<String>,
}

struct ApiError(PipelineError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.exit_code() {
            2 => StatusCode::UNPROCESSABLE_ENTITY,
            3 => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

pub fn router(pipeline: Arc<Pipeline>) -> Router {
    Router::new().route("/v1/verify", post(verify)).route("/v1/health", get(health)).with_state(pipeline)
}

async fn verify(State(pipeline): State<Arc<Pipeline>>, Json(body): Json<VerifyBody>) -> Response {
    let request = VerificationRequest::new(body.question, body.context, body.response);
    let options = VerifyOptions { mode: body.mode, mean: body.mean };
    // Scoring blocks on backend I/O, so keep it off the async workers.
    let outcome = tokio::task::spawn_blocking(move || pipeline.verify_with(&request, options)).await;
    match outcome {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(e)) => ApiError(e).into_response(),
        Err(join) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error": join.to_string() }))).into_response(),
    }
}

async fn health(State(pipeline): State<Arc<Pipeline>>) -> Json<Health> {
    Json(Health { status: "ok".into(), models: pipeline.model_ids() })
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(pipeline: Arc<Pipeline>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(pipeline)).await
}
