use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use breakrisk_core::risk::{RiskError, SweepEntry};
use breakrisk_core::sim::{builtin_fixture, FixtureId};
use breakrisk_core::{risk, sweep_single_ops, BreakingSet, RiskMode, Snapshot};
use serde::{Deserialize, Serialize};

use crate::AppState;

/// A non-2xx answer. The body is always `{"code":..,"message":..}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn from_risk(e: RiskError) -> Self {
        match e {
            RiskError::EmptySnapshot => Self::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "empty_snapshot",
                e.to_string(),
            ),
            RiskError::UnknownMode(_) => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "unknown_mode",
                e.to_string(),
            ),
            RiskError::UnknownBranch(_) | RiskError::Msp(_) => {
                Self::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body<'a> {
            code: &'a str,
            message: &'a str,
        }
        let body = serde_json::to_string(&Body {
            code: self.code,
            message: &self.message,
        })
        .expect("error body serializes");
        json_response(self.status, body)
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok_json<T: Serialize>(value: &T) -> Response {
    json_response(
        StatusCode::OK,
        serde_json::to_string(value).expect("response serializes"),
    )
}

fn loaded(state: &AppState) -> Result<Arc<Snapshot>, ApiError> {
    state.snapshot().ok_or_else(|| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "no_snapshot",
            "no snapshot is loaded",
        )
    })
}

fn parse_mode(requested: Option<&str>, state: &AppState) -> Result<RiskMode, ApiError> {
    match requested {
        None => Ok(state.default_mode()),
        Some(m) => m.parse().map_err(ApiError::from_risk),
    }
}

pub async fn snapshot_summary(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    Ok(ok_json(&loaded(&state)?.summary()))
}

#[derive(Deserialize)]
struct RiskRequest {
    operations: Vec<String>,
    #[serde(default)]
    mode: Option<String>,
}

pub async fn post_risk(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: RiskRequest = serde_json::from_slice(&body).map_err(|e| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            format!("invalid body: {e}"),
        )
    })?;
    if request.operations.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty_operations",
            "operations must name at least one operation",
        ));
    }
    let mode = parse_mode(request.mode.as_deref(), &state)?;
    let set = BreakingSet::from_labels(&request.operations)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_operation", e.to_string()))?;
    let snapshot = loaded(&state)?;
    let report = risk(&snapshot, &set, mode).map_err(ApiError::from_risk)?;
    Ok(json_response(StatusCode::OK, report.to_json()))
}

#[derive(Deserialize)]
pub struct SweepQuery {
    mode: Option<String>,
}

#[derive(Serialize)]
struct SweepResponse {
    mode: RiskMode,
    sweep: Vec<SweepEntry>,
}

pub async fn get_sweep(
    State(state): State<Arc<AppState>>,
    query: Result<Query<SweepQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(query) =
        query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    let mode = parse_mode(query.mode.as_deref(), &state)?;
    let snapshot = loaded(&state)?;
    if snapshot.is_empty() {
        return Err(ApiError::from_risk(RiskError::EmptySnapshot));
    }
    let sweep = sweep_single_ops(&snapshot, mode).map_err(ApiError::from_risk)?;
    Ok(ok_json(&SweepResponse { mode, sweep }))
}

pub async fn list_fixtures() -> Response {
    let ids: Vec<&str> = FixtureId::ALL.iter().map(|id| id.as_str()).collect();
    ok_json(&ids)
}

pub async fn get_fixture(Path(id): Path<String>) -> Result<Response, ApiError> {
    let id: FixtureId = id.parse().map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_fixture",
            format!("no fixture {id:?}"),
        )
    })?;
    Ok(json_response(StatusCode::OK, builtin_fixture(id).to_json()))
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        "method not allowed for this route",
    )
}
