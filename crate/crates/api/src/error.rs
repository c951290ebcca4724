use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use pa_econ_core::{EvaluationError, StoreError, Violation};

/// Every error code the service can return.
pub const ERROR_CODES: &[&str] = &[
    "invalid-body",
    "invalid-query",
    "validation-failed",
    "unresolvable-option",
    "missing-profile",
    "scenario-not-found",
    "run-not-found",
    "route-not-found",
    "method-not-allowed",
    "storage-error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<Violation>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        debug_assert!(ERROR_CODES.contains(&code));
        ApiError {
            status: status.as_u16(),
            code: code.to_owned(),
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn invalid_body(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid-body", message)
    }

    pub fn invalid_query(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid-query", message)
    }

    pub fn validation(details: Vec<Violation>) -> Self {
        let mut e = Self::new(
            StatusCode::BAD_REQUEST,
            "validation-failed",
            format!("request has {} violation(s)", details.len()),
        );
        e.details = details;
        e
    }

    pub fn route_not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "route-not-found", "no such endpoint")
    }

    pub fn method_not_allowed() -> Self {
        Self::new(
            StatusCode::METHOD_NOT_ALLOWED,
            "method-not-allowed",
            "method not supported on this endpoint",
        )
    }
}

impl From<EvaluationError> for ApiError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Validation(v) => ApiError::validation(v),
            EvaluationError::UnresolvableOption { index, ref reason } => {
                let mut err = Self::new(
                    StatusCode::BAD_REQUEST,
                    "unresolvable-option",
                    e.to_string(),
                );
                err.details = vec![Violation::new(format!("options[{index}]"), reason.clone())];
                err
            }
            EvaluationError::MissingProfile(_) => {
                Self::new(StatusCode::BAD_REQUEST, "missing-profile", e.to_string())
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::RunNotFound(_) => {
                Self::new(StatusCode::NOT_FOUND, "run-not-found", e.to_string())
            }
            StoreError::ScenarioNotFound(_) => {
                Self::new(StatusCode::NOT_FOUND, "scenario-not-found", e.to_string())
            }
            StoreError::Io { .. } | StoreError::Corrupt { .. } => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "storage-error",
                e.to_string(),
            ),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
