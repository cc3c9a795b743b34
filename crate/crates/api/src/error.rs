use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use drs_core::Error;
use serde::{Deserialize, Serialize};

/// Error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "VALIDATION", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }

    pub fn internal() -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", "internal error")
    }
}

/// HTTP status for a machine code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "VALIDATION" | "EMPTY_QUERY" | "WEAK_PASSWORD" | "EMPTY_BLOB" => StatusCode::BAD_REQUEST,
        "UNAUTHENTICATED" | "AUTH_FAILED" => StatusCode::UNAUTHORIZED,
        "FORBIDDEN" | "LAST_ADMIN" => StatusCode::FORBIDDEN,
        "NOT_FOUND" => StatusCode::NOT_FOUND,
        "DUPLICATE_MATRIX" | "USERNAME_TAKEN" | "UNKNOWN_MATRIX" | "ALREADY_REGISTERED"
        | "ADMIN_EXISTS" => StatusCode::CONFLICT,
        "BLOB_TOO_LARGE" => StatusCode::PAYLOAD_TOO_LARGE,
        "DIR_LOCKED" => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = e.code();
        let status = status_for(code);
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
            return ApiError::new(status, code, "internal error");
        }
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
