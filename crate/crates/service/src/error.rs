use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lucas_core::interpreter::InterpError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },
    #[error("{0}")]
    Conflict(String),
    #[error("{message}")]
    Unprocessable { message: String, offset: Option<usize> },
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn not_found(kind: &'static str, id: &str) -> ApiError {
        ApiError::NotFound { kind, id: id.to_string() }
    }
}

impl From<InterpError> for ApiError {
    fn from(e: InterpError) -> Self {
        match e {
            InterpError::Phase { .. } | InterpError::AtEnd => ApiError::Conflict(e.to_string()),
            InterpError::Parse { message, offset } => ApiError::Unprocessable { message, offset },
            other => ApiError::Unprocessable { message: other.to_string(), offset: None },
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            ApiError::NotFound { .. } => (StatusCode::NOT_FOUND, "not_found"),
            ApiError::Conflict(_) => (StatusCode::CONFLICT, "phase"),
            ApiError::Unprocessable { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let mut body = json!({ "error": kind, "message": self.to_string() });
        if let ApiError::Unprocessable { offset: Some(o), .. } = &self {
            body["offset"] = json!(o);
        }
        (status, Json(body)).into_response()
    }
}
