use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use convflow::engine::EngineError;

/// JSON error body: `{"error": CODE, "message": TEXT}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn not_found(what: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "E_NOT_FOUND", format!("{what} not found"))
    }

    pub fn body(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.code, "message": self.message })
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::UnknownSpot(_) | EngineError::DuplicateSpot(_) | EngineError::ChoiceNotInPair(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            EngineError::InvalidDoc(_) => StatusCode::INTERNAL_SERVER_ERROR,
            EngineError::AwaitingInput | EngineError::NotAwaiting => StatusCode::CONFLICT,
            EngineError::SessionFinished => StatusCode::GONE,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: &self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}
