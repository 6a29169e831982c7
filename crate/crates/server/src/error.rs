use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use usermap_core::Error;

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
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
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, code) = match e {
            Error::NeedBothClasses => (StatusCode::CONFLICT, "NEED_BOTH_CLASSES"),
            Error::UnknownUser(_) => (StatusCode::NOT_FOUND, "UNKNOWN_USER"),
            Error::UnknownChannel(_) => (StatusCode::BAD_REQUEST, "UNKNOWN_CHANNEL"),
            Error::UnknownSetup(_) => (StatusCode::BAD_REQUEST, "UNKNOWN_REPRESENTATION"),
            Error::NoEmbeddableContent => {
                (StatusCode::UNPROCESSABLE_ENTITY, "NO_EMBEDDABLE_CONTENT")
            }
            Error::EmptyCommunity => (StatusCode::NOT_FOUND, "EMPTY_COMMUNITY"),
            Error::InvalidArgument(_) => (StatusCode::BAD_REQUEST, "INVALID_ARGUMENT"),
            Error::NoCategories | Error::Degenerate(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "DEGENERATE_DATA")
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL"),
        };
        Self::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorPayload {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
