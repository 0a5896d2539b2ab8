use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cbir_core::Error;
use serde::{Deserialize, Serialize};

/// Error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
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

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or invalid bearer token")
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }

    pub fn no_index() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "no_index", "no index is loaded")
    }
}

/// The single (status, code) pair of every core error.
pub fn classify(e: &Error) -> (StatusCode, &'static str) {
    use StatusCode as S;
    match e {
        Error::UnsupportedFormat(_)
        | Error::CorruptData(_)
        | Error::InvalidImage(_)
        | Error::EmptyImage => (S::BAD_REQUEST, "invalid_image"),
        Error::UnknownMetric(_) => (S::BAD_REQUEST, "unknown_metric"),
        Error::ConfigMismatch { .. } => (S::BAD_REQUEST, "config_mismatch"),
        Error::InvalidParameter(_)
        | Error::WrongChannels { .. }
        | Error::DimensionMismatch(_)
        | Error::LengthMismatch { .. }
        | Error::UnknownColor(_)
        | Error::ProportionOverflow(_)
        | Error::NotNormalized(_) => (S::BAD_REQUEST, "invalid_request"),
        Error::UnknownImage(_) => (S::NOT_FOUND, "unknown_image"),
        Error::FileNotFound(_) => (S::NOT_FOUND, "file_not_found"),
        Error::AllNeutral => (S::UNPROCESSABLE_ENTITY, "all_neutral"),
        Error::EmptyHistogram
        | Error::ImageTooSmall(_)
        | Error::NoValidPairs { .. }
        | Error::NoShape
        | Error::BoundaryTooShort(_)
        | Error::UndefinedInput(_)
        | Error::EmptyRetrieval
        | Error::NoRelevantSet
        | Error::InvalidGroundTruth(_) => (S::UNPROCESSABLE_ENTITY, "unprocessable"),
        Error::EmptyStore
        | Error::EmptyCorpus(_)
        | Error::VersionMismatch { .. }
        | Error::CorruptIndex(_)
        | Error::MissingConfigHash => (S::SERVICE_UNAVAILABLE, "no_index"),
        Error::Io { .. } => (S::INTERNAL_SERVER_ERROR, "io_error"),
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = classify(&e);
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code.to_string(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}
