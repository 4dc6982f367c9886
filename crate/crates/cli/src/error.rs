use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub context: Value,
}

/// The one HTTP status for each error code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "SchemaError" | "UnknownKind" | "WeightOutOfRange" | "LabelRequired" | "MalformedCsv"
        | "FractionOutOfRange" | "InvalidK" | "TooFewBins" | "BadRequest" | "InvalidDatasetName" => {
            StatusCode::BAD_REQUEST
        }
        "SessionNotFound" | "DatasetNotFound" | "IndexOutOfRange" | "UnknownAttribute" => StatusCode::NOT_FOUND,
        "StaleConflict" => StatusCode::CONFLICT,
        "IoError" | "CorruptSession" | "Internal" => StatusCode::INTERNAL_SERVER_ERROR,
        // Well-formed requests the engine cannot act on.
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status_for(code),
            code: code.to_string(),
            message: message.into(),
            context: Value::Null,
        }
    }

    pub fn with_context(mut self, context: impl Serialize) -> Self {
        self.context = serde_json::to_value(context).unwrap_or(Value::Null);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new("BadRequest", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new("Internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<cactus_core::Error> for ApiError {
    fn from(e: cactus_core::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

macro_rules! from_engine {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                cactus_core::Error::from(e).into()
            }
        }
    )*};
}

from_engine!(
    cactus_core::data::DataError,
    cactus_core::objective::ParseError,
    cactus_core::conflict::ConflictError,
    cactus_core::stats::StatsError,
    cactus_core::zoo::TrainError,
    cactus_core::scorer::ScoreError,
    cactus_core::scorer::SolverError,
    cactus_core::history::HistoryError
);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}
