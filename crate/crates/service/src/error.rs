use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use diagwork_core::harness::HarnessError;
use diagwork_core::{CertifyError, GateError, SessionError};
use serde::Serialize;

/// Body of every error response: `{"error": {code, message, precondition?}}`.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precondition: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
                precondition: None,
            },
        }
    }

    pub fn with_precondition(mut self, p: impl Into<String>) -> Self {
        self.body.precondition = Some(p.into());
        self
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Wrapper {
            error: ErrorBody,
        }
        (self.status, Json(Wrapper { error: self.body })).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::malformed(e.body_text())
    }
}

impl From<GateError> for ApiError {
    fn from(e: GateError) -> Self {
        let GateError::Uncertified { j } = &e;
        let pre = format!("{j} holds an enumerator certificate");
        ApiError::new(StatusCode::CONFLICT, "gate_violation", e.to_string()).with_precondition(pre)
    }
}

impl From<CertifyError> for ApiError {
    fn from(e: CertifyError) -> Self {
        match &e {
            CertifyError::UnmetPremise { index, class, .. } => {
                let pre = format!("{index} is certified {class}");
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "unmet_premise",
                    e.to_string(),
                )
                .with_precondition(pre)
            }
            CertifyError::WrongShape { expected, .. } => {
                let pre = format!("subject is {expected}");
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "wrong_shape",
                    e.to_string(),
                )
                .with_precondition(pre)
            }
        }
    }
}

impl From<HarnessError> for ApiError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Gate(g) => g.into(),
            HarnessError::Certify(c) => c.into(),
            HarnessError::Parameter(m) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_parameter", m)
            }
            e @ HarnessError::Assertion { .. } => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "assertion_failed",
                e.to_string(),
            ),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_session", e.to_string())
    }
}
