//! External decomposer protocol.
//!
//! Request body: `{"instruction": "...", "prompt": "Break this down into steps."}`.
//! Response body: `{"steps": ["...", ...]}`.

use serde::{Deserialize, Serialize};

use crate::http::JsonEndpoint;

pub const DECOMPOSE_PROMPT: &str = "Break this down into steps.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeRequest {
    pub instruction: String,
    pub prompt: String,
}

impl DecomposeRequest {
    pub fn new(instruction: &str) -> Self {
        Self {
            instruction: instruction.to_string(),
            prompt: DECOMPOSE_PROMPT.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeResponse {
    pub steps: Vec<String>,
}

/// Diagnostics from a failed client call.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientError(pub String);

impl std::fmt::Display for ClientError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ClientError {}

/// Each call must be independent; implementations may be called concurrently.
pub trait DecomposerClient: Send + Sync {
    fn decompose(&self, request: &DecomposeRequest) -> Result<DecomposeResponse, ClientError>;
}

/// Posts the request JSON to a fixed URL.
pub struct HttpDecomposer {
    endpoint: JsonEndpoint,
}

impl HttpDecomposer {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            endpoint: JsonEndpoint::new(url),
        }
    }
}

impl DecomposerClient for HttpDecomposer {
    fn decompose(&self, request: &DecomposeRequest) -> Result<DecomposeResponse, ClientError> {
        self.endpoint.post(request).map_err(ClientError)
    }
}
