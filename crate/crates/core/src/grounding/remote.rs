//! Client for the HTTP scoring service.
//!
//! `POST {base}/score` with `{"image": "...", "texts": [...]}` answers
//! `{"scores": [...], "model_name": "..."}`, one score per text in request
//! order, already mapped into `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::{GroundingScorer, ScoreError, ScorerDescriptor, ViewKey};
use crate::http::JsonEndpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub image: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
    pub model_name: String,
}

pub struct RemoteScorer {
    endpoint: JsonEndpoint,
}

impl RemoteScorer {
    /// `base_url` is the service root, e.g. `http://127.0.0.1:8000`.
    pub fn new(base_url: &str) -> Self {
        let url = format!("{}/score", base_url.trim_end_matches('/'));
        Self {
            endpoint: JsonEndpoint::new(url),
        }
    }

    pub fn url(&self) -> &str {
        self.endpoint.url()
    }
}

impl GroundingScorer for RemoteScorer {
    fn descriptor(&self) -> ScorerDescriptor {
        ScorerDescriptor {
            name: format!("remote({})", self.endpoint.url()),
            deterministic: true,
        }
    }

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        let request = ScoreRequest {
            image: view.image_ref.to_string(),
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let response: ScoreResponse =
            self.endpoint
                .post(&request)
                .map_err(|message| ScoreError::Backend {
                    key: view.describe(),
                    message,
                })?;
        Ok(response.scores)
    }
}
