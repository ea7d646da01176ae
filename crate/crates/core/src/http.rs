use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

const TIMEOUT: Duration = Duration::from_secs(60);

/// JSON-over-HTTP POST target. Errors are flattened to diagnostic strings.
pub(crate) struct JsonEndpoint {
    url: String,
    agent: ureq::Agent,
}

impl JsonEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, String> {
        let payload = serde_json::to_string(body).map_err(|e| e.to_string())?;
        let mut response = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(payload)
            .map_err(|e| format!("POST {} failed: {e}", self.url))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| format!("reading response from {}: {e}", self.url))?;
        if status != 200 {
            return Err(format!(
                "POST {} returned {status}: {}",
                self.url,
                text.trim()
            ));
        }
        serde_json::from_str(&text).map_err(|e| format!("bad JSON from {}: {e}", self.url))
    }
}
