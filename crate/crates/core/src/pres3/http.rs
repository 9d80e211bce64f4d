use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{CaptionRequest, CaptionerClient, ClientError};

pub const DEFAULT_TOKEN_ENV: &str = "CAPTIONER_API_TOKEN";

/// Remote backend. POSTs the request as JSON and expects `{"text": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.to_string()
}

fn default_timeout_ms() -> u64 {
    120_000
}

#[derive(Debug)]
pub struct HttpClient {
    endpoint: String,
    token: Option<String>,
    agent: Agent,
}

#[derive(Deserialize)]
struct Reply {
    text: String,
}

impl HttpClient {
    /// Reads the token from the configured environment variable, if set.
    pub fn new(config: &HttpConfig) -> Self {
        let token = std::env::var(&config.token_env)
            .ok()
            .filter(|t| !t.is_empty());
        HttpClient::with_token(config, token)
    }

    pub fn with_token(config: &HttpConfig, token: Option<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        HttpClient {
            endpoint: config.endpoint.clone(),
            token,
            agent,
        }
    }
}

impl CaptionerClient for HttpClient {
    fn request(&self, req: &CaptionRequest) -> Result<String, ClientError> {
        let mut call = self.agent.post(&self.endpoint);
        if let Some(t) = &self.token {
            call = call.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = call
            .send_json(req)
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str::<Reply>(&body)
                .map(|r| r.text)
                .map_err(|e| ClientError::Fatal(format!("bad response body: {e}"))),
            429 => Err(ClientError::RateLimited { retry_after }),
            408 | 500..=599 => Err(ClientError::Transient(format!("HTTP {status}: {body}"))),
            _ => Err(ClientError::Fatal(format!("HTTP {status}: {body}"))),
        }
    }
}
