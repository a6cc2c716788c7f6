//! Chat-completion client for the judge-based selection baseline.
//!
//! The judge sees every candidate in one prompt and names the most
//! consistent path. One POST per question:
//!
//! ```json
//! {"model": "...", "messages": [
//!   {"role": "system", "content": "You are a helpful assistant."},
//!   {"role": "user", "content": "<prompt>"}]}
//! ```
//!
//! The reply text is read from `choices[0].message.content`. Timeouts and
//! 5xx responses are retried with exponential backoff.

use std::thread;
use std::time::Duration;

use consensus_core::usc::{build_usc_prompt, parse_usc_reply, SYSTEM_PROMPT};
use consensus_core::{Method, SelectionResult};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeEndpointConfig {
    pub url: String,
    pub model_name: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub auth_token: Option<String>,
    /// Delay before the first retry; doubles on every further retry.
    pub initial_backoff: Duration,
}

impl JudgeEndpointConfig {
    pub fn new(url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model_name: model_name.into(),
            timeout: Duration::from_secs(30),
            max_retries: 2,
            auth_token: None,
            initial_backoff: Duration::from_secs(1),
        }
    }

    fn validate(&self) -> Result<(), UscError> {
        if self.url.is_empty() {
            return Err(UscError::Config("endpoint url is empty"));
        }
        if self.timeout.is_zero() {
            return Err(UscError::Config("timeout must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn judge(model: &str, prompt: String) -> Self {
        Self {
            model: model.to_owned(),
            messages: vec![
                ChatMessage { role: "system".into(), content: SYSTEM_PROMPT.into() },
                ChatMessage { role: "user".into(), content: prompt },
            ],
        }
    }
}

/// Failures below the judge protocol.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("malformed response body: {0}")]
    Body(String),
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Timeout => true,
            TransportError::Status(s) => (500..600).contains(s),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UscError {
    #[error("judge endpoint unreachable after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("judge reply not usable: {source}")]
    JudgeFormat {
        reply: String,
        #[source]
        source: consensus_core::Error,
    },
    #[error("{0}")]
    Candidates(consensus_core::Error),
    #[error("invalid judge configuration: {0}")]
    Config(&'static str),
}

impl UscError {
    pub fn is_transport(&self) -> bool {
        matches!(self, UscError::Transport { .. })
    }
}

/// Sends one chat request and returns the assistant's reply text.
pub trait ChatTransport {
    fn complete(&self, endpoint: &JudgeEndpointConfig, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

/// Blocking HTTP transport. The agent pools connections across requests.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, endpoint: &JudgeEndpointConfig, request: &ChatRequest) -> Result<String, TransportError> {
        let mut req = self.agent.post(&endpoint.url).header("Content-Type", "application/json");
        if let Some(token) = &endpoint.auth_token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let body = serde_json::to_string(request).expect("chat request serializes");
        let mut resp = req.send(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
            other => TransportError::Connection(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status));
        }
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Body(other.to_string()),
        })?;
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| TransportError::Body(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Body("no choices in response".into()))
    }
}

pub struct UscClient<T = HttpTransport> {
    endpoint: JudgeEndpointConfig,
    transport: T,
}

impl UscClient<HttpTransport> {
    pub fn http(endpoint: JudgeEndpointConfig) -> Self {
        let transport = HttpTransport::new(endpoint.timeout);
        Self { endpoint, transport }
    }
}

impl<T: ChatTransport> UscClient<T> {
    pub fn new(endpoint: JudgeEndpointConfig, transport: T) -> Self {
        Self { endpoint, transport }
    }

    pub fn endpoint(&self) -> &JudgeEndpointConfig {
        &self.endpoint
    }

    fn send_with_retry(&self, request: &ChatRequest) -> Result<String, UscError> {
        let mut attempt = 0;
        loop {
            match self.transport.complete(&self.endpoint, request) {
                Ok(reply) => return Ok(reply),
                Err(e) if e.is_retryable() && attempt < self.endpoint.max_retries => {
                    thread::sleep(self.endpoint.initial_backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(source) => return Err(UscError::Transport { attempts: attempt + 1, source }),
            }
        }
    }

    /// Asks the judge for the most consistent response.
    ///
    /// The result carries a one-hot score vector and the uninformative
    /// confidence `1/N`; the judge gives no calibrated confidence.
    pub fn select<S: AsRef<str>>(&self, texts: &[S]) -> Result<SelectionResult, UscError> {
        self.endpoint.validate()?;
        let prompt = build_usc_prompt(texts).map_err(UscError::Candidates)?;
        let request = ChatRequest::judge(&self.endpoint.model_name, prompt);
        let reply = self.send_with_retry(&request)?;
        let n = texts.len();
        let winner_index =
            parse_usc_reply(&reply, n).map_err(|source| UscError::JudgeFormat { reply: reply.clone(), source })?;
        let mut scores = vec![0.0; n];
        scores[winner_index] = 1.0;
        Ok(SelectionResult { winner_index, scores, method: Method::Usc, k_star: None, confidence: 1.0 / n as f64 })
    }
}

/// Convenience wrapper over [`UscClient::select`].
pub fn usc_select<S: AsRef<str>, T: ChatTransport>(texts: &[S], client: &UscClient<T>) -> Result<SelectionResult, UscError> {
    client.select(texts)
}

/// Anything that can pick a response by asking a judge.
pub trait Judge {
    fn judge(&self, texts: &[&str]) -> Result<SelectionResult, UscError>;
}

impl<T: ChatTransport> Judge for UscClient<T> {
    fn judge(&self, texts: &[&str]) -> Result<SelectionResult, UscError> {
        self.select(texts)
    }
}
