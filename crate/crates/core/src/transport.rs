//! Transport-agnostic plumbing for remote backends.
//!
//! Remote classifiers, aspect scorers, completion and search clients all talk
//! JSON objects through a [`Transport`]. The HTTP implementation is the
//! default; tests inject in-process transports.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("endpoint returned status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("malformed response: {0}")]
    Decode(String),
}

impl TransportError {
    /// Whether another attempt might succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            TransportError::Unreachable(_) => true,
            TransportError::Status { status, .. } => *status == 429 || *status >= 500,
            TransportError::Decode(_) => false,
        }
    }
}

/// A request to a remote endpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    PostJson(Value),
    Get(Vec<(String, String)>),
}

pub trait Transport: Send + Sync {
    fn call(
        &self,
        url: &str,
        headers: &[(String, String)],
        request: &Request,
        timeout: Duration,
    ) -> Result<Value, TransportError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl Default for HttpTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Transport for HttpTransport {
    fn call(
        &self,
        url: &str,
        headers: &[(String, String)],
        request: &Request,
        timeout: Duration,
    ) -> Result<Value, TransportError> {
        let result = match request {
            Request::PostJson(body) => {
                let mut req = self
                    .agent
                    .post(url)
                    .config()
                    .timeout_global(Some(timeout))
                    .build();
                for (k, v) in headers {
                    req = req.header(k, v);
                }
                req.send_json(body)
            }
            Request::Get(query) => {
                let mut req = self
                    .agent
                    .get(url)
                    .config()
                    .timeout_global(Some(timeout))
                    .build();
                for (k, v) in headers {
                    req = req.header(k, v);
                }
                for (k, v) in query {
                    req = req.query(k, v);
                }
                req.call()
            }
        };
        let mut response = result.map_err(|e| TransportError::Unreachable(e.to_string()))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            let message = response
                .body_mut()
                .read_to_string()
                .unwrap_or_default()
                .chars()
                .take(200)
                .collect();
            return Err(TransportError::Status { status, message });
        }
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| TransportError::Decode(e.to_string()))
    }
}

/// Endpoint location plus timeout and retry budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout_secs: f64,
    /// Extra attempts after the first one.
    pub retries: u32,
    pub backoff_ms: u64,
    /// Name of an environment variable holding an API key, sent as `x-api-key`.
    pub api_key_env: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: String::new(),
            timeout_secs: 30.0,
            retries: 2,
            backoff_ms: 250,
            api_key_env: None,
        }
    }
}

/// An endpoint bound to a transport, with bounded retries.
#[derive(Clone)]
pub struct RemoteEndpoint {
    pub config: EndpointConfig,
    transport: Arc<dyn Transport>,
}

impl std::fmt::Debug for RemoteEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteEndpoint")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl RemoteEndpoint {
    pub fn new(config: EndpointConfig, transport: Arc<dyn Transport>) -> Self {
        RemoteEndpoint { config, transport }
    }

    pub fn http(config: EndpointConfig) -> Self {
        Self::new(config, Arc::new(HttpTransport::default()))
    }

    /// Sends `request`, retrying transient failures at most `retries` times.
    pub fn send(&self, request: &Request) -> Result<Value, TransportError> {
        let timeout = Duration::from_secs_f64(self.config.timeout_secs.max(0.001));
        let mut headers = Vec::new();
        if let Some(var) = &self.config.api_key_env {
            if let Ok(key) = std::env::var(var) {
                headers.push(("x-api-key".to_string(), key));
            }
        }
        let mut attempt = 0u32;
        loop {
            match self
                .transport
                .call(&self.config.url, &headers, request, timeout)
            {
                Ok(value) => return Ok(value),
                Err(err) if err.is_transient() && attempt < self.config.retries => {
                    attempt += 1;
                    if self.config.backoff_ms > 0 {
                        std::thread::sleep(Duration::from_millis(
                            self.config.backoff_ms * u64::from(attempt),
                        ));
                    }
                }
                Err(err) => return Err(err),
            }
        }
    }

    pub fn post_json(&self, body: Value) -> Result<Value, TransportError> {
        self.send(&Request::PostJson(body))
    }
}

/// In-process transport backed by a closure, counting every call.
pub struct FnTransport<F> {
    handler: F,
    calls: AtomicUsize,
}

impl<F> FnTransport<F>
where
    F: Fn(&str, &Request) -> Result<Value, TransportError> + Send + Sync,
{
    pub fn new(handler: F) -> Self {
        FnTransport {
            handler,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<F> Transport for FnTransport<F>
where
    F: Fn(&str, &Request) -> Result<Value, TransportError> + Send + Sync,
{
    fn call(
        &self,
        url: &str,
        _headers: &[(String, String)],
        request: &Request,
        _timeout: Duration,
    ) -> Result<Value, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.handler)(url, request)
    }
}
