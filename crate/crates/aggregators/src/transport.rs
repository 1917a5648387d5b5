//! How aggregators talk to the hub.

use async_trait::async_trait;
use presence_core::{AggregatorKind, Evidence, Timestamp};
use serde::Deserialize;
use thiserror::Error;

/// Definitive answer from the hub about one evidence record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PostOutcome {
    Accepted,
    Rejected { status: u16, reason: String },
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
}

#[async_trait]
pub trait Transport: Send + Sync {
    async fn post_evidence(&self, evidence: &Evidence) -> Result<PostOutcome, TransportError>;

    /// Users who currently allow `kind` to report for them.
    async fn allow_list(&self, kind: AggregatorKind) -> Result<Vec<String>, TransportError>;

    /// Advances a hub running on a virtual clock.
    async fn set_clock(&self, now: Timestamp) -> Result<(), TransportError>;
}

/// Plain HTTP client for a running hub.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    client: reqwest::Client,
    base: String,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

impl HttpTransport {
    pub fn new(base: impl Into<String>) -> Self {
        HttpTransport {
            client: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_owned(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

fn connection(e: reqwest::Error) -> TransportError {
    TransportError::Connection(e.to_string())
}

async fn server_error(resp: reqwest::Response) -> TransportError {
    let status = resp.status().as_u16();
    let body = resp.text().await.unwrap_or_default();
    TransportError::Server { status, body }
}

#[async_trait]
impl Transport for HttpTransport {
    async fn post_evidence(&self, evidence: &Evidence) -> Result<PostOutcome, TransportError> {
        let resp = self
            .client
            .post(self.url("/evidence"))
            .json(evidence)
            .send()
            .await
            .map_err(connection)?;
        let status = resp.status();
        if status.is_success() {
            return Ok(PostOutcome::Accepted);
        }
        if status.is_client_error() {
            let text = resp.text().await.unwrap_or_default();
            let reason = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            return Ok(PostOutcome::Rejected { status: status.as_u16(), reason });
        }
        Err(server_error(resp).await)
    }

    async fn allow_list(&self, kind: AggregatorKind) -> Result<Vec<String>, TransportError> {
        let resp = self
            .client
            .get(self.url(&format!("/aggregator-config/{kind}")))
            .send()
            .await
            .map_err(connection)?;
        if !resp.status().is_success() {
            return Err(server_error(resp).await);
        }
        resp.json().await.map_err(|e| TransportError::Protocol(e.to_string()))
    }

    async fn set_clock(&self, now: Timestamp) -> Result<(), TransportError> {
        let resp = self
            .client
            .post(self.url("/clock"))
            .json(&serde_json::json!({ "now": now }))
            .send()
            .await
            .map_err(connection)?;
        if !resp.status().is_success() {
            return Err(server_error(resp).await);
        }
        Ok(())
    }
}
