//! Client side of the orchestrator API.

use std::collections::BTreeMap;
use std::time::Duration;

use dflow_core::Value;
use reqwest::StatusCode;

use crate::wire::{Failed, Pending, RunCreated, RunMetrics, WorkflowRequest};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("orchestrator answered {status}: {body}")]
    Api { status: u16, body: String },
    #[error("run failed at site {}: {}", .0.origin_site, .0.cause)]
    Failed(Failed),
    #[error("run did not finish within {0:?}")]
    Timeout(Duration),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunState {
    Done(BTreeMap<String, Value>),
    Pending(Pending),
    Failed(Failed),
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

async fn api_error(resp: reqwest::Response) -> ClientError {
    let status = resp.status().as_u16();
    ClientError::Api {
        status,
        body: resp.text().await.unwrap_or_default(),
    }
}

impl Client {
    pub fn new(base: &str) -> Client {
        Client {
            http: reqwest::Client::new(),
            base: base.trim_end_matches('/').to_string(),
        }
    }

    pub async fn submit(&self, req: &WorkflowRequest) -> Result<String, ClientError> {
        let resp = self
            .http
            .post(format!("{}/workflows", self.base))
            .json(req)
            .send()
            .await?;
        if resp.status() != StatusCode::CREATED {
            return Err(api_error(resp).await);
        }
        Ok(resp.json::<RunCreated>().await?.run_id)
    }

    pub async fn state(&self, run: &str) -> Result<RunState, ClientError> {
        let resp = self
            .http
            .get(format!("{}/runs/{run}/outputs", self.base))
            .send()
            .await?;
        match resp.status() {
            StatusCode::OK => Ok(RunState::Done(resp.json().await?)),
            StatusCode::ACCEPTED => Ok(RunState::Pending(resp.json().await?)),
            StatusCode::GONE => Ok(RunState::Failed(resp.json().await?)),
            _ => Err(api_error(resp).await),
        }
    }

    pub async fn metrics(&self, run: &str) -> Result<RunMetrics, ClientError> {
        let resp = self
            .http
            .get(format!("{}/runs/{run}/metrics", self.base))
            .send()
            .await?;
        if !resp.status().is_success() {
            return Err(api_error(resp).await);
        }
        Ok(resp.json().await?)
    }

    /// Poll until the run is done or failed.
    pub async fn wait(
        &self,
        run: &str,
        timeout: Duration,
    ) -> Result<BTreeMap<String, Value>, ClientError> {
        let deadline = tokio::time::Instant::now() + timeout;
        let mut pause = Duration::from_millis(1);
        loop {
            match self.state(run).await? {
                RunState::Done(outputs) => return Ok(outputs),
                RunState::Failed(f) => return Err(ClientError::Failed(f)),
                RunState::Pending(_) if tokio::time::Instant::now() >= deadline => {
                    return Err(ClientError::Timeout(timeout))
                }
                RunState::Pending(_) => {
                    tokio::time::sleep(pause).await;
                    pause = (pause * 2).min(Duration::from_millis(20));
                }
            }
        }
    }

    pub async fn submit_and_wait(
        &self,
        req: &WorkflowRequest,
        timeout: Duration,
    ) -> Result<(String, BTreeMap<String, Value>), ClientError> {
        let run = self.submit(req).await?;
        let outputs = self.wait(&run, timeout).await?;
        Ok((run, outputs))
    }
}
