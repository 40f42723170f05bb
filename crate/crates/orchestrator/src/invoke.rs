//! How a proxy reaches services.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use dflow_core::engine::{Call, InvokeError};
use dflow_core::{Invoker, Value};

use crate::wire::{Arg, InvokeRequest};

#[async_trait]
pub trait ServiceInvoker: Send + Sync {
    async fn invoke(&self, call: Call) -> Result<Value, InvokeError>;
}

/// Calls services over HTTP: `POST {endpoint}/invoke/{op}` with the
/// arguments as JSON.
#[derive(Debug, Clone)]
pub struct HttpInvoker {
    client: reqwest::Client,
    timeout: Duration,
    /// Catalog endpoint to actual base URL, for services listening
    /// somewhere other than their published address.
    rewrite: BTreeMap<String, String>,
}

impl HttpInvoker {
    pub fn new(timeout: Duration) -> HttpInvoker {
        HttpInvoker {
            client: reqwest::Client::new(),
            timeout,
            rewrite: BTreeMap::new(),
        }
    }

    pub fn rewrite(mut self, endpoint: &str, url: &str) -> HttpInvoker {
        self.rewrite.insert(endpoint.to_string(), url.to_string());
        self
    }
}

#[async_trait]
impl ServiceInvoker for HttpInvoker {
    async fn invoke(&self, call: Call) -> Result<Value, InvokeError> {
        let base = self.rewrite.get(&call.endpoint).unwrap_or(&call.endpoint);
        let url = format!("{}/invoke/{}", base.trim_end_matches('/'), call.operation);
        let body = InvokeRequest {
            args: call
                .args
                .into_iter()
                .map(|(name, value)| Arg { name, value })
                .collect(),
        };
        let send = self.client.post(&url).json(&body).send();
        let resp = match tokio::time::timeout(self.timeout, send).await {
            Err(_) => return Err(InvokeError::Timeout(self.timeout)),
            Ok(Err(e)) if e.is_timeout() => return Err(InvokeError::Timeout(self.timeout)),
            Ok(Err(e)) => return Err(InvokeError::Other(format!("{url}: {e}"))),
            Ok(Ok(r)) => r,
        };
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(InvokeError::Service {
                status: status.as_u16(),
                body,
            });
        }
        match tokio::time::timeout(self.timeout, resp.json::<Value>()).await {
            Err(_) => Err(InvokeError::Timeout(self.timeout)),
            Ok(r) => r.map_err(|e| InvokeError::Other(format!("{url}: bad response: {e}"))),
        }
    }
}

/// Runs a synchronous [`Invoker`] on the blocking pool.
pub struct BlockingInvoker(pub Arc<dyn Invoker>);

#[async_trait]
impl ServiceInvoker for BlockingInvoker {
    async fn invoke(&self, call: Call) -> Result<Value, InvokeError> {
        let inner = self.0.clone();
        tokio::task::spawn_blocking(move || inner.invoke(&call))
            .await
            .map_err(|e| InvokeError::Other(e.to_string()))?
    }
}
