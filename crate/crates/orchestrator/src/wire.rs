//! JSON bodies exchanged between clients, orchestrators and services.

use std::collections::BTreeMap;

use dflow_core::catalog::{ServiceCatalog, TypeSchema};
use dflow_core::partition::Placement;
use dflow_core::testbed::Mode;
use dflow_core::{EdgeId, NodeId, Value};
use serde::{Deserialize, Serialize};

/// A value sent to the site that consumes it. `edge` names the transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenMsg {
    pub run: String,
    pub edge: EdgeId,
    pub value: Value,
    pub origin: String,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl Ack {
    pub fn ok(status: &str) -> Ack {
        Ack {
            status: status.into(),
            warning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

/// `GET /runs/{run}/outputs` while the run is still going.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pending {
    pub status: String,
    pub done: usize,
}

/// `GET /runs/{run}/outputs` after a failure anywhere in the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failed {
    pub status: String,
    pub origin_site: String,
    pub cause: String,
}

/// Sent to the root by a site whose part of the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureMsg {
    pub site: String,
    pub cause: String,
}

/// Client request to the root orchestrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowRequest {
    pub source: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, Value>,
    #[serde(default)]
    pub placement: Option<Placement>,
    pub mode: Mode,
    /// Documents keyed by URL, added to the orchestrator's own.
    #[serde(default)]
    pub catalogs: BTreeMap<String, ServiceCatalog>,
    #[serde(default)]
    pub schemas: BTreeMap<String, TypeSchema>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCreated {
    pub run_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationRecord {
    pub node: NodeId,
    pub endpoint: String,
    pub operation: String,
    pub site: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub duplicates: u64,
    pub token_bytes_in: u64,
    pub token_bytes_out: u64,
    /// Request bytes sent to services.
    pub invoke_bytes_out: u64,
    /// Response bytes received from services.
    pub invoke_bytes_in: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub site: String,
    pub status: String,
    pub counters: Counters,
    pub invocations: Vec<InvocationRecord>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arg {
    pub name: String,
    pub value: Value,
}

/// Body of `POST {endpoint}/invoke/{op}`. The response body is the
/// resulting value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvokeRequest {
    pub args: Vec<Arg>,
}
