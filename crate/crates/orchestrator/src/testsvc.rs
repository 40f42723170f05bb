//! HTTP test services: `POST /invoke/{op}` answered by a behavior or by the
//! deterministic mock.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::routing::post;
use axum::{Json, Router};
use dflow_core::engine::{Call, MockInvoker};
use dflow_core::testbed::TestServiceSpec;
use dflow_core::{NodeId, Value};

use crate::wire::InvokeRequest;

/// A test service applying `spec.behavior` after `spec.compute_delay_ms`.
pub fn test_service_router(spec: TestServiceSpec) -> Router {
    async fn invoke(
        State(spec): State<Arc<TestServiceSpec>>,
        Json(req): Json<InvokeRequest>,
    ) -> Json<Value> {
        if spec.compute_delay_ms > 0.0 {
            tokio::time::sleep(Duration::from_secs_f64(spec.compute_delay_ms / 1000.0)).await;
        }
        let args: Vec<Value> = req.args.into_iter().map(|a| a.value).collect();
        Json(spec.behavior.apply(&args))
    }
    Router::new()
        .route("/invoke/{op}", post(invoke))
        .layer(DefaultBodyLimit::disable())
        .with_state(Arc::new(spec))
}

struct MockService {
    mock: MockInvoker,
    endpoint: String,
}

/// Serves the mock's answers for the catalog endpoint `endpoint`.
pub fn mock_service_router(mock: MockInvoker, endpoint: &str) -> Router {
    async fn invoke(
        State(svc): State<Arc<MockService>>,
        Path(op): Path<String>,
        Json(req): Json<InvokeRequest>,
    ) -> Json<Value> {
        let call = Call {
            node: NodeId(0),
            port: String::new(),
            endpoint: svc.endpoint.clone(),
            operation: op,
            args: req.args.into_iter().map(|a| (a.name, a.value)).collect(),
        };
        Json(svc.mock.result_for(&call))
    }
    Router::new()
        .route("/invoke/{op}", post(invoke))
        .layer(DefaultBodyLimit::disable())
        .with_state(Arc::new(MockService {
            mock,
            endpoint: endpoint.to_string(),
        }))
}
