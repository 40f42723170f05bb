//! Per-site orchestration services that run workflow fragments, invoke
//! services through a local proxy and pass values directly between sites.

pub mod client;
pub mod daemon;
pub mod invoke;
pub mod serve;
pub mod testsvc;
pub mod wire;

pub use client::{Client, ClientError, RunState};
pub use daemon::{router, ApiError, Orchestrator, OrchestratorConfig, RunStatus};
pub use invoke::{BlockingInvoker, HttpInvoker, ServiceInvoker};
pub use serve::{Daemon, Server};
pub use testsvc::{mock_service_router, test_service_router};
