//! Binding routers to sockets.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::Router;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::daemon::{router, spawn_gc, Orchestrator, OrchestratorConfig};
use crate::invoke::ServiceInvoker;

/// A server running on the current runtime. Dropping it stops the server.
pub struct Server {
    pub addr: SocketAddr,
    pub url: String,
    task: JoinHandle<()>,
}

impl Server {
    pub async fn start(app: Router, listen: &str) -> io::Result<Server> {
        let listener = TcpListener::bind(listen).await?;
        let addr = listener.local_addr()?;
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(Server {
            addr,
            url: format!("http://{addr}"),
            task,
        })
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// An orchestrator listening on a socket.
pub struct Daemon {
    pub orchestrator: Arc<Orchestrator>,
    pub server: Server,
    gc: JoinHandle<()>,
}

impl Daemon {
    /// Start an orchestrator on `listen`. An empty `config.url` is filled
    /// with the bound address.
    pub async fn start(
        mut config: OrchestratorConfig,
        invoker: Arc<dyn ServiceInvoker>,
        listen: &str,
    ) -> io::Result<Daemon> {
        let listener = TcpListener::bind(listen).await?;
        let addr = listener.local_addr()?;
        let url = format!("http://{addr}");
        if config.url.is_empty() {
            config.url = url.clone();
        }
        let orchestrator = Orchestrator::new(config, invoker);
        let gc = spawn_gc(&orchestrator);
        let app = router(orchestrator.clone());
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(Daemon {
            orchestrator,
            server: Server { addr, url, task },
            gc,
        })
    }

    pub fn url(&self) -> &str {
        &self.server.url
    }
}

impl Drop for Daemon {
    fn drop(&mut self) {
        self.gc.abort();
    }
}

/// Serve `app` on `listen` until interrupted.
pub async fn serve_until_ctrl_c(app: Router, listen: &str) -> io::Result<()> {
    let listener = TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
