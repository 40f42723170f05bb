//! The orchestration service: hosts fragments of runs, invokes services
//! through its proxy and forwards tokens to peer sites.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dflow_core::catalog::Documents;
use dflow_core::engine::{check_inputs, Call, Task};
use dflow_core::partition::{partition, DeliverError, Fragment, FragmentRun, Placement, Step};
use dflow_core::testbed::{Mode, NetModel};
use dflow_core::{EdgeId, NodeKind, Value};
use serde::Serialize;
use tokio::sync::{Notify, Semaphore};
use tracing::{debug, warn};

use crate::invoke::ServiceInvoker;
use crate::wire::*;

#[derive(Debug, Clone)]
pub struct OrchestratorConfig {
    pub site: String,
    /// Base URL peers use to reach this orchestrator.
    pub url: String,
    /// Documents available to workflows submitted here.
    pub documents: Documents,
    /// Concurrent service invocations per orchestrator.
    pub pool: usize,
    /// How long a token for an unknown run waits for its fragment.
    pub grace: Duration,
    /// Finished runs are dropped this long after they end.
    pub gc_after: Duration,
    /// Send every token twice.
    pub duplicate_tokens: bool,
    /// Delay messages as if sites were apart.
    pub net: Option<NetModel>,
    /// Site of each service endpoint, for `net`.
    pub service_sites: BTreeMap<String, String>,
    pub deploy_timeout: Duration,
}

impl OrchestratorConfig {
    pub fn new(site: &str, url: &str) -> OrchestratorConfig {
        OrchestratorConfig {
            site: site.to_string(),
            url: url.to_string(),
            documents: Documents::default(),
            pool: 64,
            grace: Duration::from_secs(10),
            gc_after: Duration::from_secs(300),
            duplicate_tokens: false,
            net: None,
            service_sites: BTreeMap::new(),
            deploy_timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
}

impl RunStatus {
    fn as_str(self) -> &'static str {
        match self {
            RunStatus::Pending => "pending",
            RunStatus::Running => "running",
            RunStatus::Done => "done",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("fragment is for site `{fragment}` but this is `{site}`")]
    WrongSite { fragment: String, site: String },
    #[error("run `{0}` already holds a different fragment")]
    DuplicateRun(String),
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error(transparent)]
    Deliver(#[from] DeliverError),
    #[error("{0}")]
    Compile(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Input(String),
    #[error("deployment failed: {0}")]
    DeployFailed(String),
}

impl ApiError {
    fn code(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::WrongSite { .. } => (StatusCode::CONFLICT, "WrongSite"),
            ApiError::DuplicateRun(_) => (StatusCode::CONFLICT, "DuplicateRun"),
            ApiError::UnknownRun(_) => (StatusCode::NOT_FOUND, "UnknownRun"),
            ApiError::Deliver(DeliverError::PayloadTypeMismatch { .. }) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "PayloadTypeMismatch")
            }
            ApiError::Deliver(DeliverError::UnknownEdge(_)) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "UnknownEdge")
            }
            ApiError::Deliver(DeliverError::Slot(_)) => (StatusCode::CONFLICT, "SlotError"),
            ApiError::Compile(_) => (StatusCode::UNPROCESSABLE_ENTITY, "CompileError"),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "BadRequest"),
            ApiError::Input(_) => (StatusCode::UNPROCESSABLE_ENTITY, "InputError"),
            ApiError::DeployFailed(_) => (StatusCode::BAD_GATEWAY, "DeployFailed"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = self.code();
        (
            status,
            Json(ErrorBody {
                error: code.to_string(),
                message: self.to_string(),
            }),
        )
            .into_response()
    }
}

struct RunEntry {
    fragment_id: String,
    run: FragmentRun,
    status: RunStatus,
    /// Proxy store: values received per transfer, first write wins.
    store: BTreeMap<EdgeId, Value>,
    counters: Counters,
    invocations: Vec<InvocationRecord>,
    failure: Option<FailureMsg>,
    created: Instant,
    finished: Option<Instant>,
}

impl RunEntry {
    fn is_root(&self) -> bool {
        self.run.fragment().is_root()
    }

    fn refresh(&mut self) {
        if matches!(self.status, RunStatus::Done | RunStatus::Failed) {
            return;
        }
        let complete = self.run.is_finished() && (!self.is_root() || self.run.outputs_complete());
        if complete {
            self.status = RunStatus::Done;
            self.finished = Some(Instant::now());
        }
    }

    fn fail(&mut self, failure: FailureMsg) {
        if self.failure.is_none() {
            self.failure = Some(failure);
        }
        if self.status != RunStatus::Failed {
            self.status = RunStatus::Failed;
            self.finished = Some(Instant::now());
        }
    }
}

#[derive(Default)]
struct Actions {
    tokens: Vec<(TokenMsg, String)>,
    calls: Vec<Call>,
}

pub struct Orchestrator {
    config: OrchestratorConfig,
    invoker: Arc<dyn ServiceInvoker>,
    http: reqwest::Client,
    runs: Mutex<HashMap<String, Arc<Mutex<RunEntry>>>>,
    deployed: Notify,
    pool: Semaphore,
    seq: AtomicU64,
}

impl Orchestrator {
    pub fn new(config: OrchestratorConfig, invoker: Arc<dyn ServiceInvoker>) -> Arc<Orchestrator> {
        let pool = Semaphore::new(config.pool.max(1));
        Arc::new(Orchestrator {
            config,
            invoker,
            http: reqwest::Client::new(),
            runs: Mutex::new(HashMap::new()),
            deployed: Notify::new(),
            pool,
            seq: AtomicU64::new(0),
        })
    }

    pub fn site(&self) -> &str {
        &self.config.site
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.config
    }

    fn entry(&self, run: &str) -> Option<Arc<Mutex<RunEntry>>> {
        self.runs.lock().unwrap().get(run).cloned()
    }

    /// Wait up to the grace window for `run` to be deployed here.
    async fn await_entry(&self, run: &str) -> Result<Arc<Mutex<RunEntry>>, ApiError> {
        let deadline = tokio::time::Instant::now() + self.config.grace;
        loop {
            let notified = self.deployed.notified();
            if let Some(e) = self.entry(run) {
                return Ok(e);
            }
            if tokio::time::timeout_at(deadline, notified).await.is_err() {
                return Err(ApiError::UnknownRun(run.to_string()));
            }
        }
    }

    pub fn run_ids(&self) -> Vec<String> {
        self.runs.lock().unwrap().keys().cloned().collect()
    }

    async fn shape(&self, from: &str, to: &str, bytes: u64) {
        if let Some(net) = &self.config.net {
            let ms = net.transfer_time(bytes, from, to);
            if ms > 0.0 {
                tokio::time::sleep(Duration::from_secs_f64(ms / 1000.0)).await;
            }
        }
    }

    fn absorb(&self, run: &str, entry: &mut RunEntry, step: Step, actions: &mut Actions) {
        for tok in step.tokens {
            let url = entry
                .run
                .fragment()
                .outbound
                .iter()
                .find(|o| o.edge == tok.edge)
                .map(|o| o.to_url.clone())
                .expect("tokens follow outbound transfers");
            let msg = TokenMsg {
                run: run.to_string(),
                edge: tok.edge,
                value: tok.value,
                origin: self.config.site.clone(),
                seq: self.seq.fetch_add(1, Ordering::Relaxed),
            };
            actions.tokens.push((msg, url));
        }
    }

    /// Fire every enabled node: local nodes complete on the spot,
    /// invocations are queued for the proxy.
    fn drive(&self, run: &str, entry: &mut RunEntry, actions: &mut Actions) {
        if entry.status == RunStatus::Failed {
            return;
        }
        while let Some(node) = entry.run.next_enabled() {
            if entry.status == RunStatus::Pending {
                entry.status = RunStatus::Running;
            }
            match entry.run.begin(node) {
                Task::Local(v) => {
                    let step = entry.run.complete(node, v);
                    self.absorb(run, entry, step, actions);
                }
                Task::Invoke(call) => actions.calls.push(call),
            }
        }
        entry.refresh();
    }

    fn dispatch(self: &Arc<Self>, run: &str, actions: Actions) {
        for (msg, url) in actions.tokens {
            let me = self.clone();
            tokio::spawn(async move { me.send_token(msg, url).await });
        }
        for call in actions.calls {
            let me = self.clone();
            let run = run.to_string();
            tokio::spawn(async move { me.proxy_invoke(run, call).await });
        }
    }

    /// Install `fragment` for `run`. Returns false when the same fragment
    /// was already deployed.
    pub fn deploy(self: &Arc<Self>, run: &str, fragment: Fragment) -> Result<bool, ApiError> {
        if fragment.site != self.config.site {
            return Err(ApiError::WrongSite {
                fragment: fragment.site,
                site: self.config.site.clone(),
            });
        }
        let mut actions = Actions::default();
        {
            let mut runs = self.runs.lock().unwrap();
            if let Some(existing) = runs.get(run) {
                let same = existing.lock().unwrap().fragment_id == fragment.fragment_id;
                return if same {
                    Ok(false)
                } else {
                    Err(ApiError::DuplicateRun(run.to_string()))
                };
            }
            let mut entry = RunEntry {
                fragment_id: fragment.fragment_id.clone(),
                run: FragmentRun::new(fragment),
                status: RunStatus::Pending,
                store: BTreeMap::new(),
                counters: Counters::default(),
                invocations: Vec::new(),
                failure: None,
                created: Instant::now(),
                finished: None,
            };
            let step = entry.run.start();
            self.absorb(run, &mut entry, step, &mut actions);
            self.drive(run, &mut entry, &mut actions);
            runs.insert(run.to_string(), Arc::new(Mutex::new(entry)));
        }
        self.deployed.notify_waiters();
        debug!(site = %self.config.site, run, "fragment deployed");
        self.dispatch(run, actions);
        Ok(true)
    }

    /// Accept a token. Returns false for a duplicate.
    pub async fn deliver(self: &Arc<Self>, run: &str, msg: TokenMsg) -> Result<bool, ApiError> {
        let entry = self.await_entry(run).await?;
        let mut actions = Actions::default();
        {
            let mut e = entry.lock().unwrap();
            let size = msg.value.byte_size();
            match e.run.deliver(msg.edge, msg.value.clone())? {
                None => {
                    e.counters.duplicates += 1;
                    return Ok(false);
                }
                Some(step) => {
                    e.counters.tokens_in += 1;
                    e.counters.token_bytes_in += size;
                    e.store.entry(msg.edge).or_insert(msg.value);
                    self.absorb(run, &mut e, step, &mut actions);
                    self.drive(run, &mut e, &mut actions);
                }
            }
        }
        self.dispatch(run, actions);
        Ok(true)
    }

    async fn send_token(self: Arc<Self>, msg: TokenMsg, url: String) {
        let to_site = self
            .entry(&msg.run)
            .and_then(|e| {
                let e = e.lock().unwrap();
                e.run
                    .fragment()
                    .outbound
                    .iter()
                    .find(|o| o.edge == msg.edge)
                    .map(|o| o.to_site.clone())
            })
            .unwrap_or_default();
        let size = msg.value.byte_size();
        self.shape(&self.config.site, &to_site, size).await;
        let copies = if self.config.duplicate_tokens { 2 } else { 1 };
        for _ in 0..copies {
            if let Err(cause) = self.post_token(&msg, &url).await {
                warn!(site = %self.config.site, run = %msg.run, %cause, "token delivery failed");
                self.report_failure(&msg.run, cause).await;
                return;
            }
        }
        if let Some(e) = self.entry(&msg.run) {
            let mut e = e.lock().unwrap();
            e.counters.tokens_out += 1;
            e.counters.token_bytes_out += size;
        }
    }

    async fn post_token(&self, msg: &TokenMsg, url: &str) -> Result<(), String> {
        let target = format!("{}/runs/{}/tokens", url.trim_end_matches('/'), msg.run);
        let mut attempt = 0;
        loop {
            match self.http.post(&target).json(msg).send().await {
                Ok(r) if r.status().is_success() => return Ok(()),
                Ok(r) => {
                    let status = r.status();
                    let body = r.text().await.unwrap_or_default();
                    return Err(format!("{target} answered {status}: {body}"));
                }
                Err(e) if attempt < 5 && e.is_connect() => {
                    attempt += 1;
                    tokio::time::sleep(Duration::from_millis(20 << attempt)).await;
                }
                Err(e) => return Err(format!("{target}: {e}")),
            }
        }
    }

    async fn proxy_invoke(self: Arc<Self>, run: String, call: Call) {
        let _permit = self.pool.acquire().await.expect("pool stays open");
        let service_site = self
            .config
            .service_sites
            .get(&call.endpoint)
            .cloned()
            .unwrap_or(self.config.site.clone());
        let bytes_out = call.bytes_in();
        if let Some(e) = self.entry(&run) {
            let mut e = e.lock().unwrap();
            e.invocations.push(InvocationRecord {
                node: call.node,
                endpoint: call.endpoint.clone(),
                operation: call.operation.clone(),
                site: self.config.site.clone(),
            });
            e.counters.invoke_bytes_out += bytes_out;
        }
        self.shape(&self.config.site, &service_site, bytes_out)
            .await;
        let node = call.node;
        let label = format!("{} at {}", call.operation, call.endpoint);
        let result = self.invoker.invoke(call).await;
        if let Ok(v) = &result {
            self.shape(&service_site, &self.config.site, v.byte_size())
                .await;
        }
        let Some(entry) = self.entry(&run) else {
            return;
        };
        let mut actions = Actions::default();
        let failure = {
            let mut e = entry.lock().unwrap();
            let expected = match e.run.state().node(node).map(|n| &n.kind) {
                Some(NodeKind::Invocation { signature, .. }) => Some(signature.output.clone()),
                _ => None,
            };
            match result {
                Ok(v) if expected.as_ref().is_none_or(|t| v.conforms_to(t)) => {
                    e.counters.invoke_bytes_in += v.byte_size();
                    let step = e.run.complete(node, v);
                    self.absorb(&run, &mut e, step, &mut actions);
                    self.drive(&run, &mut e, &mut actions);
                    None
                }
                Ok(v) => Some(format!(
                    "{label} returned {}, expected {}",
                    v.runtime_type(),
                    expected.expect("checked above")
                )),
                Err(err) => Some(format!("{label} failed: {err}")),
            }
        };
        match failure {
            None => self.dispatch(&run, actions),
            Some(cause) => {
                entry.lock().unwrap().run.fail(node);
                self.report_failure(&run, cause).await;
            }
        }
    }

    async fn report_failure(&self, run: &str, cause: String) {
        let Some(entry) = self.entry(run) else { return };
        let (root_site, root_url) = {
            let mut e = entry.lock().unwrap();
            e.fail(FailureMsg {
                site: self.config.site.clone(),
                cause: cause.clone(),
            });
            (
                e.run.fragment().root_site.clone(),
                e.run.fragment().root_url.clone(),
            )
        };
        if root_site != self.config.site {
            let msg = FailureMsg {
                site: self.config.site.clone(),
                cause,
            };
            let url = format!("{}/runs/{run}/failure", root_url.trim_end_matches('/'));
            if let Err(e) = self.http.post(&url).json(&msg).send().await {
                warn!(%url, error = %e, "could not report failure to root");
            }
        }
    }

    pub fn mark_failed(&self, run: &str, failure: FailureMsg) -> Result<(), ApiError> {
        let entry = self
            .entry(run)
            .ok_or_else(|| ApiError::UnknownRun(run.to_string()))?;
        entry.lock().unwrap().fail(failure);
        Ok(())
    }

    /// Compile, partition and deploy a workflow with this orchestrator as
    /// root, then feed its inputs.
    pub async fn submit(self: &Arc<Self>, req: WorkflowRequest) -> Result<String, ApiError> {
        let mut docs = self.config.documents.clone();
        docs.catalogs.extend(req.catalogs);
        docs.schemas.extend(req.schemas);
        let compiled = dflow_core::compile(&req.source, &docs).map_err(|diags| {
            ApiError::Compile(
                diags
                    .iter()
                    .map(|d| d.to_json_line())
                    .collect::<Vec<_>>()
                    .join("\n"),
            )
        })?;
        let graph = compiled.graph;
        let placement = match req.mode {
            Mode::Centralized => Placement::single(&self.config.site, &self.config.url),
            Mode::Decentralized => req.placement.ok_or_else(|| {
                ApiError::BadRequest("decentralized mode needs a placement".into())
            })?,
        };
        if placement.root != self.config.site {
            return Err(ApiError::WrongSite {
                fragment: placement.root,
                site: self.config.site.clone(),
            });
        }
        check_inputs(&graph.inputs(), &req.inputs).map_err(|e| ApiError::Input(e.to_string()))?;
        let fragments =
            partition(&graph, &placement).map_err(|e| ApiError::BadRequest(e.to_string()))?;

        let run = uuid::Uuid::new_v4().simple().to_string();
        let mut peers = tokio::task::JoinSet::new();
        for f in fragments {
            if f.is_root() {
                self.deploy(&run, f)?;
                continue;
            }
            let url = placement
                .url(&f.site)
                .unwrap_or_default()
                .trim_end_matches('/')
                .to_string();
            let me = self.clone();
            let run = run.clone();
            peers.spawn(async move {
                let bytes = serde_json::to_vec(&f).expect("fragment serializes").len() as u64;
                me.shape(&me.config.site, &f.site, bytes).await;
                let target = format!("{url}/runs/{run}/fragments");
                let sent = me
                    .http
                    .post(&target)
                    .json(&f)
                    .timeout(me.config.deploy_timeout)
                    .send()
                    .await;
                me.shape(&f.site, &me.config.site, 0).await;
                match sent {
                    Ok(r) if r.status().is_success() => Ok(()),
                    Ok(r) => Err(format!("{target} answered {}", r.status())),
                    Err(e) => Err(format!("{target}: {e}")),
                }
            });
        }
        while let Some(done) = peers.join_next().await {
            if let Err(cause) = done.map_err(|e| e.to_string()).and_then(|r| r) {
                self.mark_failed(
                    &run,
                    FailureMsg {
                        site: self.config.site.clone(),
                        cause: cause.clone(),
                    },
                )?;
                return Err(ApiError::DeployFailed(cause));
            }
        }

        let entry = self.entry(&run).expect("root fragment deployed");
        let mut actions = Actions::default();
        {
            let mut e = entry.lock().unwrap();
            let step = e
                .run
                .bind_inputs(&req.inputs)
                .map_err(|err| ApiError::Input(err.to_string()))?;
            self.absorb(&run, &mut e, step, &mut actions);
            self.drive(&run, &mut e, &mut actions);
        }
        self.dispatch(&run, actions);
        Ok(run)
    }

    pub fn metrics(&self, run: &str) -> Result<RunMetrics, ApiError> {
        let entry = self
            .entry(run)
            .ok_or_else(|| ApiError::UnknownRun(run.to_string()))?;
        let e = entry.lock().unwrap();
        let end = e.finished.unwrap_or_else(Instant::now);
        Ok(RunMetrics {
            site: self.config.site.clone(),
            status: e.status.as_str().to_string(),
            counters: e.counters.clone(),
            invocations: e.invocations.clone(),
            elapsed_ms: (end - e.created).as_secs_f64() * 1000.0,
        })
    }

    /// Values held in the proxy store for `run`.
    pub fn stored(&self, run: &str) -> Option<BTreeMap<EdgeId, Value>> {
        self.entry(run).map(|e| e.lock().unwrap().store.clone())
    }

    /// Drop runs that ended more than `gc_after` ago.
    pub fn collect_garbage(&self) -> usize {
        let mut runs = self.runs.lock().unwrap();
        let before = runs.len();
        let limit = self.config.gc_after;
        runs.retain(|_, e| {
            e.lock()
                .unwrap()
                .finished
                .is_none_or(|t| t.elapsed() < limit)
        });
        before - runs.len()
    }

    fn outputs(&self, run: &str) -> Response {
        let Some(entry) = self.entry(run) else {
            return ApiError::UnknownRun(run.to_string()).into_response();
        };
        let e = entry.lock().unwrap();
        match e.status {
            RunStatus::Failed => {
                let f = e.failure.clone().unwrap_or(FailureMsg {
                    site: self.config.site.clone(),
                    cause: "failed".into(),
                });
                (
                    StatusCode::GONE,
                    Json(Failed {
                        status: "failed".into(),
                        origin_site: f.site,
                        cause: f.cause,
                    }),
                )
                    .into_response()
            }
            RunStatus::Done => (StatusCode::OK, Json(e.run.outputs().clone())).into_response(),
            _ => (
                StatusCode::ACCEPTED,
                Json(Pending {
                    status: "pending".into(),
                    done: e.run.state().done_count(),
                }),
            )
                .into_response(),
        }
    }
}

async fn healthz(State(o): State<Arc<Orchestrator>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "site": o.site() }))
}

async fn post_fragment(
    State(o): State<Arc<Orchestrator>>,
    Path(run): Path<String>,
    Json(fragment): Json<Fragment>,
) -> Result<Response, ApiError> {
    Ok(if o.deploy(&run, fragment)? {
        (StatusCode::CREATED, Json(Ack::ok("deployed"))).into_response()
    } else {
        let ack = Ack {
            status: "duplicate".into(),
            warning: Some(format!("run {run} already deployed here")),
        };
        (StatusCode::OK, Json(ack)).into_response()
    })
}

async fn post_token(
    State(o): State<Arc<Orchestrator>>,
    Path(run): Path<String>,
    Json(msg): Json<TokenMsg>,
) -> Result<Response, ApiError> {
    let fresh = o.deliver(&run, msg).await?;
    Ok((
        StatusCode::ACCEPTED,
        Json(Ack::ok(if fresh { "accepted" } else { "duplicate" })),
    )
        .into_response())
}

async fn get_outputs(State(o): State<Arc<Orchestrator>>, Path(run): Path<String>) -> Response {
    o.outputs(&run)
}

async fn get_metrics(
    State(o): State<Arc<Orchestrator>>,
    Path(run): Path<String>,
) -> Result<Json<RunMetrics>, ApiError> {
    Ok(Json(o.metrics(&run)?))
}

async fn post_failure(
    State(o): State<Arc<Orchestrator>>,
    Path(run): Path<String>,
    Json(msg): Json<FailureMsg>,
) -> Result<Json<Ack>, ApiError> {
    o.mark_failed(&run, msg)?;
    Ok(Json(Ack::ok("failed")))
}

async fn post_workflow(
    State(o): State<Arc<Orchestrator>>,
    Json(req): Json<WorkflowRequest>,
) -> Result<(StatusCode, Json<RunCreated>), ApiError> {
    let run_id = o.submit(req).await?;
    Ok((StatusCode::CREATED, Json(RunCreated { run_id })))
}

pub fn router(orchestrator: Arc<Orchestrator>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/workflows", post(post_workflow))
        .route("/runs/{run}/fragments", post(post_fragment))
        .route("/runs/{run}/tokens", post(post_token))
        .route("/runs/{run}/outputs", get(get_outputs))
        .route("/runs/{run}/metrics", get(get_metrics))
        .route("/runs/{run}/failure", post(post_failure))
        .layer(DefaultBodyLimit::disable())
        .with_state(orchestrator)
}

/// Periodically drop finished runs.
pub fn spawn_gc(orchestrator: &Arc<Orchestrator>) -> tokio::task::JoinHandle<()> {
    let o = Arc::downgrade(orchestrator);
    let every = (orchestrator.config.gc_after / 10).max(Duration::from_millis(100));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let Some(o) = o.upgrade() else { break };
            let n = o.collect_garbage();
            if n > 0 {
                debug!(site = %o.site(), n, "collected runs");
            }
        }
    })
}
