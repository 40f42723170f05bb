use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use dflow_core::catalog::{Documents, ResolutionTable};
use dflow_core::dag::{invocation_levels, to_dot};
use dflow_core::engine::{Call, Engine, EngineConfig, InvokeError, MockInvoker};
use dflow_core::partition::{partition, Placement};
use dflow_core::testbed::{
    self, run_experiment, ExperimentParams, MetricsReport, Pattern, ReportFormat, TestServiceSpec,
};
use dflow_core::{parse_source, Compiled, Invoker, Ty, Value};
use dflow_orchestrator::wire::WorkflowRequest;
use dflow_orchestrator::{
    router, BlockingInvoker, Client, HttpInvoker, Orchestrator, OrchestratorConfig, Server,
    ServiceInvoker,
};
use tokio::runtime::Runtime;

use crate::args::*;

pub const EXIT_FAILED: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
            Failure::Failed(_) => EXIT_FAILED,
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

pub fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        catalogs: cli.catalogs,
        json: cli.json,
    };
    match cli.command {
        Command::Check(a) => check(&ctx, &a.spec),
        Command::Graph(a) => graph(&ctx, a),
        Command::Run(a) => run(&ctx, a),
        Command::Partition(a) => partition_cmd(&ctx, a),
        Command::Serve(a) => serve(&ctx, a),
        Command::Testsvc(a) => testsvc(a),
        Command::Bench(a) => bench(&ctx, a),
    }
}

struct Ctx {
    catalogs: Option<std::path::PathBuf>,
    json: bool,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn runtime() -> Result<Runtime> {
    Runtime::new().map_err(|e| Failure::Io(format!("cannot start runtime: {e}")))
}

/// Documents that need no resolution table: the testbed catalog.
fn builtin_documents(docs: &mut Documents) {
    docs.catalogs
        .entry(testbed::CATALOG_URL.to_string())
        .or_insert_with(|| testbed::catalog(testbed::endpoint));
}

impl Ctx {
    fn table(&self) -> Result<Option<ResolutionTable>> {
        match &self.catalogs {
            None => Ok(None),
            Some(p) => ResolutionTable::load(p)
                .map(Some)
                .map_err(|e| Failure::Io(e.to_string())),
        }
    }

    /// Parse, load documents and compile, printing diagnostics to stderr.
    fn compile(&self, path: &Path) -> Result<(String, Documents, Compiled)> {
        let source = read_text(path)?;
        let mut docs = match (parse_source(&source), self.table()?) {
            (Ok(spec), Some(table)) => table
                .load_for(&spec)
                .map_err(|e| Failure::Io(e.to_string()))?,
            _ => Documents::default(),
        };
        builtin_documents(&mut docs);
        match dflow_core::compile(&source, &docs) {
            Ok(c) => {
                for w in &c.warnings {
                    eprintln!("{}", w.to_json_line());
                }
                Ok((source, docs, c))
            }
            Err(diags) => {
                for d in &diags {
                    eprintln!("{}", d.to_json_line());
                }
                let n = diags.iter().filter(|d| d.is_error()).count();
                Err(Failure::Failed(format!("{}: {n} error(s)", path.display())))
            }
        }
    }
}

fn check(ctx: &Ctx, path: &Path) -> Result<()> {
    let (_, _, c) = ctx.compile(path)?;
    if ctx.json {
        let summary = serde_json::json!({
            "ok": true,
            "warnings": c.warnings.len(),
            "nodes": c.graph.nodes.len(),
            "edges": c.graph.edges.len(),
        });
        emit(&summary.to_string());
    } else {
        emit(&format!(
            "ok: {} nodes, {} edges, {} warning(s)",
            c.graph.nodes.len(),
            c.graph.edges.len(),
            c.warnings.len()
        ));
    }
    Ok(())
}

fn graph(ctx: &Ctx, a: GraphArgs) -> Result<()> {
    let (_, _, c) = ctx.compile(&a.spec)?;
    let g = &c.graph;
    match a.format {
        GraphFormat::Dot => emit(to_dot(g).trim_end()),
        GraphFormat::Json => emit(&g.to_json()),
        GraphFormat::Levels => {
            let levels: Vec<Vec<String>> = invocation_levels(g)
                .iter()
                .map(|l| l.iter().map(|n| g.node(*n).label()).collect())
                .collect();
            emit(&serde_json::to_string(&levels).expect("labels serialize"));
        }
    }
    Ok(())
}

fn split_pair(text: &str, what: &str) -> Result<(String, String)> {
    text.split_once('=')
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .ok_or_else(|| Failure::Usage(format!("{what} must look like `name=value`, got `{text}`")))
}

/// Parse `name=value` and `name=@file` against the declared input types.
pub fn parse_inputs(declared: &[(&str, &Ty)], raw: &[String]) -> Result<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (name, text) = split_pair(item, "input")?;
        let ty = declared
            .iter()
            .find(|(v, _)| *v == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| Failure::Usage(format!("`{name}` is not a declared input")))?;
        let value = match text.strip_prefix('@') {
            Some(file) if ty.is_any() => Value::blob(
                fs::read(file).map_err(|e| Failure::Io(format!("cannot read {file}: {e}")))?,
            ),
            Some(file) => {
                let text = read_text(Path::new(file))?;
                Value::parse_typed(text.trim_end_matches(['\r', '\n']), ty)
                    .map_err(|e| Failure::Usage(e.to_string()))?
            }
            None => Value::parse_typed(&text, ty).map_err(|e| Failure::Usage(e.to_string()))?,
        };
        if out.insert(name.clone(), value).is_some() {
            return Err(Failure::Usage(format!("input `{name}` given twice")));
        }
    }
    Ok(out)
}

/// Blocks an engine worker thread on an async HTTP call.
struct HttpBridge {
    handle: tokio::runtime::Handle,
    inner: HttpInvoker,
}

impl Invoker for HttpBridge {
    fn invoke(&self, call: &Call) -> std::result::Result<Value, InvokeError> {
        self.handle.block_on(self.inner.invoke(call.clone()))
    }
}

fn http_invoker(timeout: Duration, rewrites: &[String]) -> Result<HttpInvoker> {
    let mut inv = HttpInvoker::new(timeout);
    for r in rewrites {
        let (endpoint, url) = split_pair(r, "--service-url")?;
        inv = inv.rewrite(&endpoint, &url);
    }
    Ok(inv)
}

/// Write a line to stdout. A closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json<T: serde::Serialize>(value: &T) {
    emit(&serde_json::to_string_pretty(value).expect("value serializes"));
}

fn run(ctx: &Ctx, a: RunArgs) -> Result<()> {
    if a.mode == RunMode::Decentralized && a.placement.is_none() {
        return Err(Failure::Usage(
            "--mode decentralized needs --placement".into(),
        ));
    }
    if a.mode == RunMode::Centralized && a.orchestrator.is_none() {
        return Err(Failure::Usage(
            "--mode centralized needs --orchestrator".into(),
        ));
    }
    if a.workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let (source, docs, compiled) = ctx.compile(&a.spec)?;
    let graph = compiled.graph;
    let inputs = parse_inputs(&graph.inputs(), &a.inputs)?;
    let timeout = Duration::from_secs(a.timeout_secs);

    let outputs = match a.mode {
        RunMode::Local => {
            let rt = runtime()?;
            let invoker: Arc<dyn Invoker> = if a.mock {
                Arc::new(MockInvoker::from_graph(&graph))
            } else {
                Arc::new(HttpBridge {
                    handle: rt.handle().clone(),
                    inner: http_invoker(timeout, &a.service_urls)?,
                })
            };
            Engine::new(EngineConfig {
                workers: a.workers,
                timeout,
            })
            .run(&graph, &inputs, invoker)
            .map_err(|e| Failure::Failed(e.to_string()))?
        }
        RunMode::Centralized | RunMode::Decentralized => {
            let placement: Option<Placement> = a.placement.as_deref().map(read_json).transpose()?;
            let url = match (&a.orchestrator, &placement) {
                (Some(u), _) => u.clone(),
                (None, Some(p)) => p
                    .url(&p.root)
                    .ok_or_else(|| Failure::Usage(format!("root site `{}` has no URL", p.root)))?
                    .to_string(),
                (None, None) => unreachable!("checked above"),
            };
            let mode = if a.mode == RunMode::Centralized {
                testbed::Mode::Centralized
            } else {
                testbed::Mode::Decentralized
            };
            let req = WorkflowRequest {
                source,
                inputs,
                placement,
                mode,
                catalogs: docs.catalogs,
                schemas: docs.schemas,
            };
            runtime()?
                .block_on(Client::new(&url).submit_and_wait(&req, timeout))
                .map(|(_, out)| out)
                .map_err(|e| Failure::Failed(e.to_string()))?
        }
    };
    print_json(&outputs);
    Ok(())
}

fn partition_cmd(ctx: &Ctx, a: PartitionArgs) -> Result<()> {
    let (_, _, compiled) = ctx.compile(&a.spec)?;
    let placement: Placement = read_json(&a.placement)?;
    let fragments =
        partition(&compiled.graph, &placement).map_err(|e| Failure::Failed(e.to_string()))?;
    fs::create_dir_all(&a.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", a.out.display())))?;
    let mut written = Vec::new();
    for f in &fragments {
        let path = a.out.join(format!("{}.json", f.site));
        fs::write(&path, f.to_json())
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        written.push(path.display().to_string());
    }
    if ctx.json {
        emit(&serde_json::to_string(&written).expect("paths serialize"));
    } else {
        written.iter().for_each(|p| emit(p));
    }
    Ok(())
}

fn serve(ctx: &Ctx, a: ServeArgs) -> Result<()> {
    let mut docs = match ctx.table()? {
        Some(t) => t.load_all().map_err(|e| Failure::Io(e.to_string()))?,
        None => Documents::default(),
    };
    builtin_documents(&mut docs);
    let timeout = Duration::from_secs(a.invoke_timeout_secs);
    let invoker: Arc<dyn ServiceInvoker> = if a.mock {
        Arc::new(BlockingInvoker(Arc::new(MockInvoker::from_catalogs(
            docs.catalogs.values(),
        ))))
    } else {
        Arc::new(http_invoker(timeout, &a.service_urls)?)
    };
    let mut config = OrchestratorConfig::new(
        &a.site,
        a.url.as_deref().unwrap_or(&format!("http://{}", a.listen)),
    );
    config.documents = docs;
    config.pool = a.pool.max(1);
    config.grace = Duration::from_millis(a.grace_ms);
    config.duplicate_tokens = a.duplicate_tokens;
    config.net = match &a.net {
        Some(p) => {
            let net: testbed::NetModel = read_json(p)?;
            net.validate().map_err(Failure::Usage)?;
            Some(net)
        }
        None => None,
    };
    for s in &a.service_sites {
        let (endpoint, site) = split_pair(s, "--service-site")?;
        config.service_sites.insert(endpoint, site);
    }
    let rt = runtime()?;
    rt.block_on(async {
        let orchestrator = Orchestrator::new(config, invoker);
        let _gc = dflow_orchestrator::daemon::spawn_gc(&orchestrator);
        dflow_orchestrator::serve::serve_until_ctrl_c(router(orchestrator), &a.listen).await
    })
    .map_err(|e| Failure::Io(format!("{}: {e}", a.listen)))
}

fn testsvc(a: TestsvcArgs) -> Result<()> {
    let specs: Vec<TestServiceSpec> = match (&a.config, a.behavior) {
        (Some(p), _) => read_json(p)?,
        (None, Some(behavior)) => {
            vec![TestServiceSpec {
                name: "test".into(),
                behavior,
                compute_delay_ms: a.delay_ms,
                listen: a.listen.clone(),
            }]
        }
        (None, None) => return Err(Failure::Usage("give --behavior or --config".into())),
    };
    if specs.iter().any(|s| s.listen.is_empty()) {
        return Err(Failure::Usage(
            "every test service needs a listen address".into(),
        ));
    }
    runtime()?.block_on(async {
        let mut servers = Vec::new();
        for s in specs {
            let listen = s.listen.clone();
            let name = s.name.clone();
            let server = Server::start(dflow_orchestrator::test_service_router(s), &listen)
                .await
                .map_err(|e| Failure::Io(format!("{listen}: {e}")))?;
            emit(&format!("{name} {}", server.url));
            servers.push(server);
        }
        let _ = tokio::signal::ctrl_c().await;
        Ok(())
    })
}

fn bench(ctx: &Ctx, a: BenchArgs) -> Result<()> {
    let mut params: ExperimentParams = match &a.config {
        Some(p) => read_json(p)?,
        None => ExperimentParams::default(),
    };
    if let Some(r) = a.repeats {
        params.repetitions = r;
    }
    if let Some(b) = a.input_bytes {
        params.input_bytes = b;
    }
    if let Some(bw) = a.bandwidth {
        params.net.default.bandwidth = bw;
    }
    if let Some(l) = a.latency_ms {
        params.net.default.latency_ms = l;
    }
    if let Some(s) = a.seed {
        params.seed = s;
    }
    params.net.validate().map_err(Failure::Usage)?;
    if params.repetitions == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    let patterns: Vec<Pattern> = a.pattern.map_or(Pattern::ALL.to_vec(), |p| vec![p]);
    let mut report = MetricsReport::default();
    for p in patterns {
        report.merge(run_experiment(p, &a.modes, &params));
    }
    let format = match a.format {
        ReportFmt::Json => ReportFormat::Json,
        ReportFmt::Csv => ReportFormat::Csv,
    };
    let text = report.emit(format);
    match &a.out {
        Some(path) => {
            fs::write(path, &text)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            if !ctx.json {
                for agg in &report.aggregates {
                    let s = agg.speedup.map_or("n/a".to_string(), |s| format!("{s:.3}"));
                    emit(&format!("{}: speedup {s}", agg.pattern));
                }
            }
        }
        None => emit(text.trim_end()),
    }
    if !report.valid {
        return Err(Failure::Failed(
            report.error.unwrap_or_else(|| "experiment failed".into()),
        ));
    }
    Ok(())
}
