use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dflow_core::catalog::{Documents, ResolutionTable};
use dflow_core::engine::{run_to_completion, Call, InvokeError, MockInvoker};
use dflow_core::gen::{generate, random_placement};
use dflow_core::partition::{partition, Placement, Site};
use dflow_core::testbed::{self, Behavior, BehaviorInvoker, Mode, Pattern, TestServiceSpec};
use dflow_core::{parse_source, DataflowGraph, NodeId, Value};
use dflow_orchestrator::wire::{Ack, ErrorBody, Failed, RunMetrics, TokenMsg, WorkflowRequest};
use dflow_orchestrator::*;

const WAIT: Duration = Duration::from_secs(20);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn listing1() -> (String, Documents) {
    let src = std::fs::read_to_string(fixtures().join("listing1.dfl")).unwrap();
    let table = ResolutionTable::load(&fixtures().join("catalogs.json")).unwrap();
    let docs = table.load_for(&parse_source(&src).unwrap()).unwrap();
    (src, docs)
}

fn listing1_inputs() -> BTreeMap<String, Value> {
    [("a".to_string(), Value::Int(7))].into()
}

fn config(site: &str, docs: &Documents) -> OrchestratorConfig {
    let mut c = OrchestratorConfig::new(site, "");
    c.documents = docs.clone();
    c
}

async fn cluster(
    sites: &[&str],
    docs: &Documents,
    invoker: Arc<dyn ServiceInvoker>,
) -> Vec<Daemon> {
    let mut out = Vec::new();
    for s in sites {
        out.push(
            Daemon::start(config(s, docs), invoker.clone(), "127.0.0.1:0")
                .await
                .unwrap(),
        );
    }
    out
}

/// Listing 1 placement: p1, p2 at A; p3..p5 at B; p6 at C; root A.
fn listing1_placement(daemons: &[Daemon]) -> Placement {
    let mut p = Placement::from_json(
        &std::fs::read_to_string(fixtures().join("placement_listing1.json")).unwrap(),
    )
    .unwrap();
    for (site, d) in p.sites.iter_mut().zip(daemons) {
        site.url = d.url().to_string();
    }
    p
}

fn request(
    source: &str,
    inputs: BTreeMap<String, Value>,
    placement: Option<Placement>,
    mode: Mode,
) -> WorkflowRequest {
    WorkflowRequest {
        source: source.into(),
        inputs,
        placement,
        mode,
        catalogs: BTreeMap::new(),
        schemas: BTreeMap::new(),
    }
}

fn compile(src: &str, docs: &Documents) -> DataflowGraph {
    dflow_core::compile(src, docs).unwrap().graph
}

#[tokio::test(flavor = "multi_thread")]
async fn listing1_distributed_equals_local_and_calls_stay_local() {
    let (src, docs) = listing1();
    let g = compile(&src, &docs);
    let mock = Arc::new(MockInvoker::from_graph(&g));
    let oracle = run_to_completion(&g, &listing1_inputs(), mock.clone(), 1).unwrap();

    let daemons = cluster(&["A", "B", "C"], &docs, Arc::new(BlockingInvoker(mock))).await;
    let placement = listing1_placement(&daemons);
    let client = Client::new(daemons[0].url());
    let req = request(
        &src,
        listing1_inputs(),
        Some(placement.clone()),
        Mode::Decentralized,
    );
    let (run, outputs) = client.submit_and_wait(&req, WAIT).await.unwrap();
    assert_eq!(outputs, oracle);

    // every invocation happened at the site its port is placed on
    let mut seen = Vec::new();
    for d in &daemons {
        let m: RunMetrics = Client::new(d.url()).metrics(&run).await.unwrap();
        for inv in &m.invocations {
            assert_eq!(inv.site, m.site);
            let port = g.node(inv.node).port().unwrap().to_string();
            assert_eq!(placement.site_of_port(&port), m.site, "{}", inv.operation);
            seen.push(inv.operation.clone());
        }
    }
    seen.sort();
    assert_eq!(seen, ["Op1", "Op2", "Op3", "Op4", "Op5", "Op6"]);

    let req = request(&src, listing1_inputs(), None, Mode::Centralized);
    let (run, outputs) = client.submit_and_wait(&req, WAIT).await.unwrap();
    assert_eq!(outputs, oracle);
    assert_eq!(client.metrics(&run).await.unwrap().invocations.len(), 6);
}

#[tokio::test(flavor = "multi_thread")]
async fn generated_workflows_equal_oracle_over_http() {
    let corpus: Vec<_> = (0..30).map(generate).collect();
    let mock = Arc::new(MockInvoker::from_catalogs(
        corpus.iter().map(|w| &w.catalog),
    ));
    for duplicate_tokens in [false, true] {
        let mut daemons = Vec::new();
        for i in 0..4 {
            let mut c = OrchestratorConfig::new(&format!("S{i}"), "");
            c.duplicate_tokens = duplicate_tokens;
            let inv: Arc<dyn ServiceInvoker> = Arc::new(BlockingInvoker(mock.clone()));
            daemons.push(Daemon::start(c, inv, "127.0.0.1:0").await.unwrap());
        }
        for (seed, w) in corpus.iter().enumerate() {
            let g = w.compile().graph;
            let oracle = run_to_completion(&g, &w.inputs, mock.clone(), 1).unwrap();
            let placement = random_placement(&w.ports(), seed as u64 + 500, |i| {
                daemons[i].url().to_string()
            });
            let root = placement.root[1..].parse::<usize>().unwrap();
            let docs = w.documents();
            let req = WorkflowRequest {
                source: w.source.clone(),
                inputs: w.inputs.clone(),
                placement: Some(placement),
                mode: Mode::Decentralized,
                catalogs: docs.catalogs,
                schemas: docs.schemas,
            };
            let (_, out) = Client::new(daemons[root].url())
                .submit_and_wait(&req, WAIT)
                .await
                .unwrap();
            assert_eq!(out, oracle, "seed {seed}, duplicates {duplicate_tokens}");
        }
    }
}

async fn post<T: serde::Serialize>(url: String, body: &T) -> (u16, String) {
    let r = reqwest::Client::new()
        .post(url)
        .json(body)
        .send()
        .await
        .unwrap();
    (r.status().as_u16(), r.text().await.unwrap())
}

#[tokio::test(flavor = "multi_thread")]
async fn deploy_and_token_protocol() {
    let (src, docs) = listing1();
    let g = compile(&src, &docs);
    let mock: Arc<dyn ServiceInvoker> =
        Arc::new(BlockingInvoker(Arc::new(MockInvoker::from_graph(&g))));
    let daemons = cluster(&["A", "B", "C"], &docs, mock).await;
    let frags = partition(&g, &listing1_placement(&daemons)).unwrap();
    let frag = |s: &str| frags.iter().find(|f| f.site == s).unwrap().clone();
    let c_url = daemons[2].url();

    let (status, _) = post(format!("{c_url}/runs/r1/fragments"), &frag("C")).await;
    assert_eq!(status, 201);
    let (status, body) = post(format!("{c_url}/runs/r1/fragments"), &frag("C")).await;
    assert_eq!(status, 200);
    assert!(serde_json::from_str::<Ack>(&body)
        .unwrap()
        .warning
        .is_some());
    let (status, body) = post(format!("{c_url}/runs/r2/fragments"), &frag("B")).await;
    assert_eq!(status, 409);
    assert_eq!(
        serde_json::from_str::<ErrorBody>(&body).unwrap().error,
        "WrongSite"
    );

    // C receives b, c, d from B; all typed string
    let inbound = frag("C").inbound[0].clone();
    let token = |value| TokenMsg {
        run: "r1".into(),
        edge: inbound.via,
        value,
        origin: "B".into(),
        seq: 0,
    };
    let (status, body) = post(format!("{c_url}/runs/r1/tokens"), &token(Value::Int(3))).await;
    assert_eq!(status, 422);
    assert_eq!(
        serde_json::from_str::<ErrorBody>(&body).unwrap().error,
        "PayloadTypeMismatch"
    );
    for _ in 0..2 {
        let (status, _) = post(
            format!("{c_url}/runs/r1/tokens"),
            &token(Value::String("b".into())),
        )
        .await;
        assert_eq!(status, 202);
    }
    let m = Client::new(c_url).metrics("r1").await.unwrap();
    assert_eq!((m.counters.tokens_in, m.counters.duplicates), (1, 1));
    assert!(m.invocations.is_empty(), "Op6 waits for all three values");
}

#[tokio::test(flavor = "multi_thread")]
async fn tokens_wait_for_late_fragments_within_grace() {
    let (src, docs) = listing1();
    let g = compile(&src, &docs);
    let mock: Arc<dyn ServiceInvoker> =
        Arc::new(BlockingInvoker(Arc::new(MockInvoker::from_graph(&g))));
    let mut c = config("C", &docs);
    c.grace = Duration::from_millis(300);
    let d = Daemon::start(c, mock, "127.0.0.1:0").await.unwrap();
    let placement = Placement {
        root: "A".into(),
        sites: ["A", "B", "C"]
            .iter()
            .map(|s| Site {
                id: s.to_string(),
                url: if *s == "C" {
                    d.url().into()
                } else {
                    "http://127.0.0.1:9".into()
                },
            })
            .collect(),
        ports: [("p6", "C"), ("p3", "B"), ("p4", "B"), ("p5", "B")]
            .map(|(a, b)| (a.into(), b.into()))
            .into(),
    };
    let frags = partition(&g, &placement).unwrap();
    let frag = frags.iter().find(|f| f.site == "C").unwrap().clone();
    let token = TokenMsg {
        run: "late".into(),
        edge: frag.inbound[0].via,
        value: Value::String("b".into()),
        origin: "B".into(),
        seq: 0,
    };

    let url = d.url().to_string();
    let early = {
        let (url, token) = (url.clone(), token.clone());
        tokio::spawn(async move { post(format!("{url}/runs/late/tokens"), &token).await })
    };
    tokio::time::sleep(Duration::from_millis(50)).await;
    assert_eq!(
        post(format!("{url}/runs/late/fragments"), &frag).await.0,
        201
    );
    assert_eq!(early.await.unwrap().0, 202);

    let started = Instant::now();
    let (status, body) = post(
        format!("{url}/runs/nosuch/tokens"),
        &TokenMsg {
            run: "nosuch".into(),
            ..token
        },
    )
    .await;
    assert_eq!(status, 404);
    assert!(started.elapsed() >= Duration::from_millis(250));
    assert_eq!(
        serde_json::from_str::<ErrorBody>(&body).unwrap().error,
        "UnknownRun"
    );
    let r = reqwest::get(format!("{url}/runs/nosuch/outputs"))
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn failures_reach_the_root() {
    let (src, docs) = listing1();
    let g = compile(&src, &docs);
    let mock = Arc::new(MockInvoker::from_graph(&g).failing("Op4"));
    let daemons = cluster(&["A", "B", "C"], &docs, Arc::new(BlockingInvoker(mock))).await;
    let client = Client::new(daemons[0].url());
    let req = request(
        &src,
        listing1_inputs(),
        Some(listing1_placement(&daemons)),
        Mode::Decentralized,
    );
    let run = client.submit(&req).await.unwrap();
    match client.wait(&run, WAIT).await {
        Err(ClientError::Failed(Failed {
            origin_site, cause, ..
        })) => {
            assert_eq!(origin_site, "B");
            assert!(cause.contains("Op4"), "{cause}");
        }
        other => panic!("expected failure, got {other:?}"),
    }
    let r = reqwest::get(format!("{}/runs/{run}/outputs", daemons[0].url()))
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 410);
}

#[tokio::test(flavor = "multi_thread")]
async fn outputs_pending_while_running() {
    let (src, docs) = listing1();
    let g = compile(&src, &docs);
    let mock = Arc::new(MockInvoker::from_graph(&g).with_delay(Duration::from_millis(100)));
    let daemons = cluster(&["A"], &docs, Arc::new(BlockingInvoker(mock.clone()))).await;
    let client = Client::new(daemons[0].url());
    let run = client
        .submit(&request(&src, listing1_inputs(), None, Mode::Centralized))
        .await
        .unwrap();
    assert!(matches!(
        client.state(&run).await.unwrap(),
        RunState::Pending(_)
    ));
    let out = client.wait(&run, WAIT).await.unwrap();
    assert_eq!(
        out,
        run_to_completion(&g, &listing1_inputs(), mock, 1).unwrap()
    );
}

#[tokio::test(flavor = "multi_thread")]
async fn submission_errors() {
    let (src, docs) = listing1();
    let daemons = cluster(
        &["A", "B", "C"],
        &docs,
        Arc::new(BlockingInvoker(Arc::new(MockInvoker::default()))),
    )
    .await;
    let url = format!("{}/workflows", daemons[0].url());
    let status_code =
        |(s, b): (u16, String)| (s, serde_json::from_str::<ErrorBody>(&b).unwrap().error);

    let req = request(&src, listing1_inputs(), None, Mode::Decentralized);
    assert_eq!(
        status_code(post(url.clone(), &req).await),
        (400, "BadRequest".into())
    );
    let mut placement = listing1_placement(&daemons);
    placement.root = "B".into();
    let req = request(
        &src,
        listing1_inputs(),
        Some(placement),
        Mode::Decentralized,
    );
    assert_eq!(
        status_code(post(url.clone(), &req).await),
        (409, "WrongSite".into())
    );
    let req = request(
        &src.replace("p1.Op1", "p1.Nope"),
        listing1_inputs(),
        None,
        Mode::Centralized,
    );
    let (status, code) = status_code(post(url.clone(), &req).await);
    assert_eq!((status, code.as_str()), (422, "CompileError"));
    let req = request(&src, BTreeMap::new(), None, Mode::Centralized);
    assert_eq!(
        status_code(post(url.clone(), &req).await),
        (422, "InputError".into())
    );

    // a peer that does not answer
    let mut placement = listing1_placement(&daemons);
    placement.sites[2].url = "http://127.0.0.1:9".into();
    let req = request(
        &src,
        listing1_inputs(),
        Some(placement),
        Mode::Decentralized,
    );
    assert_eq!(status_code(post(url, &req).await).0, 502);
}

fn call(endpoint: &str, op: &str, args: Vec<Value>) -> Call {
    Call {
        node: NodeId(0),
        port: "t".into(),
        endpoint: endpoint.into(),
        operation: op.into(),
        args: args
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("a{i}"), v))
            .collect(),
    }
}

async fn test_service(behavior: Behavior, delay: f64) -> Server {
    let spec = TestServiceSpec {
        name: "t".into(),
        behavior,
        compute_delay_ms: delay,
        listen: String::new(),
    };
    Server::start(test_service_router(spec), "127.0.0.1:0")
        .await
        .unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn test_services_over_http() {
    let inv = HttpInvoker::new(Duration::from_secs(5));
    let kib = |n: usize| testbed::input_blob(n * 1024);

    let double = test_service(Behavior::Double, 0.0).await;
    let out = inv
        .invoke(call(&double.url, "Process", vec![kib(1)]))
        .await
        .unwrap();
    assert_eq!(out.byte_size(), 2048);
    let agg = test_service(Behavior::AggregateDouble, 0.0).await;
    let out = inv
        .invoke(call(&agg.url, "Aggregate", vec![kib(1), kib(2), kib(3)]))
        .await
        .unwrap();
    assert_eq!(out.byte_size(), 12 * 1024);
    let same = test_service(Behavior::SameSize, 0.0).await;
    let out = inv
        .invoke(call(&same.url, "Process", vec![kib(64)]))
        .await
        .unwrap();
    assert_eq!(out.byte_size(), 64 * 1024);

    let slow = test_service(Behavior::Double, 500.0).await;
    let quick = HttpInvoker::new(Duration::from_millis(50));
    assert!(matches!(
        quick.invoke(call(&slow.url, "Process", vec![kib(1)])).await,
        Err(InvokeError::Timeout(_))
    ));
    let dead = inv
        .invoke(call("http://127.0.0.1:9", "Process", vec![kib(1)]))
        .await;
    assert!(dead.is_err());

    let mock = MockInvoker::default();
    let expected = mock.result_for(&call("http://svc", "Op", vec![Value::Int(1)]));
    let server = Server::start(mock_service_router(mock, "http://svc"), "127.0.0.1:0")
        .await
        .unwrap();
    let got = inv
        .invoke(call(&server.url, "Op", vec![Value::Int(1)]))
        .await
        .unwrap();
    assert_eq!(got, expected);
}

#[tokio::test(flavor = "multi_thread")]
async fn testbed_patterns_over_real_sockets() {
    let docs = testbed::documents();
    for p in Pattern::ALL {
        let mut services = Vec::new();
        let mut inv = HttpInvoker::new(Duration::from_secs(10));
        for (i, b) in p.behaviors().into_iter().enumerate() {
            let s = test_service(b, 1.0).await;
            inv = inv.rewrite(&testbed::endpoint(i + 1), &s.url);
            services.push(s);
        }
        let daemons = cluster(&["R", "A", "B"], &docs, Arc::new(inv)).await;
        let mut placement = testbed::default_placement();
        for (site, d) in placement.sites.iter_mut().zip(&daemons) {
            site.url = d.url().to_string();
        }
        let inputs: BTreeMap<String, Value> = [("a".to_string(), testbed::input_blob(4096))].into();
        let g = compile(&p.source(), &docs);
        let local = BehaviorInvoker {
            behaviors: (1..=4)
                .map(|i| (testbed::endpoint(i), p.behaviors()[i - 1]))
                .collect(),
        };
        let oracle = run_to_completion(&g, &inputs, Arc::new(local), 1).unwrap();
        let client = Client::new(daemons[0].url());
        for mode in [Mode::Centralized, Mode::Decentralized] {
            let req = request(&p.source(), inputs.clone(), Some(placement.clone()), mode);
            let (_, out) = client.submit_and_wait(&req, WAIT).await.unwrap();
            assert_eq!(out, oracle, "{p} {mode}");
        }
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn finished_runs_are_collected() {
    let (src, docs) = listing1();
    let g = compile(&src, &docs);
    let mut c = config("A", &docs);
    c.gc_after = Duration::from_millis(50);
    let d = Daemon::start(
        c,
        Arc::new(BlockingInvoker(Arc::new(MockInvoker::from_graph(&g)))),
        "127.0.0.1:0",
    )
    .await
    .unwrap();
    let client = Client::new(d.url());
    let (run, _) = client
        .submit_and_wait(
            &request(&src, listing1_inputs(), None, Mode::Centralized),
            WAIT,
        )
        .await
        .unwrap();
    assert!(d.orchestrator.run_ids().contains(&run));
    tokio::time::sleep(Duration::from_millis(300)).await;
    assert!(d.orchestrator.run_ids().is_empty());
}
