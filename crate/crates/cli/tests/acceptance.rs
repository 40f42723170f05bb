//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dflow_core::analyzer::Code;
use dflow_core::catalog::{Documents, Field, ResolutionTable, TypeDef};
use dflow_core::dag::{invocation_levels, invocation_precedence};
use dflow_core::engine::{run_to_completion, MockInvoker};
use dflow_core::gen::{generate, random_placement, GeneratedWorkflow};
use dflow_core::testbed::{run_pair, ExperimentParams, Mode, NetModel, Pattern};
use dflow_core::{BaseType, DataflowGraph, NodeKind, Ty, TypeExpr, Value};
use dflow_orchestrator::wire::WorkflowRequest;
use dflow_orchestrator::{BlockingInvoker, Client, Daemon, OrchestratorConfig, ServiceInvoker};

const KIB: usize = 1024;
const CRITERION_1_LIMIT: Duration = Duration::from_secs(1);
const CRITERION_3_LIMIT: Duration = Duration::from_secs(30);
const CRITERION_4_LIMIT: Duration = Duration::from_secs(300);
const CRITERION_6_LIMIT: Duration = Duration::from_secs(60);
const CORPUS: u64 = 100;
const PLACEMENTS: u64 = 10;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

fn all_documents() -> Documents {
    ResolutionTable::load(&fixtures().join("catalogs.json"))
        .unwrap()
        .load_all()
        .unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- criterion 1

struct Mutation {
    name: &'static str,
    base: &'static str,
    edit: fn(&str) -> String,
    code: Code,
    /// The diagnostic points at the `nth` occurrence of `marker` in the
    /// mutated source, shifted by `offset` characters.
    marker: &'static str,
    nth: usize,
    offset: usize,
}

/// 1-based (line, column) of the `nth` occurrence of `marker`, plus `offset`.
fn position(src: &str, marker: &str, nth: usize, offset: usize) -> Option<(u32, u32)> {
    let at = src.match_indices(marker).nth(nth)?.0 + offset;
    let before = &src[..at];
    let line = before.matches('\n').count() as u32 + 1;
    let col = before.rsplit('\n').next().unwrap().chars().count() as u32 + 1;
    Some((line, col))
}

fn mutations() -> Vec<Mutation> {
    fn m(
        name: &'static str,
        base: &'static str,
        edit: fn(&str) -> String,
        code: Code,
        marker: &'static str,
        nth: usize,
        offset: usize,
    ) -> Mutation {
        Mutation {
            name,
            base,
            edit,
            code,
            marker,
            nth,
            offset,
        }
    }
    use Code::*;
    const L1: &str = "listing1.dfl";
    const L5: &str = "listing5.dfl";
    const L9: &str = "listing9.dfl";
    const L10: &str = "listing10.dfl";
    vec![
        m(
            "deleted port line",
            L1,
            |s| s.replace("port p6 is s6.Port6\n", ""),
            UnknownPort,
            "p6.Op6",
            0,
            0,
        ),
        m(
            "unknown operation",
            L1,
            |s| s.replace("p1.Op1 -> p2.Op2", "p1.Op1 -> p2.OpX"),
            UnknownOperation,
            "p2.OpX",
            0,
            0,
        ),
        m(
            "deleted arrow",
            L1,
            |s| s.replace("a -> p1.Op1", "a p1.Op1"),
            ParseError,
            "a p1.Op1",
            0,
            2,
        ),
        m(
            "stray character",
            L1,
            |s| s.replace("a -> p1.Op1", "a -> $p1.Op1"),
            LexError,
            "$",
            0,
            0,
        ),
        m(
            "unknown service",
            L1,
            |s| s.replace("desc.Service3", "desc.Service9"),
            UnknownService,
            "desc.Service9",
            0,
            0,
        ),
        m(
            "unresolved document",
            L1,
            |s| {
                s.replace(
                    "http://services.example.org/documents/services.wsdl",
                    "http://nowhere.example.org/x.wsdl",
                )
            },
            UnresolvedDocument,
            "http://nowhere",
            0,
            0,
        ),
        m(
            "unknown description",
            L1,
            |s| s.replace("is desc.Service1", "is dsc.Service1"),
            UnknownDescription,
            "dsc.Service1",
            0,
            0,
        ),
        m(
            "unknown parameter",
            L1,
            |s| s.replace("a -> p1.Op1\n", "a -> p1.Op1.q\n"),
            UnknownParameter,
            "p1.Op1.q",
            0,
            0,
        ),
        m(
            "unknown schema prefix",
            L1,
            |s| s.replace("   int a", "   zz:newType a"),
            UnknownSchema,
            "zz:newType",
            0,
            0,
        ),
        m(
            "undefined variable",
            L1,
            |s| s.replace("x -> p3.Op3", "w -> p3.Op3"),
            UndefinedVariable,
            "w -> p3.Op3",
            0,
            0,
        ),
        m(
            "input type against parameter",
            L1,
            |s| s.replace("   int a", "   string a"),
            TypeMismatch,
            "a -> p1.Op1",
            0,
            5,
        ),
        m(
            "tuple too short",
            L1,
            |s| s.replace("y = (b, c, d)", "y = (b, c)"),
            ArityMismatch,
            "y -> p6.Op6",
            0,
            5,
        ),
        m(
            "tuple too long",
            L1,
            |s| s.replace("y = (b, c, d)", "y = (b, c, d, b)"),
            ArityMismatch,
            "y -> p6.Op6",
            0,
            5,
        ),
        m(
            "variable retrieved twice",
            L1,
            |s| s.replace("p3.Op3 -> b\n", "p3.Op3 -> b\np3.Op3 -> b\n"),
            DoubleAssignment,
            "p3.Op3 -> b",
            1,
            0,
        ),
        m(
            "tuple assigned twice",
            L1,
            |s| format!("{s}y = (c, c, d)\n"),
            DoubleAssignment,
            "y = (c, c, d)",
            0,
            0,
        ),
        m(
            "input redefined",
            L1,
            |s| format!("{s}a = 3\n"),
            DoubleAssignment,
            "a = 3",
            0,
            0,
        ),
        m(
            "unbound output",
            L1,
            |s| s.replace("any x, y, z", "any x, y, z, w"),
            UnboundOutput,
            "z, w",
            0,
            3,
        ),
        m(
            "duplicate service",
            L1,
            |s| {
                s.replace(
                    "service s6 is desc.Service6\n",
                    "service s6 is desc.Service6\nservice s1 is desc.Service2\n",
                )
            },
            DuplicateName,
            "service s1",
            1,
            0,
        ),
        m(
            "duplicate port",
            L1,
            |s| {
                s.replace(
                    "port p6 is s6.Port6\n",
                    "port p6 is s6.Port6\nport p1 is s2.Port2\n",
                )
            },
            DuplicateName,
            "port p1",
            1,
            0,
        ),
        m(
            "cycle",
            L1,
            |s| format!("{}x -> p1.Op1\n", s.replace("a -> p1.Op1\n", "")),
            CycleError,
            "x -> p1.Op1",
            0,
            5,
        ),
        m(
            "parameter used as source",
            L1,
            |s| s.replace("p2.Op2 -> x", "p2.Op2.s -> x"),
            InvalidSource,
            "p2.Op2.s",
            0,
            0,
        ),
        m(
            "output declared int",
            L1,
            |s| s.replace("   any x, y, z", "   any x, y\n   int z"),
            TypeMismatch,
            "int z",
            0,
            4,
        ),
        m(
            "unclosed tuple",
            L1,
            |s| s.replace("y = (b, c, d)", "y = (b, c, d"),
            ParseError,
            "y = (b, c, d\n",
            0,
            12,
        ),
        m(
            "deleted retrieval target",
            L1,
            |s| s.replace("p2.Op2 -> x", "p2.Op2 ->"),
            ParseError,
            "p2.Op2 ->\n",
            0,
            9,
        ),
        m(
            "unterminated string",
            L5,
            |s| format!("{s}v = \"abc\n"),
            LexError,
            "\"abc",
            0,
            0,
        ),
        m(
            "scalar into int parameter",
            L5,
            |s| s.replace("a -> p1.Op1", "\"seven\" -> p1.Op1"),
            TypeMismatch,
            "\"seven\" -> p1.Op1",
            0,
            11,
        ),
        m(
            "unknown complex type",
            L10,
            |s| s.replace("schm:newType x", "schm:oldType x"),
            UnknownType,
            "schm:oldType",
            0,
            0,
        ),
        m(
            "single value into three parameters",
            L9,
            |s| {
                s.replace(
                    "p3.Op3 -> p6.Op6.a\np4.Op4 -> p6.Op6.b\np5.Op5 -> p6.Op6.c\n",
                    "p3.Op3 -> p6.Op6\n",
                )
            },
            ArityMismatch,
            "p3.Op3 -> p6.Op6",
            0,
            10,
        ),
        m(
            "routing leaves parameter unbound",
            L9,
            |s| s.replace("p5.Op5 -> p6.Op6.c\n", ""),
            UnboundParameter,
            "p6.Op6.a",
            0,
            0,
        ),
        m(
            "parameter fed twice",
            L9,
            |s| s.replace("p5.Op5 -> p6.Op6.c", "p5.Op5 -> p6.Op6.b"),
            DuplicateFeed,
            "p5.Op5 -> p6.Op6.b",
            0,
            10,
        ),
        m(
            "unknown routed parameter",
            L9,
            |s| s.replace("p6.Op6.c", "p6.Op6.q"),
            UnknownParameter,
            "p6.Op6.q",
            0,
            0,
        ),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let docs = all_documents();
    for n in [1, 5, 6, 7, 8, 9] {
        let name = format!("listing{n}.dfl");
        match dflow_core::compile(&fixture(&name), &docs) {
            Ok(c) => ensure(c.warnings.is_empty(), || {
                format!("{name}: warnings {:?}", c.warnings)
            })?,
            Err(d) => return Err(format!("{name}: {:?}", d)),
        }
    }
    let cases = mutations();
    let mut failures = Vec::new();
    for case in &cases {
        let src = (case.edit)(&fixture(case.base));
        ensure(src != fixture(case.base), || {
            format!("{}: mutation did not apply", case.name)
        })?;
        let want = position(&src, case.marker, case.nth, case.offset)
            .ok_or_else(|| format!("{}: marker `{}` not found", case.name, case.marker))?;
        let diags = match dflow_core::compile(&src, &docs) {
            Ok(_) => {
                failures.push(format!("{}: compiled without errors", case.name));
                continue;
            }
            Err(d) => d,
        };
        let hit = diags
            .iter()
            .any(|d| d.is_error() && d.code == case.code && (d.pos.line, d.pos.col) == want);
        if !hit {
            let got: Vec<String> = diags
                .iter()
                .filter(|d| d.is_error())
                .map(|d| format!("{}@{}:{}", d.code, d.pos.line, d.pos.col))
                .collect();
            failures.push(format!(
                "{}: want {}@{}:{}, got {}",
                case.name,
                case.code,
                want.0,
                want.1,
                got.join(", ")
            ));
        }
    }
    let elapsed = start.elapsed();
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(cases.len() >= 25, || {
        format!("only {} mutation cases", cases.len())
    })?;
    ensure(elapsed < CRITERION_1_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "6 listings clean, {} mutations located, {elapsed:.2?}",
        cases.len()
    ))
}

// ---------------------------------------------------------------- criterion 2

fn node_name(g: &DataflowGraph, id: dflow_core::NodeId) -> String {
    match &g.node(id).kind {
        NodeKind::Input { var, .. } => format!("in:{var}"),
        NodeKind::Output { var, .. } => format!("out:{var}"),
        NodeKind::TupleAssembly { var, arity } => format!("tuple{arity}:{var}"),
        NodeKind::Invocation { operation, .. } => operation.clone(),
        NodeKind::Const { value } => format!("const:{value}"),
    }
}

fn compile_fixture(name: &str, docs: &Documents) -> DataflowGraph {
    dflow_core::compile(&fixture(name), docs).unwrap().graph
}

fn criterion_2() -> Outcome {
    let docs = all_documents();
    let g = compile_fixture("listing1.dfl", &docs);

    let nodes: BTreeSet<String> = g.nodes.iter().map(|n| node_name(&g, n.id)).collect();
    let want_nodes: BTreeSet<String> = [
        "in:a", "Op1", "Op2", "Op3", "Op4", "Op5", "Op6", "tuple3:y", "out:x", "out:y", "out:z",
    ]
    .map(String::from)
    .into();
    ensure(g.nodes.len() == 11 && nodes == want_nodes, || {
        format!("nodes {nodes:?}")
    })?;

    // (src, slot, dst, param); the tuple feeds Op6 element by element
    let edges: BTreeSet<(String, Option<usize>, String, usize)> = g
        .edges
        .iter()
        .map(|e| {
            (
                node_name(&g, e.src),
                e.src_slot,
                node_name(&g, e.dst),
                e.dst_param,
            )
        })
        .collect();
    let e =
        |s: &str, slot: Option<usize>, d: &str, p: usize| (s.to_string(), slot, d.to_string(), p);
    let want_edges: BTreeSet<_> = [
        e("in:a", None, "Op1", 0),
        e("Op1", None, "Op2", 0),
        e("Op2", None, "Op3", 0),
        e("Op2", None, "Op4", 0),
        e("Op2", None, "Op5", 0),
        e("Op2", None, "out:x", 0),
        e("Op3", None, "tuple3:y", 0),
        e("Op4", None, "tuple3:y", 1),
        e("Op5", None, "tuple3:y", 2),
        e("tuple3:y", Some(0), "Op6", 0),
        e("tuple3:y", Some(1), "Op6", 1),
        e("tuple3:y", Some(2), "Op6", 2),
        e("tuple3:y", None, "out:y", 0),
        e("Op6", None, "out:z", 0),
    ]
    .into();
    ensure(
        g.edges.len() == want_edges.len() && edges == want_edges,
        || {
            format!(
                "edge set differs: extra {:?}, missing {:?}",
                edges.difference(&want_edges).collect::<Vec<_>>(),
                want_edges.difference(&edges).collect::<Vec<_>>()
            )
        },
    )?;

    let levels: Vec<Vec<String>> = invocation_levels(&g)
        .iter()
        .map(|l| l.iter().map(|n| node_name(&g, *n)).collect())
        .collect();
    let want_levels = vec![
        vec!["Op1"],
        vec!["Op2"],
        vec!["Op3", "Op4", "Op5"],
        vec!["Op6"],
    ];
    ensure(levels == want_levels, || format!("levels {levels:?}"))?;

    let keep = ["p3.Op3", "p4.Op4", "p5.Op5", "p6.Op6"];
    let restrict = |g: &DataflowGraph| -> BTreeSet<(String, String)> {
        invocation_precedence(g)
            .into_iter()
            .filter(|(a, b)| keep.contains(&a.as_str()) && keep.contains(&b.as_str()))
            .collect()
    };
    let tuple = restrict(&compile_fixture("listing8.dfl", &docs));
    let routing = restrict(&compile_fixture("listing9.dfl", &docs));
    let want_prec: BTreeSet<(String, String)> = ["p3.Op3", "p4.Op4", "p5.Op5"]
        .iter()
        .map(|a| (a.to_string(), "p6.Op6".to_string()))
        .collect();
    ensure(tuple == want_prec && routing == want_prec, || {
        format!("tuple {tuple:?} routing {routing:?}")
    })?;
    Ok("11 nodes, 14 edges, levels [Op1] [Op2] [Op3 Op4 Op5] [Op6], tuple and routing precedence equal".into())
}

// ---------------------------------------------------------------- criterion 3

fn outputs_bytes(out: &BTreeMap<String, Value>) -> Vec<u8> {
    serde_json::to_vec(out).unwrap()
}

fn criterion_3(corpus: &[GeneratedWorkflow]) -> Outcome {
    let start = Instant::now();
    let mut max_nodes = 0;
    for w in corpus {
        let g = w.compile().graph;
        max_nodes = max_nodes.max(g.nodes.len());
        ensure(g.nodes.len() <= 20, || {
            format!("seed {}: {} nodes", w.seed, g.nodes.len())
        })?;
        let mock = Arc::new(MockInvoker::from_graph(&g));
        let oracle = run_to_completion(&g, &w.inputs, mock.clone(), 1)
            .map_err(|e| format!("seed {}: {e}", w.seed))?;
        let oracle = outputs_bytes(&oracle);
        for workers in [2, 4, 8] {
            let out = run_to_completion(&g, &w.inputs, mock.clone(), workers)
                .map_err(|e| format!("seed {} workers {workers}: {e}", w.seed))?;
            ensure(outputs_bytes(&out) == oracle, || {
                format!("seed {} differs at workers={workers}", w.seed)
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < CRITERION_3_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} workflows (max {max_nodes} nodes) x workers {{1,2,4,8}} identical, {elapsed:.2?}",
        corpus.len()
    ))
}

// ---------------------------------------------------------------- criterion 4

async fn start_sites(invoker: Arc<dyn ServiceInvoker>, duplicate_tokens: bool) -> Vec<Daemon> {
    let mut out = Vec::new();
    for i in 0..4 {
        let mut c = OrchestratorConfig::new(&format!("S{i}"), "");
        c.duplicate_tokens = duplicate_tokens;
        out.push(
            Daemon::start(c, invoker.clone(), "127.0.0.1:0")
                .await
                .unwrap(),
        );
    }
    out
}

async fn distributed(
    corpus: &[GeneratedWorkflow],
    sites: &[Daemon],
) -> Result<Vec<String>, String> {
    let mut runs = Vec::new();
    for w in corpus {
        let g = w.compile().graph;
        let oracle =
            run_to_completion(&g, &w.inputs, Arc::new(MockInvoker::from_graph(&g)), 1).unwrap();
        let docs = w.documents();
        let mut tasks = tokio::task::JoinSet::new();
        for k in 0..PLACEMENTS {
            let placement = random_placement(&w.ports(), w.seed * 1000 + k, |i| {
                sites[i].url().to_string()
            });
            let root: usize = placement.root[1..].parse().unwrap();
            let client = Client::new(sites[root].url());
            let req = WorkflowRequest {
                source: w.source.clone(),
                inputs: w.inputs.clone(),
                placement: Some(placement),
                mode: Mode::Decentralized,
                catalogs: docs.catalogs.clone(),
                schemas: docs.schemas.clone(),
            };
            tasks.spawn(async move {
                (
                    k,
                    client.submit_and_wait(&req, Duration::from_secs(60)).await,
                )
            });
        }
        while let Some(done) = tasks.join_next().await {
            let (k, result) = done.map_err(|e| e.to_string())?;
            let (run, out) = result.map_err(|e| format!("seed {} placement {k}: {e}", w.seed))?;
            ensure(out == oracle, || {
                format!(
                    "seed {} placement {k} differs from the local oracle",
                    w.seed
                )
            })?;
            runs.push(run);
        }
    }
    Ok(runs)
}

fn token_counts(sites: &[Daemon], runs: &[String]) -> (u64, u64) {
    let (mut fresh, mut dup) = (0, 0);
    for d in sites {
        for r in runs {
            if let Ok(m) = d.orchestrator.metrics(r) {
                fresh += m.counters.tokens_in;
                dup += m.counters.duplicates;
            }
        }
    }
    (fresh, dup)
}

fn criterion_4(corpus: &[GeneratedWorkflow]) -> Outcome {
    let start = Instant::now();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let mock = Arc::new(MockInvoker::from_catalogs(
        corpus.iter().map(|w| &w.catalog),
    ));
    let invoker: Arc<dyn ServiceInvoker> = Arc::new(BlockingInvoker(mock));
    let (plain, duplicated) = rt.block_on(async {
        let plain_sites = start_sites(invoker.clone(), false).await;
        let dup_sites = start_sites(invoker.clone(), true).await;
        let plain = distributed(corpus, &plain_sites).await?;
        let duplicated = distributed(corpus, &dup_sites).await?;
        // late duplicates may still be in flight after outputs are complete
        tokio::time::sleep(Duration::from_millis(300)).await;
        Ok::<_, String>((
            token_counts(&plain_sites, &plain),
            token_counts(&dup_sites, &duplicated),
        ))
    })?;
    ensure(plain.1 == 0, || {
        format!("{} duplicates without duplication", plain.1)
    })?;
    ensure(
        duplicated.0 == plain.0 && duplicated.1 == duplicated.0 && duplicated.0 > 0,
        || format!("tokens plain {plain:?}, duplicated {duplicated:?}"),
    )?;
    let elapsed = start.elapsed();
    ensure(elapsed < CRITERION_4_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} runs x 2 equal the oracle; {} tokens, each duplicate ignored, {elapsed:.2?}",
        corpus.len() as u64 * PLACEMENTS,
        plain.0
    ))
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5() -> Outcome {
    let s = (256 * KIB) as u64;
    // centralized: each of the four stages sends its input out of R and gets
    // twice that back; decentralized: s leaves R, 16s returns
    let central: u64 = (0..4).map(|i| (s << i) + (s << (i + 1))).sum();
    let decentral = s + 16 * s;
    ensure(central == 45 * s && decentral == 17 * s, || {
        "oracle arithmetic".into()
    })?;
    let params = ExperimentParams {
        input_bytes: 256 * KIB,
        repetitions: 3,
        ..ExperimentParams::default()
    };
    let r = run_pair(Pattern::Pipeline, &params);
    ensure(r.valid, || format!("{:?}", r.error))?;
    for row in &r.rows {
        let want = if row.mode == Mode::Centralized {
            central
        } else {
            decentral
        };
        ensure(row.bytes_through_root == want, || {
            format!(
                "{} rep {}: {} bytes, want {want}",
                row.mode, row.repetition, row.bytes_through_root
            )
        })?;
    }
    Ok(format!(
        "centralized {} = 45s, decentralized {} = 17s",
        central, decentral
    ))
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for p in Pattern::ALL {
        let r = run_pair(
            p,
            &ExperimentParams {
                repetitions: 20,
                ..ExperimentParams::default()
            },
        );
        ensure(r.valid, || format!("{p}: {:?}", r.error))?;
        let s = r.speedup(p).ok_or("no speedup")?;
        ensure(s > 1.0, || format!("{p}: speedup {s:.4}"))?;
        let mut series = Vec::new();
        for mb_per_s in [100.0, 10.0, 1.0] {
            let net = NetModel::uniform(20.0, mb_per_s * 1e6);
            let r = run_pair(
                p,
                &ExperimentParams {
                    repetitions: 20,
                    net,
                    ..ExperimentParams::default()
                },
            );
            series.push(r.speedup(p).ok_or("no speedup")?);
        }
        ensure(series.windows(2).all(|w| w[1] > w[0]), || {
            format!("{p}: speedups {series:?} not increasing")
        })?;
        notes.push(format!(
            "{p} {s:.2} ({:.2}/{:.2}/{:.2})",
            series[0], series[1], series[2]
        ));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < CRITERION_6_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{}, {elapsed:.2?}", notes.join(", ")))
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    for p in Pattern::ALL {
        let mut gaps = Vec::new();
        for size in [64 * KIB, 256 * KIB, 1024 * KIB] {
            let r = run_pair(
                p,
                &ExperimentParams {
                    input_bytes: size,
                    repetitions: 5,
                    ..ExperimentParams::default()
                },
            );
            ensure(r.valid, || format!("{p}: {:?}", r.error))?;
            let a = r
                .aggregates
                .iter()
                .find(|a| a.pattern == p)
                .ok_or("no aggregate")?;
            gaps.push(a.mean_centralized_ms.unwrap() - a.mean_decentralized_ms.unwrap());
        }
        ensure(gaps.windows(2).all(|w| w[1] >= w[0]), || {
            format!("{p}: gaps {gaps:?}")
        })?;
        notes.push(format!(
            "{p} {:.0}/{:.0}/{:.0} ms",
            gaps[0], gaps[1], gaps[2]
        ));
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------- criterion 8

const HEADER: &str = "description desc is http://services.example.org/documents/services.wsdl
description tdesc is http://services.example.org/documents/records.wsdl
schema schm is http://services.example.org/documents/types.xsd
service s1 is desc.Service1
service s2 is desc.Service2
service s3 is desc.Service3
service s6 is desc.Service6
service s7 is tdesc.Service7
port p1 is s1.Port1
port p2 is s2.Port2
port p3 is s3.Port3
port p6 is s6.Port6
port p7 is s7.Port7
";

fn errors(body: &str, docs: &Documents) -> Vec<Code> {
    match dflow_core::compile(&format!("{HEADER}{body}"), docs) {
        Ok(_) => Vec::new(),
        Err(d) => d.iter().filter(|d| d.is_error()).map(|d| d.code).collect(),
    }
}

fn expect(body: &str, docs: &Documents, want: &[Code]) -> Result<(), String> {
    let got = errors(body, docs);
    ensure(got == want, || {
        format!(
            "`{}`: want {want:?}, got {got:?}",
            body.replace('\n', " | ")
        )
    })
}

fn type_any(docs: &Documents) -> Result<(), String> {
    // any-typed value into an int parameter
    expect(
        "input:\n any v\noutput:\n any z\nv -> p1.Op1\np1.Op1 -> z\n",
        docs,
        &[],
    )?;
    // Op2 returns any; into Op1's int parameter
    expect(
        "input:\n string s\noutput:\n any z\ns -> p2.Op2\np2.Op2 -> p1.Op1\np1.Op1 -> z\n",
        docs,
        &[],
    )?;
    // an int value into an any-typed output, and a complex value into any
    expect("input:\n int a\noutput:\n any z\nz = a\n", docs, &[])?;
    expect(
        "input:\n schm:newType r\noutput:\n any z\nz = r\n",
        docs,
        &[],
    )?;
    for b in BaseType::ALL {
        ensure(
            Ty::ANY.compatible(&Ty::Base(b)) && Ty::Base(b).compatible(&Ty::ANY),
            || format!("any vs {b}"),
        )?;
    }
    Ok(())
}

fn type_exact(docs: &Documents) -> Result<(), String> {
    expect(
        "input:\n int a\noutput:\n any z\na -> p1.Op1\np1.Op1 -> z\n",
        docs,
        &[],
    )?;
    for wrong in [
        "long", "short", "byte", "string", "double", "float", "boolean", "decimal",
    ] {
        let body = format!("input:\n {wrong} a\noutput:\n any z\na -> p1.Op1\np1.Op1 -> z\n");
        expect(&body, docs, &[Code::TypeMismatch])?;
    }
    expect(
        "input:\noutput:\n any z\n5 -> p3.Op3\np3.Op3 -> z\n",
        docs,
        &[Code::TypeMismatch],
    )?;
    expect(
        "input:\n int a\noutput:\n int z\na -> p1.Op1\np1.Op1 -> z\n",
        docs,
        &[Code::TypeMismatch],
    )?;
    for a in BaseType::ALL {
        for b in BaseType::ALL {
            let want = a == b || a == BaseType::Any || b == BaseType::Any;
            ensure(Ty::Base(a).compatible(&Ty::Base(b)) == want, || {
                format!("{a} vs {b}")
            })?;
        }
    }
    Ok(())
}

fn single_assignment(docs: &Documents) -> Result<(), String> {
    expect(
        "input:\n int a\noutput:\n any z\na -> p1.Op1\np1.Op1 -> z\np1.Op1 -> z\n",
        docs,
        &[Code::DoubleAssignment],
    )?;
    expect(
        "input:\n int a\noutput:\n any a\na = 3\n",
        docs,
        &[Code::DoubleAssignment],
    )?;
    expect(
        "input:\n int a\noutput:\n any v\nv = 1\nv = 2\n",
        docs,
        &[Code::DoubleAssignment],
    )?;
    expect(
        "input:\n string b\noutput:\n any y\ny = (b, b, b)\ny = (b, b, b)\n",
        docs,
        &[Code::DoubleAssignment],
    )?;
    Ok(())
}

fn tuple_arity(docs: &Documents) -> Result<(), String> {
    let body = |vars: &str| {
        format!(
            "input:\n string b, c, d, e\noutput:\n any z\ny = ({vars})\ny -> p6.Op6\np6.Op6 -> z\n"
        )
    };
    for (vars, want) in [
        ("b, c, d", vec![]),
        ("b, c", vec![Code::ArityMismatch]),
        ("b, c, d, e", vec![Code::ArityMismatch]),
    ] {
        let got: Vec<Code> = errors(&body(vars), docs);
        ensure(got == want, || {
            format!("tuple ({vars}): want {want:?}, got {got:?}")
        })?;
    }
    // a single value cannot satisfy three parameters
    expect(
        "input:\n string b\noutput:\n any z\nb -> p6.Op6\np6.Op6 -> z\n",
        docs,
        &[Code::ArityMismatch],
    )?;
    // element types are checked positionally
    expect(
        "input:\n string b, c\n int d\noutput:\n any z\ny = (b, c, d)\ny -> p6.Op6\np6.Op6 -> z\n",
        docs,
        &[Code::TypeMismatch],
    )?;
    Ok(())
}

fn complex_names(docs: &Documents) -> Result<(), String> {
    expect(
        "input:\n schm:newType r\noutput:\n any z\nr -> p7.Op7\np7.Op7 -> z\n",
        docs,
        &[],
    )?;
    expect(
        "input:\n schm:otherType r\noutput:\n any z\nr -> p7.Op7\np7.Op7 -> z\n",
        docs,
        &[Code::TypeMismatch],
    )?;
    expect(
        "input:\n schm:newType r\noutput:\n any z\nr -> p1.Op1\np1.Op1 -> z\n",
        docs,
        &[Code::TypeMismatch],
    )?;
    expect(
        "input:\n int r\noutput:\n any z\nr -> p7.Op7\np7.Op7 -> z\n",
        docs,
        &[Code::TypeMismatch],
    )?;
    let complex = |n: &str| Ty::Complex {
        schema: "types".into(),
        name: n.into(),
    };
    ensure(complex("newType").compatible(&complex("newType")), || {
        "same name".into()
    })?;
    ensure(
        !complex("newType").compatible(&complex("otherType")),
        || "different names".into(),
    )?;
    let elsewhere = Ty::Complex {
        schema: "other".into(),
        name: "newType".into(),
    };
    ensure(!complex("newType").compatible(&elsewhere), || {
        "same name, other schema".into()
    })?;
    Ok(())
}

fn criterion_8() -> Vec<(&'static str, Result<(), String>)> {
    let mut docs = all_documents();
    // a second record type with the same shape but a different name
    let schema = docs.schemas.values_mut().next().expect("fixture schema");
    schema.types.push(TypeDef {
        name: "otherType".into(),
        fields: vec![
            Field {
                name: "f1".into(),
                ty: TypeExpr::Base(BaseType::Int),
            },
            Field {
                name: "f2".into(),
                ty: TypeExpr::Base(BaseType::String),
            },
        ],
    });
    vec![
        ("any is compatible both ways", type_any(&docs)),
        ("base types match exactly", type_exact(&docs)),
        ("single assignment", single_assignment(&docs)),
        ("tuple arity", tuple_arity(&docs)),
        ("complex types match by name", complex_names(&docs)),
    ]
}

// ---------------------------------------------------------------- harness

fn report(label: &str, outcome: &Outcome) -> bool {
    match outcome {
        Ok(detail) => println!("PASS  {label}: {detail}"),
        Err(why) => println!("FAIL  {label}: {why}"),
    }
    outcome.is_ok()
}

fn main() {
    // `cargo test` passes harness flags such as `--list` or a filter; the
    // suite always runs in full except when listing.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let corpus: Vec<GeneratedWorkflow> = (0..CORPUS).map(generate).collect();
    let mut ok = true;
    ok &= report("criterion 1 grammar coverage", &criterion_1());
    ok &= report("criterion 2 dag structure", &criterion_2());
    ok &= report("criterion 3 determinism", &criterion_3(&corpus));
    ok &= report(
        "criterion 4 partition/merge identity over http",
        &criterion_4(&corpus),
    );
    ok &= report("criterion 5 traffic accounting", &criterion_5());
    ok &= report("criterion 6 speedup direction", &criterion_6());
    ok &= report("criterion 7 scaling with input size", &criterion_7());
    for (name, r) in criterion_8() {
        ok &= report(
            &format!("criterion 8 type system: {name}"),
            &r.map(|()| "ok".to_string()),
        );
    }
    if !ok {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
