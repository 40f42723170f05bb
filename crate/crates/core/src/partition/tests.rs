use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::*;
use crate::engine::{run_to_completion, MockInvoker, Value};
use crate::testutil::{compile_fixture, fixtures};

fn listing1_placement() -> Placement {
    Placement::from_json(
        &std::fs::read_to_string(fixtures().join("placement_listing1.json")).unwrap(),
    )
    .unwrap()
}

fn a5() -> BTreeMap<String, Value> {
    [("a".to_string(), Value::Int(5))].into_iter().collect()
}

/// (producer label, from site, to site) for every transfer.
fn transfers(graph: &DataflowGraph, frags: &[Fragment]) -> Vec<(String, String, String)> {
    let mut out: Vec<_> = frags
        .iter()
        .flat_map(|f| {
            f.outbound
                .iter()
                .map(move |o| (graph.node(o.src).label(), f.site.clone(), o.to_site.clone()))
        })
        .collect();
    out.sort();
    out
}

#[test]
fn listing1_three_sites() {
    let g = compile_fixture("listing1.dfl").graph;
    let frags = partition(&g, &listing1_placement()).unwrap();
    assert_eq!(
        frags.iter().map(|f| f.site.as_str()).collect::<Vec<_>>(),
        ["A", "B", "C"]
    );
    let t = |p: &str, a: &str, b: &str| (p.to_string(), a.to_string(), b.to_string());
    // x once to B; b, c, d each once to C; y (the tuple, assembled at C) and
    // z back to the root.
    assert_eq!(
        transfers(&g, &frags),
        vec![
            t("p2.Op2", "A", "B"),
            t("p3.Op3", "B", "C"),
            t("p4.Op4", "B", "C"),
            t("p5.Op5", "B", "C"),
            t("p6.Op6", "C", "A"),
            t("y", "C", "A"),
        ]
    );
    let b = &frags[1];
    let x_in: Vec<_> = b.inbound.iter().map(|i| g.node(i.dst).label()).collect();
    assert_eq!(x_in, ["p3.Op3", "p4.Op4", "p5.Op5"]);
    assert_eq!(
        b.inbound
            .iter()
            .map(|i| i.via)
            .collect::<BTreeSet<_>>()
            .len(),
        1
    );
    let c = &frags[2];
    let returns: Vec<_> = c.output_returns.iter().map(|r| r.var.as_str()).collect();
    assert_eq!(returns, ["y", "z"]);
    assert!(frags[0].output_returns.is_empty());
}

#[test]
fn edges_are_conserved() {
    let g = compile_fixture("listing1.dfl").graph;
    let frags = partition(&g, &listing1_placement()).unwrap();
    let local: usize = frags.iter().map(|f| f.edges.len()).sum();
    let cut: BTreeSet<EdgeId> = frags
        .iter()
        .flat_map(|f| f.inbound.iter().map(|i| i.edge))
        .collect();
    assert_eq!(local + cut.len(), g.edges.len());
    let inbound_count: usize = frags.iter().map(|f| f.inbound.len()).sum();
    assert_eq!(
        inbound_count,
        cut.len(),
        "each cut edge is inbound exactly once"
    );
    for f in &frags {
        for i in &f.inbound {
            let covering = frags
                .iter()
                .flat_map(|g| &g.outbound)
                .filter(|o| o.edge == i.via && o.to_site == f.site);
            assert_eq!(covering.count(), 1);
        }
    }
    let nodes: usize = frags.iter().map(|f| f.nodes.len()).sum();
    assert_eq!(nodes, g.nodes.len());
}

#[test]
fn single_site() {
    let g = compile_fixture("listing1.dfl").graph;
    let frags = partition(&g, &Placement::single("A", "http://a")).unwrap();
    assert_eq!(frags.len(), 1);
    assert!(frags[0].outbound.is_empty() && frags[0].inbound.is_empty());
    let out = merge_execute_oracle(&frags, &a5(), Arc::new(MockInvoker::from_graph(&g))).unwrap();
    assert_eq!(
        out,
        run_to_completion(&g, &a5(), Arc::new(MockInvoker::from_graph(&g)), 1).unwrap()
    );
}

#[test]
fn unmapped_port_runs_at_root() {
    let g = compile_fixture("listing1.dfl").graph;
    let mut p = listing1_placement();
    p.ports.remove("p6");
    let frags = partition(&g, &p).unwrap();
    assert!(frags[0].nodes.iter().any(|n| n.label() == "p6.Op6"));
    // the tuple follows Op6 to the root
    assert!(frags[0]
        .nodes
        .iter()
        .any(|n| matches!(n.kind, NodeKind::TupleAssembly { .. })));
    assert_eq!(frags.len(), 2);
}

#[test]
fn undeclared_site_is_rejected() {
    let g = compile_fixture("listing1.dfl").graph;
    let mut p = listing1_placement();
    p.ports.insert("p6".into(), "Z".into());
    assert_eq!(
        partition(&g, &p).unwrap_err(),
        PartitionError::UnknownSiteForPort {
            port: "p6".into(),
            site: "Z".into()
        }
    );
    let mut p = listing1_placement();
    p.root = "Q".into();
    assert_eq!(
        partition(&g, &p).unwrap_err(),
        PartitionError::UnknownRootSite("Q".into())
    );
}

#[test]
fn merge_matches_local_run() {
    let g = compile_fixture("listing1.dfl").graph;
    let frags = partition(&g, &listing1_placement()).unwrap();
    let mock = Arc::new(MockInvoker::from_graph(&g));
    let oracle = run_to_completion(&g, &a5(), mock.clone(), 1).unwrap();
    assert_eq!(
        merge_execute_oracle(&frags, &a5(), mock.clone()).unwrap(),
        oracle
    );
    assert_eq!(
        execute_fragments(&frags, &a5(), mock.as_ref(), ExecOptions::default()).unwrap(),
        oracle
    );
    let dup = ExecOptions {
        duplicate_tokens: true,
    };
    assert_eq!(
        execute_fragments(&frags, &a5(), mock.as_ref(), dup).unwrap(),
        oracle
    );
}

#[test]
fn corrupted_fragment_does_not_reassemble() {
    let g = compile_fixture("listing1.dfl").graph;
    let mut frags = partition(&g, &listing1_placement()).unwrap();
    frags[1].inbound[0].edge = EdgeId(999);
    let err =
        merge_execute_oracle(&frags, &a5(), Arc::new(MockInvoker::from_graph(&g))).unwrap_err();
    assert!(
        matches!(
            err,
            ExecError::Partition(PartitionError::ReassemblyMismatch(_))
        ),
        "{err:?}"
    );

    let mut frags = partition(&g, &listing1_placement()).unwrap();
    frags[1].inbound[0].via = EdgeId(0);
    assert!(merge_execute_oracle(&frags, &a5(), Arc::new(MockInvoker::from_graph(&g))).is_err());
}

#[test]
fn wrong_payload_type_is_refused() {
    let g = compile_fixture("listing1.dfl").graph;
    let frags = partition(&g, &listing1_placement()).unwrap();
    // C receives b, c, d as strings
    let mut c = FragmentRun::new(frags[2].clone());
    c.start();
    let via = c.fragment().inbound[0].via;
    let err = c.deliver(via, Value::Int(3)).unwrap_err();
    assert!(matches!(err, DeliverError::PayloadTypeMismatch { .. }));
    assert!(c
        .deliver(via, Value::String("ok".into()))
        .unwrap()
        .is_some());
    assert!(c
        .deliver(via, Value::String("ok".into()))
        .unwrap()
        .is_none());
    assert_eq!(
        c.deliver(EdgeId(0), Value::Int(1)).unwrap_err(),
        DeliverError::UnknownEdge(EdgeId(0))
    );
}

#[test]
fn fragment_json_shape() {
    let g = compile_fixture("listing1.dfl").graph;
    let frags = partition(&g, &listing1_placement()).unwrap();
    for f in &frags {
        let v: serde_json::Value = serde_json::from_str(&f.to_json()).unwrap();
        for k in [
            "fragment_id",
            "site",
            "nodes",
            "edges",
            "inbound",
            "outbound",
        ] {
            assert!(v.get(k).is_some(), "{k}");
        }
        let back: Fragment = serde_json::from_str(&f.to_json()).unwrap();
        assert_eq!(&back, f);
    }
    let v: serde_json::Value = serde_json::from_str(&frags[0].to_json()).unwrap();
    let o = &v["outbound"][0];
    for k in ["edge", "src", "to_site", "to_url"] {
        assert!(o.get(k).is_some(), "{k}");
    }
    assert_eq!(o["to_url"], "http://127.0.0.1:7102");
}
