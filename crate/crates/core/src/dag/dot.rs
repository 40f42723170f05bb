use std::fmt::Write;

use super::*;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render the graph as a DOT digraph. Edges into invocations are labelled
/// with the parameter name, edges into tuples with the element index.
pub fn to_dot(graph: &DataflowGraph) -> String {
    let mut out = String::from("digraph workflow {\n  rankdir=TB;\n");
    for n in &graph.nodes {
        let shape = match n.kind {
            NodeKind::Invocation { .. } => "box",
            NodeKind::Input { .. } | NodeKind::Output { .. } => "ellipse",
            NodeKind::TupleAssembly { .. } => "trapezium",
            NodeKind::Const { .. } => "plaintext",
        };
        writeln!(
            out,
            "  {} [label=\"{}\", shape={shape}];",
            n.id,
            escape(&n.label())
        )
        .unwrap();
    }
    for e in &graph.edges {
        let label = match &graph.node(e.dst).kind {
            NodeKind::Invocation { signature, .. } => Some(signature.inputs[e.dst_param].0.clone()),
            NodeKind::TupleAssembly { .. } => Some(e.dst_param.to_string()),
            _ => None,
        };
        match label {
            Some(l) => {
                writeln!(out, "  {} -> {} [label=\"{}\"];", e.src, e.dst, escape(&l)).unwrap()
            }
            None => writeln!(out, "  {} -> {};", e.src, e.dst).unwrap(),
        }
    }
    out.push_str("}\n");
    out
}
