//! Dataflow graph compiled from a resolved workflow.
//!
//! Variables disappear here: each one becomes the set of edges leaving the
//! node that defines it. Tuple assignments become explicit
//! [`NodeKind::TupleAssembly`] nodes and scalar literals become
//! [`NodeKind::Const`] nodes.

mod build;
mod dot;
mod parallel;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use build::build_graph;
pub use dot::to_dot;
pub use parallel::{invocation_levels, invocation_precedence, parallel_sets, ParallelSchedule};

use crate::analyzer::{Code, Diagnostic, Signature};
use crate::lang::{Pos, Scalar};
use crate::types::Ty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Input {
        var: String,
        ty: Ty,
    },
    Output {
        var: String,
        ty: Ty,
    },
    Invocation {
        port: String,
        operation: String,
        endpoint: String,
        signature: Signature,
    },
    TupleAssembly {
        var: String,
        arity: usize,
    },
    Const {
        value: Scalar,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl Node {
    /// Number of input slots the node must receive before it can fire.
    pub fn arity(&self) -> usize {
        match &self.kind {
            NodeKind::Input { .. } | NodeKind::Const { .. } => 0,
            NodeKind::Output { .. } => 1,
            NodeKind::Invocation { signature, .. } => signature.inputs.len(),
            NodeKind::TupleAssembly { arity, .. } => *arity,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            NodeKind::Input { var, .. }
            | NodeKind::Output { var, .. }
            | NodeKind::TupleAssembly { var, .. } => var.clone(),
            NodeKind::Invocation {
                port, operation, ..
            } => format!("{port}.{operation}"),
            NodeKind::Const { value } => value.to_string(),
        }
    }

    pub fn is_invocation(&self) -> bool {
        matches!(self.kind, NodeKind::Invocation { .. })
    }

    /// Port name for invocation nodes.
    pub fn port(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Invocation { port, .. } => Some(port),
            _ => None,
        }
    }
}

/// `src` (or element `src_slot` of its tuple value) flows into input slot
/// `dst_param` of `dst`. `ty` is the static type of the carried value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_slot: Option<usize>,
    pub dst: NodeId,
    pub dst_param: usize,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataflowGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DagError {
    #[error("{pos}: dataflow cycle through {}", labels.join(" -> "))]
    Cycle {
        nodes: Vec<NodeId>,
        labels: Vec<String>,
        pos: Pos,
    },
}

impl DagError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            DagError::Cycle { labels, pos, .. } => Diagnostic::error(
                Code::CycleError,
                *pos,
                format!("dataflow cycle through {}", labels.join(" -> ")),
            ),
        }
    }
}

impl DataflowGraph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.dst == id)
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src == id)
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.label() == label).map(|n| n.id)
    }

    pub fn invocations(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_invocation())
    }

    /// Declared workflow inputs in interface order.
    pub fn inputs(&self) -> Vec<(&str, &Ty)> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Input { var, ty } => Some((var.as_str(), ty)),
                _ => None,
            })
            .collect()
    }

    /// Declared workflow outputs in interface order.
    pub fn outputs(&self) -> Vec<(&str, &Ty)> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Output { var, ty } => Some((var.as_str(), ty)),
                _ => None,
            })
            .collect()
    }

    /// Check the structural invariants: dense ids, every slot of every node
    /// fed exactly once, and acyclicity.
    pub fn validate(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.0 as usize != i {
                return Err(format!("node {i} has id {}", n.id));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.id.0 as usize != i {
                return Err(format!("edge {i} has id {}", e.id));
            }
            if e.src.0 as usize >= self.nodes.len() || e.dst.0 as usize >= self.nodes.len() {
                return Err(format!("edge {} refers to a missing node", e.id));
            }
        }
        for n in &self.nodes {
            let mut params: Vec<usize> = self.in_edges(n.id).map(|e| e.dst_param).collect();
            params.sort_unstable();
            if params != (0..n.arity()).collect::<Vec<_>>() {
                return Err(format!(
                    "{} `{}` has input slots {params:?}, expected 0..{}",
                    n.id,
                    n.label(),
                    n.arity()
                ));
            }
        }
        build::find_cycle(self).map_or(Ok(()), |c| Err(format!("cycle through {c:?}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}
