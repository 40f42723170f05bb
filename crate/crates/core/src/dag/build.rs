use std::collections::{BTreeMap, HashMap};

use super::*;
use crate::analyzer::{scalar_type, ResolvedWorkflow, ValueSource};
use crate::lang::{AssignValue, StatementKind, TupleItem};

struct Builder<'a> {
    resolved: &'a ResolvedWorkflow,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    edge_pos: Vec<Pos>,
    invocation_nodes: HashMap<usize, NodeId>,
    vars: HashMap<String, (NodeId, Ty)>,
}

impl Builder<'_> {
    fn add(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, kind });
        id
    }

    fn connect(
        &mut self,
        src: NodeId,
        src_slot: Option<usize>,
        dst: NodeId,
        dst_param: usize,
        ty: Ty,
        pos: Pos,
    ) {
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            id,
            src,
            src_slot,
            dst,
            dst_param,
            ty,
        });
        self.edge_pos.push(pos);
    }

    fn invocation(&mut self, inv: usize) -> NodeId {
        if let Some(&id) = self.invocation_nodes.get(&inv) {
            return id;
        }
        let info = &self.resolved.invocations[inv];
        let id = self.add(NodeKind::Invocation {
            port: info.port.clone(),
            operation: info.operation.clone(),
            endpoint: info.endpoint.clone(),
            signature: info.signature.clone(),
        });
        self.invocation_nodes.insert(inv, id);
        id
    }

    fn constant(&mut self, value: &crate::lang::Scalar) -> (NodeId, Ty) {
        (
            self.add(NodeKind::Const {
                value: value.clone(),
            }),
            scalar_type(value),
        )
    }
}

/// Compile a checked workflow into its dataflow graph.
///
/// Node ids follow the order: declared inputs, then nodes in order of first
/// appearance in the statements, then declared outputs. Edge ids follow
/// statement order, with output edges last.
pub fn build_graph(resolved: &ResolvedWorkflow) -> Result<DataflowGraph, DagError> {
    let mut b = Builder {
        resolved,
        nodes: Vec::new(),
        edges: Vec::new(),
        edge_pos: Vec::new(),
        invocation_nodes: HashMap::new(),
        vars: HashMap::new(),
    };
    for (name, ty) in &resolved.inputs {
        let id = b.add(NodeKind::Input {
            var: name.clone(),
            ty: ty.clone(),
        });
        b.vars.insert(name.clone(), (id, ty.clone()));
    }

    let (feeds, _) = resolved.feeds();
    let mut feeds_by_statement: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    for f in feeds {
        feeds_by_statement.entry(f.statement).or_default().push(f);
    }

    for (idx, st) in resolved.spec.statements.iter().enumerate() {
        let ann = &resolved.annotations[idx];
        match &st.kind {
            StatementKind::Invoke(_) => {
                if let Some(s) = ann.source {
                    b.invocation(s.id);
                }
            }
            StatementKind::Retrieve { var, .. } => {
                if let Some(s) = ann.source {
                    let id = b.invocation(s.id);
                    let ty = resolved.invocations[s.id].signature.output.clone();
                    b.vars.entry(var.clone()).or_insert((id, ty));
                }
            }
            StatementKind::Assign { var, value } => {
                let def = match value {
                    AssignValue::Scalar(s) => b.constant(s),
                    AssignValue::Variable(v) => b.vars[v].clone(),
                    AssignValue::Tuple(items) => {
                        let sources: Vec<(NodeId, Ty)> = items
                            .iter()
                            .map(|i| match i {
                                TupleItem::Scalar(s) => b.constant(s),
                                TupleItem::Variable(v) => b.vars[v].clone(),
                            })
                            .collect();
                        let id = b.add(NodeKind::TupleAssembly {
                            var: var.clone(),
                            arity: items.len(),
                        });
                        let tys = sources.iter().map(|(_, t)| t.clone()).collect();
                        for (i, (src, ty)) in sources.into_iter().enumerate() {
                            b.connect(src, None, id, i, ty, st.pos);
                        }
                        (id, Ty::Tuple(tys))
                    }
                };
                b.vars.entry(var.clone()).or_insert(def);
            }
            StatementKind::FeedScalar { .. }
            | StatementKind::FeedVariable { .. }
            | StatementKind::Compose { .. } => {
                let mut scalar_node = None;
                if let Some(s) = ann.source {
                    b.invocation(s.id);
                }
                for f in feeds_by_statement.remove(&idx).unwrap_or_default() {
                    let src = match &f.source {
                        ValueSource::Var(v) => b.vars[v].0,
                        ValueSource::Invocation(i) => b.invocation(*i),
                        ValueSource::Scalar(s) => {
                            *scalar_node.get_or_insert_with(|| b.constant(s).0)
                        }
                    };
                    let dst = b.invocation(f.inv);
                    let ty = resolved.feed_type(&f);
                    b.connect(src, f.slot, dst, f.param, ty, f.pos);
                }
            }
        }
    }
    // Invocations that are only mentioned as targets of failed feeds still
    // get nodes; the analyzer has rejected such programs anyway.
    for inv in 0..resolved.invocations.len() {
        b.invocation(inv);
    }

    for v in &resolved.spec.interface.outputs {
        let id = b.add(NodeKind::Output {
            var: v.name.clone(),
            ty: resolved.var_types[&v.name].clone(),
        });
        let (src, ty) = b.vars[&v.name].clone();
        b.connect(src, None, id, 0, ty, v.pos);
    }

    let graph = DataflowGraph {
        nodes: b.nodes,
        edges: b.edges,
    };
    if let Some(cycle) = find_cycle(&graph) {
        let labels = cycle.iter().map(|n| graph.node(*n).label()).collect();
        // Report at the latest statement contributing an edge to the cycle:
        // that is the one that closes it in reading order.
        let mut pos = Pos::default();
        for (i, e) in graph.edges.iter().enumerate() {
            if let Some(k) = cycle.iter().position(|n| *n == e.src) {
                if cycle[(k + 1) % cycle.len()] == e.dst {
                    pos = pos.max(b.edge_pos[i]);
                }
            }
        }
        return Err(DagError::Cycle {
            nodes: cycle,
            labels,
            pos,
        });
    }
    Ok(graph)
}

/// One cycle as a node sequence starting at its lowest id, or `None`.
pub(super) fn find_cycle(graph: &DataflowGraph) -> Option<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = graph.nodes.len();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &graph.edges {
        succ[e.src.0 as usize].push(e.dst.0 as usize);
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = succ[v].get(*next) {
                *next += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|(u, _)| *u == w).unwrap();
                        let mut cycle: Vec<NodeId> = stack[start..]
                            .iter()
                            .map(|(u, _)| NodeId(*u as u32))
                            .collect();
                        let min = cycle
                            .iter()
                            .enumerate()
                            .min_by_key(|(_, id)| **id)
                            .unwrap()
                            .0;
                        cycle.rotate_left(min);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}
