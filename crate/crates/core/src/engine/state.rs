use std::collections::{BTreeMap, BTreeSet};

use super::{Call, Value};
use crate::dag::{Edge, EdgeId, Node, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Blocked,
    Enabled,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone)]
struct NodeState {
    node: Node,
    slots: Vec<Option<Value>>,
    status: Status,
}

/// What the coordinator has to do to fire a node.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    /// Call a service; report the result with [`RunState::complete`].
    Invoke(Call),
    /// A free local step (tuple assembly) whose result is already known.
    Local(Value),
}

/// Effects of one state transition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Delta {
    /// Nodes that finished, with the value they produced. Partitioned
    /// executors forward these along cut edges.
    pub completed: Vec<(NodeId, Value)>,
    pub enabled: Vec<NodeId>,
    pub outputs: Vec<(String, Value)>,
}

impl Delta {
    fn merge(&mut self, other: Delta) {
        self.completed.extend(other.completed);
        self.enabled.extend(other.enabled);
        self.outputs.extend(other.outputs);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SlotError {
    #[error("node {0} is not part of this run")]
    UnknownNode(NodeId),
    #[error("node {node} has no input slot {param}")]
    UnknownSlot { node: NodeId, param: usize },
    #[error("input slot {param} of node {node} is already filled")]
    AlreadyFilled { node: NodeId, param: usize },
    #[error("no input named `{0}`")]
    UnknownInput(String),
}

/// Firing-rule state over a set of nodes and the edges between them. It can
/// hold a whole graph or one fragment of it; values for edges that arrive
/// from elsewhere are delivered with [`RunState::fill_slot`].
#[derive(Debug, Clone)]
pub struct RunState {
    nodes: BTreeMap<NodeId, NodeState>,
    out_edges: BTreeMap<NodeId, Vec<Edge>>,
    enabled: BTreeSet<NodeId>,
    outputs: BTreeMap<String, Value>,
    fired: usize,
    failed: bool,
}

impl RunState {
    /// `edges` must only connect nodes in `nodes`. Nodes without input slots
    /// other than constants and inputs start enabled.
    pub fn new<'a>(
        nodes: impl IntoIterator<Item = &'a Node>,
        edges: impl IntoIterator<Item = &'a Edge>,
    ) -> RunState {
        let nodes: BTreeMap<NodeId, NodeState> = nodes
            .into_iter()
            .map(|n| {
                (
                    n.id,
                    NodeState {
                        slots: vec![None; n.arity()],
                        node: n.clone(),
                        status: Status::Blocked,
                    },
                )
            })
            .collect();
        let mut out_edges: BTreeMap<NodeId, Vec<Edge>> = BTreeMap::new();
        for e in edges {
            assert!(
                nodes.contains_key(&e.src) && nodes.contains_key(&e.dst),
                "edge {} leaves the node set",
                e.id
            );
            out_edges.entry(e.src).or_default().push(e.clone());
        }
        let mut state = RunState {
            nodes,
            out_edges,
            enabled: BTreeSet::new(),
            outputs: BTreeMap::new(),
            fired: 0,
            failed: false,
        };
        let ready: Vec<NodeId> = state
            .nodes
            .values()
            .filter(|s| s.node.is_invocation() && s.slots.is_empty())
            .map(|s| s.node.id)
            .collect();
        for id in ready {
            state.set_status(id, Status::Enabled);
            state.enabled.insert(id);
        }
        state.check();
        state
    }

    /// Complete every constant node. Call once before any other transition.
    pub fn start(&mut self) -> Delta {
        let consts: Vec<(NodeId, Value)> = self
            .nodes
            .values()
            .filter_map(|s| match &s.node.kind {
                NodeKind::Const { value } if s.status == Status::Blocked => {
                    Some((s.node.id, Value::from_scalar(value)))
                }
                _ => None,
            })
            .collect();
        let mut delta = Delta::default();
        for (id, v) in consts {
            delta.merge(self.finish(id, v));
        }
        self.check();
        delta
    }

    /// Supply the value of a declared workflow input.
    pub fn bind_input(&mut self, var: &str, value: Value) -> Result<Delta, SlotError> {
        let id = self
            .nodes
            .values()
            .find(|s| matches!(&s.node.kind, NodeKind::Input { var: v, .. } if v == var))
            .map(|s| s.node.id)
            .ok_or_else(|| SlotError::UnknownInput(var.to_string()))?;
        if self.nodes[&id].status == Status::Done {
            return Err(SlotError::AlreadyFilled { node: id, param: 0 });
        }
        let delta = self.finish(id, value);
        self.check();
        Ok(delta)
    }

    /// Deliver a value from outside the node set into one input slot.
    pub fn fill_slot(
        &mut self,
        node: NodeId,
        param: usize,
        value: Value,
    ) -> Result<Delta, SlotError> {
        let st = self.nodes.get(&node).ok_or(SlotError::UnknownNode(node))?;
        match st.slots.get(param) {
            None => return Err(SlotError::UnknownSlot { node, param }),
            Some(Some(_)) => return Err(SlotError::AlreadyFilled { node, param }),
            Some(None) => {}
        }
        let delta = self.put(node, param, value);
        self.check();
        Ok(delta)
    }

    /// Enabled nodes in ascending id order.
    pub fn enabled(&self) -> Vec<NodeId> {
        self.enabled.iter().copied().collect()
    }

    pub fn next_enabled(&self) -> Option<NodeId> {
        self.enabled.first().copied()
    }

    pub fn status(&self, node: NodeId) -> Option<Status> {
        self.nodes.get(&node).map(|s| s.status)
    }

    pub fn node(&self, node: NodeId) -> Option<&Node> {
        self.nodes.get(&node).map(|s| &s.node)
    }

    /// Move an enabled node to running and say how to fire it.
    pub fn begin(&mut self, node: NodeId) -> Task {
        assert!(self.enabled.remove(&node), "node {node} is not enabled");
        self.fired += 1;
        let st = self.nodes.get_mut(&node).unwrap();
        st.status = Status::Running;
        let args: Vec<Value> = st
            .slots
            .iter()
            .map(|s| s.clone().expect("enabled node has all slots"))
            .collect();
        match &st.node.kind {
            NodeKind::Invocation {
                port,
                operation,
                endpoint,
                signature,
            } => Task::Invoke(Call {
                node,
                port: port.clone(),
                endpoint: endpoint.clone(),
                operation: operation.clone(),
                args: signature
                    .inputs
                    .iter()
                    .map(|(n, _)| n.clone())
                    .zip(args)
                    .collect(),
            }),
            NodeKind::TupleAssembly { .. } => Task::Local(Value::Tuple(args)),
            other => unreachable!("{other:?} is never enabled"),
        }
    }

    /// Record the result of a running node and propagate it.
    pub fn complete(&mut self, node: NodeId, value: Value) -> Delta {
        assert_eq!(
            self.nodes[&node].status,
            Status::Running,
            "node {node} is not running"
        );
        let delta = self.finish(node, value);
        self.check();
        delta
    }

    pub fn fail(&mut self, node: NodeId) {
        self.nodes.get_mut(&node).unwrap().status = Status::Failed;
        self.failed = true;
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    /// Every node in the set has finished.
    pub fn is_finished(&self) -> bool {
        self.nodes.values().all(|s| s.status == Status::Done)
    }

    pub fn running(&self) -> usize {
        self.nodes
            .values()
            .filter(|s| s.status == Status::Running)
            .count()
    }

    pub fn done_count(&self) -> usize {
        self.nodes
            .values()
            .filter(|s| s.status == Status::Done)
            .count()
    }

    /// Number of fire events so far (invocations and tuple assemblies).
    pub fn fired(&self) -> usize {
        self.fired
    }

    pub fn outputs(&self) -> &BTreeMap<String, Value> {
        &self.outputs
    }

    pub fn into_outputs(self) -> BTreeMap<String, Value> {
        self.outputs
    }

    /// Ids of the local edges leaving `node`.
    pub fn edges_from(&self, node: NodeId) -> Vec<EdgeId> {
        self.out_edges
            .get(&node)
            .map(|es| es.iter().map(|e| e.id).collect())
            .unwrap_or_default()
    }

    fn set_status(&mut self, node: NodeId, status: Status) {
        self.nodes.get_mut(&node).unwrap().status = status;
    }

    fn finish(&mut self, node: NodeId, value: Value) -> Delta {
        self.set_status(node, Status::Done);
        let mut delta = Delta {
            completed: vec![(node, value.clone())],
            ..Delta::default()
        };
        for e in self.out_edges.get(&node).cloned().unwrap_or_default() {
            let v = match e.src_slot {
                None => value.clone(),
                Some(i) => match &value {
                    Value::Tuple(items) => items[i].clone(),
                    other => panic!("edge {} takes element {i} of non-tuple {other}", e.id),
                },
            };
            delta.merge(self.put(e.dst, e.dst_param, v));
        }
        delta
    }

    fn put(&mut self, node: NodeId, param: usize, value: Value) -> Delta {
        let st = self.nodes.get_mut(&node).unwrap();
        assert!(
            st.slots[param].is_none(),
            "slot {param} of {node} written twice"
        );
        assert_eq!(
            st.status,
            Status::Blocked,
            "slot written on {node} after it fired"
        );
        st.slots[param] = Some(value);
        if st.slots.iter().any(Option::is_none) {
            return Delta::default();
        }
        if let NodeKind::Output { var, .. } = &st.node.kind {
            let var = var.clone();
            let value = st.slots[0].clone().unwrap();
            st.status = Status::Done;
            self.outputs.insert(var.clone(), value.clone());
            return Delta {
                completed: Vec::new(),
                enabled: Vec::new(),
                outputs: vec![(var, value)],
            };
        }
        st.status = Status::Enabled;
        self.enabled.insert(node);
        Delta {
            enabled: vec![node],
            ..Delta::default()
        }
    }

    /// In debug builds, recompute the enabled set by exhaustive scan.
    fn check(&self) {
        if cfg!(debug_assertions) {
            let scan: BTreeSet<NodeId> = self
                .nodes
                .values()
                .filter(|s| {
                    matches!(
                        s.node.kind,
                        NodeKind::Invocation { .. } | NodeKind::TupleAssembly { .. }
                    ) && matches!(s.status, Status::Blocked | Status::Enabled)
                        && s.slots.iter().all(Option::is_some)
                })
                .map(|s| s.node.id)
                .collect();
            assert_eq!(scan, self.enabled, "enabled set out of sync");
        }
    }
}
