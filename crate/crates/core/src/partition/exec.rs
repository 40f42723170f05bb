use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::*;
use crate::dag::DataflowGraph;
use crate::engine::{check_inputs, Delta, EngineError, Invoker, RunState, SlotError, Task, Value};

/// A value in flight to another site, addressed by transfer edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub edge: EdgeId,
    pub src: NodeId,
    pub to_site: String,
    pub value: Value,
}

/// Externally visible effects of a fragment transition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Step {
    pub tokens: Vec<Token>,
    pub outputs: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeliverError {
    #[error("no inbound edge {0} in this fragment")]
    UnknownEdge(EdgeId),
    #[error("edge {edge} carries {expected} but the payload is {found}")]
    PayloadTypeMismatch {
        edge: EdgeId,
        expected: Ty,
        found: Ty,
    },
    #[error(transparent)]
    Slot(#[from] SlotError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Deliver(#[from] DeliverError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// The firing-rule state of one fragment plus its routing table.
#[derive(Debug, Clone)]
pub struct FragmentRun {
    fragment: Fragment,
    state: RunState,
    delivered: BTreeSet<EdgeId>,
}

impl FragmentRun {
    pub fn new(fragment: Fragment) -> FragmentRun {
        let state = RunState::new(&fragment.nodes, &fragment.edges);
        FragmentRun {
            fragment,
            state,
            delivered: BTreeSet::new(),
        }
    }

    pub fn fragment(&self) -> &Fragment {
        &self.fragment
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    /// Complete the fragment's constants. Call once, before anything else.
    pub fn start(&mut self) -> Step {
        let delta = self.state.start();
        self.route(delta)
    }

    /// Bind workflow inputs held by this fragment (the root's).
    pub fn bind_inputs(&mut self, inputs: &BTreeMap<String, Value>) -> Result<Step, EngineError> {
        let declared: Vec<(&str, &Ty)> = self
            .fragment
            .nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Input { var, ty } => Some((var.as_str(), ty)),
                _ => None,
            })
            .collect();
        check_inputs(&declared, inputs)?;
        let mut delta = Delta::default();
        for (var, _) in &declared {
            let d = self
                .state
                .bind_input(var, inputs[*var].clone())
                .expect("input binds once");
            delta.completed.extend(d.completed);
            delta.outputs.extend(d.outputs);
        }
        Ok(self.route(delta))
    }

    /// Accept the value carried by transfer `via`. Returns `None` for a
    /// transfer that was already delivered.
    pub fn deliver(&mut self, via: EdgeId, value: Value) -> Result<Option<Step>, DeliverError> {
        let targets: Vec<Inbound> = self
            .fragment
            .inbound
            .iter()
            .filter(|i| i.via == via)
            .cloned()
            .collect();
        if targets.is_empty() {
            return Err(DeliverError::UnknownEdge(via));
        }
        let mut parts = Vec::with_capacity(targets.len());
        for t in &targets {
            let part = match (t.slot, &value) {
                (None, v) => v.clone(),
                (Some(i), Value::Tuple(items)) if i < items.len() => items[i].clone(),
                (Some(_), v) => {
                    return Err(DeliverError::PayloadTypeMismatch {
                        edge: t.edge,
                        expected: t.ty.clone(),
                        found: v.runtime_type(),
                    })
                }
            };
            if !part.conforms_to(&t.ty) {
                return Err(DeliverError::PayloadTypeMismatch {
                    edge: t.edge,
                    expected: t.ty.clone(),
                    found: part.runtime_type(),
                });
            }
            parts.push(part);
        }
        if !self.delivered.insert(via) {
            return Ok(None);
        }
        let mut delta = Delta::default();
        for (t, part) in targets.iter().zip(parts) {
            let d = self.state.fill_slot(t.dst, t.param, part)?;
            delta.completed.extend(d.completed);
            delta.outputs.extend(d.outputs);
        }
        Ok(Some(self.route(delta)))
    }

    pub fn next_enabled(&self) -> Option<NodeId> {
        self.state.next_enabled()
    }

    pub fn begin(&mut self, node: NodeId) -> Task {
        self.state.begin(node)
    }

    pub fn complete(&mut self, node: NodeId, value: Value) -> Step {
        let delta = self.state.complete(node, value);
        self.route(delta)
    }

    pub fn fail(&mut self, node: NodeId) {
        self.state.fail(node);
    }

    pub fn is_finished(&self) -> bool {
        self.state.is_finished()
    }

    pub fn outputs(&self) -> &BTreeMap<String, Value> {
        self.state.outputs()
    }

    /// Every workflow output held by this fragment is bound.
    pub fn outputs_complete(&self) -> bool {
        let held = self
            .fragment
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Output { .. }))
            .count();
        self.state.outputs().len() == held
    }

    fn route(&self, delta: Delta) -> Step {
        let mut tokens = Vec::new();
        for (node, value) in &delta.completed {
            for o in self.fragment.outbound.iter().filter(|o| o.src == *node) {
                tokens.push(Token {
                    edge: o.edge,
                    src: *node,
                    to_site: o.to_site.clone(),
                    value: value.clone(),
                });
            }
        }
        Step {
            tokens,
            outputs: delta.outputs,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExecOptions {
    /// Deliver every token twice.
    pub duplicate_tokens: bool,
}

/// Run fragments in-process, one site after another, passing tokens through
/// a FIFO queue. Invocations are made synchronously with `invoker`.
pub fn execute_fragments(
    fragments: &[Fragment],
    inputs: &BTreeMap<String, Value>,
    invoker: &dyn Invoker,
    options: ExecOptions,
) -> Result<BTreeMap<String, Value>, ExecError> {
    let mut runs: BTreeMap<String, FragmentRun> = fragments
        .iter()
        .map(|f| (f.site.clone(), FragmentRun::new(f.clone())))
        .collect();
    let root = fragments
        .iter()
        .find(|f| f.is_root())
        .map(|f| f.site.clone());
    let mut queue: VecDeque<Token> = VecDeque::new();
    let push = |queue: &mut VecDeque<Token>, step: Step| {
        for t in step.tokens {
            if options.duplicate_tokens {
                queue.push_back(t.clone());
            }
            queue.push_back(t);
        }
    };
    for run in runs.values_mut() {
        let step = run.start();
        push(&mut queue, step);
    }
    match &root {
        Some(r) => {
            let step = runs.get_mut(r).unwrap().bind_inputs(inputs)?;
            push(&mut queue, step);
        }
        None => check_inputs(&[], inputs)?,
    }
    loop {
        let mut progress = false;
        while let Some(tok) = queue.pop_front() {
            let run = runs.get_mut(&tok.to_site).expect("token for a known site");
            if let Some(step) = run.deliver(tok.edge, tok.value)? {
                push(&mut queue, step);
            }
            progress = true;
        }
        for run in runs.values_mut() {
            while let Some(node) = run.next_enabled() {
                progress = true;
                let value = match run.begin(node) {
                    Task::Local(v) => v,
                    Task::Invoke(call) => match invoker.invoke(&call) {
                        Ok(v) => v,
                        Err(cause) => {
                            run.fail(node);
                            return Err(EngineError::InvocationFailed {
                                node,
                                endpoint: call.endpoint,
                                operation: call.operation,
                                cause,
                            }
                            .into());
                        }
                    },
                };
                let step = run.complete(node, value);
                push(&mut queue, step);
            }
        }
        if !progress {
            break;
        }
    }
    for run in runs.values() {
        assert!(
            run.is_finished(),
            "fragment {} stalled",
            run.fragment.fragment_id
        );
    }
    Ok(root
        .map(|r| runs.remove(&r).unwrap().state.into_outputs())
        .unwrap_or_default())
}

/// Rebuild the whole graph from fragments, checking that they fit together.
pub fn reassemble(fragments: &[Fragment]) -> Result<DataflowGraph, PartitionError> {
    let mismatch = |m: String| Err(PartitionError::ReassemblyMismatch(m));
    let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
    let mut edges: BTreeMap<EdgeId, Edge> = BTreeMap::new();
    let mut site_of: BTreeMap<NodeId, &str> = BTreeMap::new();
    for f in fragments {
        for n in &f.nodes {
            if nodes.insert(n.id, n.clone()).is_some() {
                return mismatch(format!("node {} appears in two fragments", n.id));
            }
            site_of.insert(n.id, &f.site);
        }
    }
    let mut add = |e: Edge| {
        let id = e.id;
        if edges.insert(id, e).is_some() {
            return Err(PartitionError::ReassemblyMismatch(format!(
                "edge {id} appears twice"
            )));
        }
        Ok(())
    };
    for f in fragments {
        for e in &f.edges {
            add(e.clone())?;
        }
        for i in &f.inbound {
            add(Edge {
                id: i.edge,
                src: i.src,
                src_slot: i.slot,
                dst: i.dst,
                dst_param: i.param,
                ty: i.ty.clone(),
            })?;
        }
    }
    for f in fragments {
        for e in &f.edges {
            if site_of.get(&e.src) != Some(&f.site.as_str())
                || site_of.get(&e.dst) != Some(&f.site.as_str())
            {
                return mismatch(format!(
                    "local edge {} of {} leaves the fragment",
                    e.id, f.fragment_id
                ));
            }
        }
        for i in &f.inbound {
            let covered = fragments.iter().any(|g| {
                g.outbound
                    .iter()
                    .any(|o| o.edge == i.via && o.src == i.src && o.to_site == f.site)
            });
            if !covered || site_of.get(&i.dst) != Some(&f.site.as_str()) {
                return mismatch(format!(
                    "inbound edge {} of {} has no matching transfer",
                    i.edge, f.fragment_id
                ));
            }
        }
        for o in &f.outbound {
            let Some(dest) = fragments.iter().find(|g| g.site == o.to_site) else {
                return mismatch(format!(
                    "transfer {} goes to missing site {}",
                    o.edge, o.to_site
                ));
            };
            if !dest
                .inbound
                .iter()
                .any(|i| i.via == o.edge && i.src == o.src)
            {
                return mismatch(format!("transfer {} has no receiver", o.edge));
            }
        }
    }
    let graph = DataflowGraph {
        nodes: nodes.into_values().collect(),
        edges: edges.into_values().collect(),
    };
    graph
        .validate()
        .map_err(PartitionError::ReassemblyMismatch)?;
    Ok(graph)
}

/// Test oracle: reassemble the fragments and run the local engine.
pub fn merge_execute_oracle(
    fragments: &[Fragment],
    inputs: &BTreeMap<String, Value>,
    invoker: std::sync::Arc<dyn Invoker>,
) -> Result<BTreeMap<String, Value>, ExecError> {
    let graph = reassemble(fragments)?;
    Ok(crate::engine::run_to_completion(
        &graph, inputs, invoker, 1,
    )?)
}
