use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, RecvTimeoutError};

use super::*;
use crate::dag::{DataflowGraph, NodeKind};
use crate::types::Ty;

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub workers: usize,
    pub timeout: Duration,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: 1,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("missing value for input `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not a declared input")]
    UnexpectedInput(String),
    #[error("input `{var}` expects {expected} but got {found}")]
    InputTypeMismatch {
        var: String,
        expected: Ty,
        found: Ty,
    },
    #[error("{operation} at {endpoint} (node {node}) failed: {cause}")]
    InvocationFailed {
        node: NodeId,
        endpoint: String,
        operation: String,
        cause: InvokeError,
    },
    #[error("{operation} (node {node}) returned {found}, expected {expected}")]
    ResultTypeMismatch {
        node: NodeId,
        operation: String,
        expected: Ty,
        found: Ty,
    },
}

/// Check `inputs` against the graph interface and create the run state with
/// inputs and constants already propagated.
pub fn new_run(
    graph: &DataflowGraph,
    inputs: &BTreeMap<String, Value>,
) -> Result<RunState, EngineError> {
    let declared = graph.inputs();
    check_inputs(&declared, inputs)?;
    let mut state = RunState::new(&graph.nodes, &graph.edges);
    state.start();
    for (var, _) in declared {
        state
            .bind_input(var, inputs[var].clone())
            .expect("declared input binds once");
    }
    Ok(state)
}

/// `inputs` must supply exactly the declared inputs, each with a value of
/// the declared type.
pub fn check_inputs(
    declared: &[(&str, &Ty)],
    inputs: &BTreeMap<String, Value>,
) -> Result<(), EngineError> {
    for name in inputs.keys() {
        if !declared.iter().any(|(v, _)| v == name) {
            return Err(EngineError::UnexpectedInput(name.clone()));
        }
    }
    for (var, ty) in declared {
        let value = inputs
            .get(*var)
            .ok_or_else(|| EngineError::MissingInput(var.to_string()))?;
        if !value.conforms_to(ty) {
            return Err(EngineError::InputTypeMismatch {
                var: var.to_string(),
                expected: (*ty).clone(),
                found: value.runtime_type(),
            });
        }
    }
    Ok(())
}

/// Drives a graph to completion.
pub struct Engine<'o> {
    config: EngineConfig,
    observer: Option<&'o mut dyn Observer>,
}

impl<'o> Engine<'o> {
    pub fn new(config: EngineConfig) -> Engine<'o> {
        assert!(config.workers >= 1, "at least one worker");
        Engine {
            config,
            observer: None,
        }
    }

    pub fn observe(mut self, observer: &'o mut dyn Observer) -> Engine<'o> {
        self.observer = Some(observer);
        self
    }

    fn emit(
        &mut self,
        start: Instant,
        event: EventKind,
        node: NodeId,
        bytes_in: u64,
        bytes_out: u64,
    ) {
        if let Some(o) = self.observer.as_deref_mut() {
            let t_ms = start.elapsed().as_secs_f64() * 1000.0;
            o.on_event(&TraceEvent {
                event,
                node,
                t_ms,
                bytes_in,
                bytes_out,
            });
        }
    }

    fn bound(&mut self, outputs: &[(String, Value)]) {
        if let Some(o) = self.observer.as_deref_mut() {
            for (var, v) in outputs {
                o.on_output(var, v);
            }
        }
    }

    /// Run until every output is bound or the first invocation fails.
    ///
    /// Enabled nodes are dispatched lowest id first, at most `workers` at a
    /// time, so a single worker gives a canonical sequential order.
    pub fn run(
        &mut self,
        graph: &DataflowGraph,
        inputs: &BTreeMap<String, Value>,
        invoker: Arc<dyn Invoker>,
    ) -> Result<BTreeMap<String, Value>, EngineError> {
        let start = Instant::now();
        let mut state = new_run(graph, inputs)?;
        let initial: Vec<(String, Value)> = state
            .outputs()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        self.bound(&initial);

        let (job_tx, job_rx) = unbounded::<Call>();
        let (done_tx, done_rx) = unbounded::<(NodeId, Result<Value, InvokeError>)>();
        for _ in 0..self.config.workers {
            let rx = job_rx.clone();
            let tx = done_tx.clone();
            let invoker = invoker.clone();
            // Detached: a worker stuck past the timeout must not hold up the run.
            thread::spawn(move || {
                for call in rx {
                    let result = invoker.invoke(&call);
                    if tx.send((call.node, result)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(done_tx);

        let mut in_flight: HashMap<NodeId, (Instant, Call)> = HashMap::new();
        loop {
            while in_flight.len() < self.config.workers {
                let Some(node) = state.next_enabled() else {
                    break;
                };
                match state.begin(node) {
                    Task::Local(value) => {
                        let size = value.byte_size();
                        self.emit(start, EventKind::Fire, node, size, 0);
                        let delta = state.complete(node, value);
                        self.emit(start, EventKind::Done, node, size, size);
                        self.bound(&delta.outputs);
                    }
                    Task::Invoke(call) => {
                        self.emit(start, EventKind::Fire, node, call.bytes_in(), 0);
                        in_flight
                            .insert(node, (Instant::now() + self.config.timeout, call.clone()));
                        job_tx.send(call).expect("workers outlive the coordinator");
                    }
                }
            }
            if in_flight.is_empty() {
                break;
            }
            let deadline = in_flight.values().map(|(d, _)| *d).min().unwrap();
            let (node, result) = match done_rx.recv_deadline(deadline) {
                Ok(r) => r,
                Err(RecvTimeoutError::Timeout) => {
                    let (&node, _) = in_flight
                        .iter()
                        .min_by_key(|(id, (d, _))| (*d, **id))
                        .unwrap();
                    (node, Err(InvokeError::Timeout(self.config.timeout)))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    unreachable!("workers hold the channel while jobs are pending")
                }
            };
            let (_, call) = in_flight
                .remove(&node)
                .expect("result for a dispatched node");
            let value = match result {
                Ok(v) => v,
                Err(cause) => {
                    state.fail(node);
                    self.emit(start, EventKind::Fail, node, call.bytes_in(), 0);
                    return Err(EngineError::InvocationFailed {
                        node,
                        endpoint: call.endpoint,
                        operation: call.operation,
                        cause,
                    });
                }
            };
            if let Some(NodeKind::Invocation { signature, .. }) = state.node(node).map(|n| &n.kind)
            {
                if !value.conforms_to(&signature.output) {
                    let expected = signature.output.clone();
                    state.fail(node);
                    self.emit(
                        start,
                        EventKind::Fail,
                        node,
                        call.bytes_in(),
                        value.byte_size(),
                    );
                    return Err(EngineError::ResultTypeMismatch {
                        node,
                        operation: call.operation,
                        expected,
                        found: value.runtime_type(),
                    });
                }
            }
            let size = value.byte_size();
            let delta = state.complete(node, value);
            self.emit(start, EventKind::Done, node, call.bytes_in(), size);
            self.bound(&delta.outputs);
        }
        assert!(state.is_finished(), "run stalled on a checked graph");
        Ok(state.into_outputs())
    }
}

/// Run with `workers` threads and the default timeout.
pub fn run_to_completion(
    graph: &DataflowGraph,
    inputs: &BTreeMap<String, Value>,
    invoker: Arc<dyn Invoker>,
    workers: usize,
) -> Result<BTreeMap<String, Value>, EngineError> {
    Engine::new(EngineConfig {
        workers,
        ..EngineConfig::default()
    })
    .run(graph, inputs, invoker)
}
