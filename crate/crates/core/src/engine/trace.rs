use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Value;
use crate::dag::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Fire,
    Done,
    Fail,
}

/// One line of the structured execution trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub event: EventKind,
    pub node: NodeId,
    pub t_ms: f64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

impl TraceEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace event serializes")
    }
}

/// Hooks called by the engine coordinator, in order, from one thread.
pub trait Observer: Send {
    fn on_event(&mut self, _event: &TraceEvent) {}
    /// Called as soon as a workflow output is bound.
    fn on_output(&mut self, _var: &str, _value: &Value) {}
}

/// Writes every event as a JSON line.
pub struct JsonTrace<W: Write + Send> {
    out: W,
}

impl<W: Write + Send> JsonTrace<W> {
    pub fn new(out: W) -> Self {
        JsonTrace { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write + Send> Observer for JsonTrace<W> {
    fn on_event(&mut self, event: &TraceEvent) {
        let _ = writeln!(self.out, "{}", event.to_json_line());
    }
}

impl Observer for Vec<TraceEvent> {
    fn on_event(&mut self, event: &TraceEvent) {
        self.push(event.clone());
    }
}
