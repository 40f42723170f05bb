//! Data-driven execution of dataflow graphs.
//!
//! A node fires exactly when all of its input slots hold values. [`RunState`]
//! implements the firing rule; [`Engine`] drives it to completion with a
//! pool of worker threads calling an [`Invoker`].

mod mock;
mod run;
mod state;
mod trace;
mod value;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use mock::MockInvoker;
pub use run::{check_inputs, new_run, run_to_completion, Engine, EngineConfig, EngineError};
pub use state::{Delta, RunState, SlotError, Status, Task};
pub use trace::{EventKind, JsonTrace, Observer, TraceEvent};
pub use value::{Value, ValueParseError};

use crate::dag::NodeId;

/// One service invocation: ordered, named arguments for `operation` at
/// `endpoint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Call {
    pub node: NodeId,
    pub port: String,
    pub endpoint: String,
    pub operation: String,
    pub args: Vec<(String, Value)>,
}

impl Call {
    pub fn bytes_in(&self) -> u64 {
        self.args.iter().map(|(_, v)| v.byte_size()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvokeError {
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("service returned {status}: {body}")]
    Service { status: u16, body: String },
    #[error("{0}")]
    Other(String),
}

/// Performs service calls on behalf of the engine.
pub trait Invoker: Send + Sync {
    fn invoke(&self, call: &Call) -> Result<Value, InvokeError>;
}

impl<T: Invoker + ?Sized> Invoker for std::sync::Arc<T> {
    fn invoke(&self, call: &Call) -> Result<Value, InvokeError> {
        (**self).invoke(call)
    }
}
