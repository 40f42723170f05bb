use std::collections::{HashMap, HashSet};
use std::time::Duration;

use super::*;
use crate::catalog::ServiceCatalog;
use crate::dag::{DataflowGraph, NodeKind};
use crate::types::{BaseType, Ty, TypeExpr};

/// Deterministic stand-in for real services. Each call returns a value of
/// the operation's declared output type derived from the text
/// `Op(arg1,arg2,...)`: strings and `any` get the text itself, numbers a
/// hash of it, complex types a one-field record.
#[derive(Debug, Clone, Default)]
pub struct MockInvoker {
    outputs: HashMap<(String, String), Ty>,
    failing: HashSet<String>,
    delay: Option<Duration>,
}

fn fnv(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl MockInvoker {
    pub fn from_graph(graph: &DataflowGraph) -> MockInvoker {
        let mut outputs = HashMap::new();
        for n in &graph.nodes {
            if let NodeKind::Invocation {
                endpoint,
                operation,
                signature,
                ..
            } = &n.kind
            {
                outputs.insert(
                    (endpoint.clone(), operation.clone()),
                    signature.output.clone(),
                );
            }
        }
        MockInvoker {
            outputs,
            ..MockInvoker::default()
        }
    }

    pub fn from_catalogs<'a>(
        catalogs: impl IntoIterator<Item = &'a ServiceCatalog>,
    ) -> MockInvoker {
        let mut outputs = HashMap::new();
        for cat in catalogs {
            for port in cat.services.iter().flat_map(|s| &s.ports) {
                for op in &port.operations {
                    let ty = match &op.output.ty {
                        TypeExpr::Base(b) => Ty::Base(*b),
                        TypeExpr::Complex { schema, name } => Ty::Complex {
                            schema: schema.clone(),
                            name: name.clone(),
                        },
                    };
                    outputs.insert((port.endpoint.clone(), op.name.clone()), ty);
                }
            }
        }
        MockInvoker {
            outputs,
            ..MockInvoker::default()
        }
    }

    /// Make every call to `operation` fail.
    pub fn failing(mut self, operation: &str) -> MockInvoker {
        self.failing.insert(operation.to_string());
        self
    }

    /// Sleep before answering each call.
    pub fn with_delay(mut self, delay: Duration) -> MockInvoker {
        self.delay = Some(delay);
        self
    }

    /// The value a call produces, without side effects.
    pub fn result_for(&self, call: &Call) -> Value {
        let args: Vec<String> = call.args.iter().map(|(_, v)| v.to_string()).collect();
        let text = format!("{}({})", call.operation, args.join(","));
        let ty = self
            .outputs
            .get(&(call.endpoint.clone(), call.operation.clone()))
            .cloned()
            .unwrap_or(Ty::ANY);
        let h = fnv(&text);
        match ty {
            Ty::Base(b) => match b {
                BaseType::Any | BaseType::String => Value::String(text),
                BaseType::Int => Value::Int(h as i32),
                BaseType::Long => Value::Long(h as i64),
                BaseType::Short => Value::Short(h as i16),
                BaseType::Byte => Value::Byte(h as i8),
                BaseType::Float => Value::Float((h % 1_000_000) as f32 / 8.0),
                BaseType::Double => Value::Double((h % 1_000_000_000) as f64 / 16.0),
                BaseType::Decimal => Value::Decimal(format!("{}.{:02}", h % 100_000, h % 100)),
                BaseType::Boolean => Value::Boolean(h & 1 == 1),
            },
            Ty::Complex { .. } => Value::Record(vec![("value".into(), Value::String(text))]),
            Ty::Tuple(_) => Value::String(text),
        }
    }
}

impl Invoker for MockInvoker {
    fn invoke(&self, call: &Call) -> Result<Value, InvokeError> {
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        if self.failing.contains(&call.operation) {
            return Err(InvokeError::Service {
                status: 500,
                body: format!("{} is set to fail", call.operation),
            });
        }
        Ok(self.result_for(call))
    }
}
