//! Synthetic test services, a shaped network model and the
//! centralized-vs-decentralized experiments, run on a virtual clock.

mod experiment;
mod report;
mod sim;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use bytes::Bytes;
use serde::{Deserialize, Serialize};

pub use experiment::{run_experiment, run_pair, ExperimentParams};
pub use report::{AggregateRow, MetricsReport, RepetitionMetrics, ReportFormat, ReportRow};
pub use sim::{simulate, ServiceHost, SimEnv, SimError, SimResult};

use crate::catalog::{OperationSig, OutputSig, Param, PortDesc, ServiceCatalog, ServiceDesc};
use crate::engine::{Call, InvokeError, Invoker, Value};
use crate::partition::{Placement, Site};
use crate::types::{BaseType, TypeExpr};

/// What a test service does with its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    /// Output is twice the size of the input.
    Double,
    /// Output is the size of the input.
    SameSize,
    /// Output is twice the total size of all arguments.
    AggregateDouble,
}

impl FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" => Ok(Behavior::Double),
            "same-size" => Ok(Behavior::SameSize),
            "aggregate-double" => Ok(Behavior::AggregateDouble),
            _ => Err(format!("unknown behavior `{s}`")),
        }
    }
}

fn payload(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Blob(b) => out.extend_from_slice(b),
        Value::Tuple(items) => items.iter().for_each(|i| payload(i, out)),
        Value::String(s) => out.extend_from_slice(s.as_bytes()),
        other => out.extend_from_slice(other.to_string().as_bytes()),
    }
}

impl Behavior {
    /// The service's answer to `args`. Always a blob.
    pub fn apply(&self, args: &[Value]) -> Value {
        let mut input = Vec::new();
        for a in args {
            payload(a, &mut input);
        }
        match self {
            Behavior::Double | Behavior::AggregateDouble => {
                let mut out = Vec::with_capacity(input.len() * 2);
                out.extend_from_slice(&input);
                out.extend(input.iter().rev());
                Value::Blob(out.into())
            }
            Behavior::SameSize => Value::Blob(
                input
                    .iter()
                    .map(|b| b.wrapping_add(1))
                    .collect::<Vec<u8>>()
                    .into(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestServiceSpec {
    pub name: String,
    pub behavior: Behavior,
    pub compute_delay_ms: f64,
    #[serde(default)]
    pub listen: String,
}

/// A directed link between two sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub latency_ms: f64,
    /// Bytes per second.
    pub bandwidth: f64,
}

impl Link {
    /// Milliseconds to move `bytes` over the link.
    pub fn transfer_time(&self, bytes: u64) -> f64 {
        self.latency_ms + bytes as f64 / self.bandwidth * 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    #[serde(flatten)]
    pub link: Link,
}

/// Inter-site link characteristics. Links not listed use `default`;
/// messages within a site are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub default: Link,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    /// Upper bound of a uniform extra delay added to each message.
    #[serde(default)]
    pub jitter_ms: f64,
}

impl Default for NetModel {
    fn default() -> Self {
        NetModel::uniform(20.0, 10e6)
    }
}

impl NetModel {
    pub fn uniform(latency_ms: f64, bandwidth: f64) -> NetModel {
        NetModel {
            default: Link {
                latency_ms,
                bandwidth,
            },
            links: Vec::new(),
            jitter_ms: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |l: &Link| l.latency_ms >= 0.0 && l.bandwidth > 0.0 && l.latency_ms.is_finite();
        if !ok(&self.default) || !self.links.iter().all(|l| ok(&l.link)) || self.jitter_ms < 0.0 {
            return Err("latencies must be nonnegative and bandwidths positive".into());
        }
        Ok(())
    }

    /// The link from `a` to `b`, or `None` within a site.
    pub fn link(&self, a: &str, b: &str) -> Option<Link> {
        if a == b {
            return None;
        }
        Some(
            self.links
                .iter()
                .find(|l| l.from == a && l.to == b)
                .map_or(self.default, |l| l.link),
        )
    }

    pub fn transfer_time(&self, bytes: u64, a: &str, b: &str) -> f64 {
        self.link(a, b).map_or(0.0, |l| l.transfer_time(bytes))
    }
}

/// An in-process invoker that answers with test-service behaviors, keyed by
/// endpoint.
#[derive(Debug, Clone, Default)]
pub struct BehaviorInvoker {
    pub behaviors: BTreeMap<String, Behavior>,
}

impl Invoker for BehaviorInvoker {
    fn invoke(&self, call: &Call) -> Result<Value, InvokeError> {
        let b = self
            .behaviors
            .get(&call.endpoint)
            .ok_or_else(|| InvokeError::Other(format!("no test service at {}", call.endpoint)))?;
        let args: Vec<Value> = call.args.iter().map(|(_, v)| v.clone()).collect();
        Ok(b.apply(&args))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Pipeline,
    Distribution,
    Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Centralized,
    Decentralized,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Pipeline => "pipeline",
            Pattern::Distribution => "distribution",
            Pattern::Aggregation => "aggregation",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Centralized => "centralized",
            Mode::Decentralized => "decentralized",
        })
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pipeline" => Ok(Pattern::Pipeline),
            "distribution" => Ok(Pattern::Distribution),
            "aggregation" => Ok(Pattern::Aggregation),
            _ => Err(format!("unknown pattern `{s}`")),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(Mode::Centralized),
            "decentralized" => Ok(Mode::Decentralized),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

pub const CATALOG_URL: &str = "http://testbed.example.org/services.wsdl";

const HEADER: &str = "description tb is http://testbed.example.org/services.wsdl
service s1 is tb.Test1
service s2 is tb.Test2
service s3 is tb.Test3
service s4 is tb.Test4
port t1 is s1.Port
port t2 is s2.Port
port t3 is s3.Port
port t4 is s4.Port
";

impl Pattern {
    pub const ALL: [Pattern; 3] = [
        Pattern::Pipeline,
        Pattern::Distribution,
        Pattern::Aggregation,
    ];

    pub fn source(&self) -> String {
        let body = match self {
            Pattern::Pipeline => {
                "input:
  any a
output:
  any x

a -> t1.Process
t1.Process -> t2.Process
t2.Process -> t3.Process
t3.Process -> t4.Process
t4.Process -> x
"
            }
            Pattern::Distribution => {
                "input:
  any a
output:
  any x2, x3, x4

a -> t1.Process
t1.Process -> v
v -> t2.Process, t3.Process, t4.Process
t2.Process -> x2
t3.Process -> x3
t4.Process -> x4
"
            }
            Pattern::Aggregation => {
                "input:
  any a
output:
  any z

a -> t1.Process, t2.Process, t3.Process
t1.Process -> b
t2.Process -> c
t3.Process -> d
y = (b, c, d)
y -> t4.Aggregate
t4.Aggregate -> z
"
            }
        };
        format!("{HEADER}\n{body}")
    }

    /// Behaviors of T1..T4 for this pattern.
    pub fn behaviors(&self) -> [Behavior; 4] {
        use Behavior::*;
        match self {
            Pattern::Pipeline => [Double; 4],
            Pattern::Distribution => [SameSize; 4],
            Pattern::Aggregation => [SameSize, SameSize, SameSize, AggregateDouble],
        }
    }
}

/// Endpoint of test service `i` (1-based) in the testbed catalog.
pub fn endpoint(i: usize) -> String {
    format!("http://t{i}.testbed.example.org")
}

/// Catalog of test services T1..T4. Each port offers `Process(data)` and
/// `Aggregate(a, b, c)`, all typed `any`. `endpoint` gives the address of
/// service `i` (1-based).
pub fn catalog(endpoint: impl Fn(usize) -> String) -> ServiceCatalog {
    let any = || TypeExpr::Base(BaseType::Any);
    let param = |n: &str| Param {
        name: n.into(),
        ty: any(),
    };
    let services = (1..=4)
        .map(|i| ServiceDesc {
            name: format!("Test{i}"),
            ports: vec![PortDesc {
                name: "Port".into(),
                endpoint: endpoint(i),
                operations: vec![
                    OperationSig {
                        name: "Process".into(),
                        inputs: vec![param("data")],
                        output: OutputSig { ty: any() },
                    },
                    OperationSig {
                        name: "Aggregate".into(),
                        inputs: vec![param("a"), param("b"), param("c")],
                        output: OutputSig { ty: any() },
                    },
                ],
            }],
        })
        .collect();
    ServiceCatalog {
        description: "testbed services".into(),
        services,
    }
}

pub fn documents() -> crate::catalog::Documents {
    let mut docs = crate::catalog::Documents::default();
    docs.catalogs.insert(CATALOG_URL.into(), catalog(endpoint));
    docs
}

/// Root R runs the client-facing orchestrator; T1 and T2 live at site A,
/// T3 and T4 at site B.
pub fn default_placement() -> Placement {
    let site = |id: &str, port: u16| Site {
        id: id.into(),
        url: format!("http://127.0.0.1:{port}"),
    };
    Placement {
        root: "R".into(),
        sites: vec![site("R", 7201), site("A", 7202), site("B", 7203)],
        ports: [("t1", "A"), ("t2", "A"), ("t3", "B"), ("t4", "B")]
            .into_iter()
            .map(|(p, s)| (p.to_string(), s.to_string()))
            .collect(),
    }
}

/// A deterministic blob of `size` bytes.
pub fn input_blob(size: usize) -> Value {
    Value::Blob(Bytes::from(
        (0..size).map(|i| (i % 251) as u8).collect::<Vec<u8>>(),
    ))
}
