//! Dataflow workflow language for decentralised orchestration of service
//! workflows.
//!
//! The pipeline is: [`lang`] parses source text, [`analyzer`] resolves it
//! against [`catalog`] documents and type-checks it, [`dag`] compiles it to a
//! dataflow graph, [`engine`] executes the graph under the data-driven firing
//! rule, and [`partition`] splits it into per-site fragments for distributed
//! execution. [`testbed`] holds the synthetic services and the virtual-clock
//! experiment harness.

pub mod analyzer;
pub mod catalog;
pub mod compile;
pub mod dag;
pub mod engine;
pub mod gen;
pub mod lang;
pub mod partition;
pub mod testbed;
pub mod types;

pub use compile::{compile, compile_with_table, CompileError, Compiled};
pub use dag::{DataflowGraph, Edge, EdgeId, Node, NodeId, NodeKind};
pub use engine::{Invoker, Value};
pub use lang::{parse_source, WorkflowSpec};
pub use types::{BaseType, Ty, TypeExpr};
