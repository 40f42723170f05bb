//! Name resolution and type checking.
//!
//! [`resolve`] binds every identifier in a parsed workflow to catalog and
//! schema entries and infers variable types; [`check_types`] then verifies
//! feeds against operation signatures, single assignment, and that every
//! declared output is produced.

mod check;
mod diagnostic;
mod resolve;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use check::check_types;
pub use diagnostic::{has_errors, Code, Diagnostic, Severity};
pub use resolve::resolve;

use crate::catalog::{Documents, OperationSig};
use crate::lang::{Pos, Scalar, WorkflowSpec};
use crate::types::{BaseType, Ty};

/// An operation signature with every type resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub name: String,
    pub inputs: Vec<(String, Ty)>,
    pub output: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortBinding {
    pub service: String,
    pub port: String,
    pub endpoint: String,
    pub operations: Vec<OperationSig>,
}

/// One distinct `port.Operation` used by the workflow. Each becomes a single
/// invocation node, however many statements mention it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvocationInfo {
    pub port: String,
    pub operation: String,
    pub endpoint: String,
    pub signature: Signature,
    pub pos: Pos,
}

/// A resolved reference to an invocation, optionally naming one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvRef {
    pub id: usize,
    pub param: Option<usize>,
}

/// Per-statement bindings, parallel to `spec.statements`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotation {
    pub source: Option<InvRef>,
    pub targets: Vec<InvRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefKind {
    Input,
    Retrieve { statement: usize },
    Assign { statement: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefSite {
    pub kind: DefKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedWorkflow {
    pub spec: WorkflowSpec,
    pub ports: BTreeMap<String, PortBinding>,
    pub invocations: Vec<InvocationInfo>,
    pub annotations: Vec<Annotation>,
    pub var_types: BTreeMap<String, Ty>,
    pub definitions: BTreeMap<String, Vec<DefSite>>,
    pub inputs: Vec<(String, Ty)>,
    pub outputs: Vec<(String, Ty)>,
}

/// Where the value flowing into a parameter comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSource {
    Var(String),
    Scalar(Scalar),
    Invocation(usize),
}

/// One parameter binding: `source` (or element `slot` of it, when it is a
/// tuple) feeds parameter `param` of invocation `inv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Feed {
    pub source: ValueSource,
    pub slot: Option<usize>,
    pub inv: usize,
    pub param: usize,
    pub statement: usize,
    pub pos: Pos,
}

pub fn scalar_type(s: &Scalar) -> Ty {
    Ty::Base(match s {
        Scalar::Int(v) if i32::try_from(*v).is_ok() => BaseType::Int,
        Scalar::Int(_) => BaseType::Long,
        Scalar::Double(_) => BaseType::Double,
        Scalar::Bool(_) => BaseType::Boolean,
        Scalar::Str(_) => BaseType::String,
    })
}

impl ResolvedWorkflow {
    pub fn invocation(&self, id: usize) -> &InvocationInfo {
        &self.invocations[id]
    }

    pub fn source_type(&self, source: &ValueSource) -> Ty {
        match source {
            ValueSource::Var(v) => self.var_types.get(v).cloned().unwrap_or(Ty::ANY),
            ValueSource::Scalar(s) => scalar_type(s),
            ValueSource::Invocation(id) => self.invocations[*id].signature.output.clone(),
        }
    }
}

/// Result of a successful analysis: the resolved workflow plus warnings.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub resolved: ResolvedWorkflow,
    pub warnings: Vec<Diagnostic>,
}

/// Resolve and type-check in one step. Errors are fatal; warnings are kept.
pub fn analyze(spec: &WorkflowSpec, docs: &Documents) -> Result<Analysis, Vec<Diagnostic>> {
    let resolved = resolve(spec, &docs.catalogs, &docs.schemas)?;
    let diags = check_types(&resolved);
    if has_errors(&diags) {
        return Err(diags);
    }
    Ok(Analysis {
        resolved,
        warnings: diags,
    })
}
