use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::TypeExpr;

/// A 1-based source position.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Pos {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A scalar literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scalar {
    Int(i64),
    Double(f64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Double(v) => {
                if v.is_finite() && v.fract() == 0.0 {
                    write!(f, "{v:.1}")
                } else {
                    write!(f, "{v}")
                }
            }
            Scalar::Bool(v) => write!(f, "{v}"),
            Scalar::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionDef {
    pub name: String,
    pub url: String,
    pub pos: Pos,
    /// Position of the referenced URL or `a.B` name.
    #[serde(default)]
    pub ref_pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceDef {
    pub name: String,
    pub description: String,
    pub service: String,
    pub pos: Pos,
    /// Position of the referenced URL or `a.B` name.
    #[serde(default)]
    pub ref_pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortDef {
    pub name: String,
    pub service: String,
    pub port: String,
    pub pos: Pos,
    /// Position of the referenced URL or `a.B` name.
    #[serde(default)]
    pub ref_pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDef {
    pub name: String,
    pub url: String,
    pub pos: Pos,
    /// Position of the referenced URL or `a.B` name.
    #[serde(default)]
    pub ref_pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedVar {
    pub ty: TypeExpr,
    pub name: String,
    pub pos: Pos,
    /// Position of the type token.
    #[serde(default)]
    pub ty_pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub inputs: Vec<TypedVar>,
    pub outputs: Vec<TypedVar>,
}

/// `port.Operation` with an optional `.parameter` suffix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Invocation {
    pub port: String,
    pub operation: String,
    pub parameter: Option<String>,
    pub pos: Pos,
}

impl fmt::Display for Invocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.port, self.operation)?;
        if let Some(p) = &self.parameter {
            write!(f, ".{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TupleItem {
    Variable(String),
    Scalar(Scalar),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AssignValue {
    Scalar(Scalar),
    Variable(String),
    Tuple(Vec<TupleItem>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StatementKind {
    /// `p.Op` on its own line: an invocation that takes no input here.
    Invoke(Invocation),
    /// `5 -> p.Op, q.Op`
    FeedScalar {
        value: Scalar,
        targets: Vec<Invocation>,
    },
    /// `x -> p.Op, q.Op`
    FeedVariable {
        var: String,
        targets: Vec<Invocation>,
    },
    /// `p.Op -> q.Op, r.Op.a`: an invocation's output passed straight on.
    Compose {
        source: Invocation,
        targets: Vec<Invocation>,
    },
    /// `p.Op -> x`
    Retrieve { source: Invocation, var: String },
    /// `x = ...`
    Assign { var: String, value: AssignValue },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub kind: StatementKind,
    pub pos: Pos,
}

/// A parsed workflow specification.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkflowSpec {
    pub descriptions: Vec<DescriptionDef>,
    pub services: Vec<ServiceDef>,
    pub ports: Vec<PortDef>,
    pub schemas: Vec<SchemaDef>,
    pub interface: Interface,
    pub statements: Vec<Statement>,
}

impl WorkflowSpec {
    /// Copy with every source position zeroed, for structural comparison.
    pub fn without_positions(&self) -> WorkflowSpec {
        let z = Pos::default();
        let mut s = self.clone();
        s.descriptions
            .iter_mut()
            .for_each(|d| (d.pos, d.ref_pos) = (z, z));
        s.services
            .iter_mut()
            .for_each(|d| (d.pos, d.ref_pos) = (z, z));
        s.ports.iter_mut().for_each(|d| (d.pos, d.ref_pos) = (z, z));
        s.schemas
            .iter_mut()
            .for_each(|d| (d.pos, d.ref_pos) = (z, z));
        s.interface
            .inputs
            .iter_mut()
            .for_each(|v| (v.pos, v.ty_pos) = (z, z));
        s.interface
            .outputs
            .iter_mut()
            .for_each(|v| (v.pos, v.ty_pos) = (z, z));
        for st in &mut s.statements {
            st.pos = z;
            let clear = |inv: &mut Invocation| inv.pos = z;
            match &mut st.kind {
                StatementKind::Invoke(inv) => clear(inv),
                StatementKind::FeedScalar { targets, .. }
                | StatementKind::FeedVariable { targets, .. } => targets.iter_mut().for_each(clear),
                StatementKind::Compose { source, targets } => {
                    clear(source);
                    targets.iter_mut().for_each(clear);
                }
                StatementKind::Retrieve { source, .. } => clear(source),
                StatementKind::Assign { .. } => {}
            }
        }
        s
    }
}
