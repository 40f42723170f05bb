//! Type expressions shared by the language, the catalog and the analyzer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The base types of the language, plus the `any` wildcard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseType {
    Any,
    Int,
    Double,
    Float,
    Decimal,
    Byte,
    Boolean,
    String,
    Long,
    Short,
}

impl BaseType {
    pub const ALL: [BaseType; 10] = [
        BaseType::Any,
        BaseType::Int,
        BaseType::Double,
        BaseType::Float,
        BaseType::Decimal,
        BaseType::Byte,
        BaseType::Boolean,
        BaseType::String,
        BaseType::Long,
        BaseType::Short,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            BaseType::Any => "any",
            BaseType::Int => "int",
            BaseType::Double => "double",
            BaseType::Float => "float",
            BaseType::Decimal => "decimal",
            BaseType::Byte => "byte",
            BaseType::Boolean => "boolean",
            BaseType::String => "string",
            BaseType::Long => "long",
            BaseType::Short => "short",
        }
    }

    pub fn from_keyword(s: &str) -> Option<BaseType> {
        BaseType::ALL.into_iter().find(|t| t.keyword() == s)
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A type as written in source text or in a catalog document.
///
/// In workflow source the `schema` of a complex type names a `schema`
/// identifier; in catalog documents it names the schema document id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Base(BaseType),
    Complex { schema: String, name: String },
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Base(b) => b.fmt(f),
            TypeExpr::Complex { schema, name } => write!(f, "{schema}:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid type string `{0}`")]
pub struct TypeParseError(pub String);

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for TypeExpr {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(b) = BaseType::from_keyword(s) {
            return Ok(TypeExpr::Base(b));
        }
        match s.split_once(':') {
            Some((schema, name)) if is_name(schema) && is_name(name) => Ok(TypeExpr::Complex {
                schema: schema.to_string(),
                name: name.to_string(),
            }),
            _ => Err(TypeParseError(s.to_string())),
        }
    }
}

impl Serialize for TypeExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TypeExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fully resolved static type. Complex types are identified by schema
/// document id and type name; tuples arise from tuple assignments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ty {
    Base(BaseType),
    Complex { schema: String, name: String },
    Tuple(Vec<Ty>),
}

impl Ty {
    pub const ANY: Ty = Ty::Base(BaseType::Any);

    pub fn is_any(&self) -> bool {
        matches!(self, Ty::Base(BaseType::Any))
    }

    /// Static compatibility. `any` matches everything in both directions,
    /// base types match only themselves, complex types match by name.
    pub fn compatible(&self, other: &Ty) -> bool {
        if self.is_any() || other.is_any() {
            return true;
        }
        match (self, other) {
            (Ty::Base(a), Ty::Base(b)) => a == b,
            (
                Ty::Complex {
                    schema: sa,
                    name: na,
                },
                Ty::Complex {
                    schema: sb,
                    name: nb,
                },
            ) => sa == sb && na == nb,
            (Ty::Tuple(a), Ty::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(y))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Base(b) => b.fmt(f),
            Ty::Complex { schema, name } => write!(f, "{schema}:{name}"),
            Ty::Tuple(items) => {
                f.write_str("(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    t.fmt(f)?;
                }
                f.write_str(")")
            }
        }
    }
}
