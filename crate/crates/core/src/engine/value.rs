use std::fmt;

use bytes::Bytes;
use serde::{Deserialize, Serialize};

use crate::lang::{tokenize, Scalar, TokenKind};
use crate::types::{BaseType, Ty};

/// A runtime value. Blobs are opaque payloads typed `any`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Int(i32),
    Long(i64),
    Short(i16),
    Byte(i8),
    Float(f32),
    Double(f64),
    Decimal(String),
    Boolean(bool),
    String(String),
    Record(Vec<(String, Value)>),
    Tuple(Vec<Value>),
    Blob(#[serde(with = "b64")] Bytes),
}

mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use bytes::Bytes;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &Bytes, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Bytes, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD
            .decode(s)
            .map(Bytes::from)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read `{text}` as {ty}: {reason}")]
pub struct ValueParseError {
    pub text: String,
    pub ty: Ty,
    pub reason: String,
}

impl Value {
    pub fn from_scalar(s: &Scalar) -> Value {
        match s {
            Scalar::Int(v) => match i32::try_from(*v) {
                Ok(i) => Value::Int(i),
                Err(_) => Value::Long(*v),
            },
            Scalar::Double(v) => Value::Double(*v),
            Scalar::Bool(v) => Value::Boolean(*v),
            Scalar::Str(v) => Value::String(v.clone()),
        }
    }

    pub fn blob(bytes: impl Into<Bytes>) -> Value {
        Value::Blob(bytes.into())
    }

    /// Payload size in bytes, used for traffic accounting.
    pub fn byte_size(&self) -> u64 {
        match self {
            Value::Int(_) | Value::Float(_) => 4,
            Value::Long(_) | Value::Double(_) => 8,
            Value::Short(_) => 2,
            Value::Byte(_) | Value::Boolean(_) => 1,
            Value::Decimal(s) | Value::String(s) => s.len() as u64,
            Value::Record(fields) => fields.iter().map(|(_, v)| v.byte_size()).sum(),
            Value::Tuple(items) => items.iter().map(Value::byte_size).sum(),
            Value::Blob(b) => b.len() as u64,
        }
    }

    /// The most specific static type describing this value. Records have no
    /// name at runtime and are reported as `any`.
    pub fn runtime_type(&self) -> Ty {
        let b = match self {
            Value::Int(_) => BaseType::Int,
            Value::Long(_) => BaseType::Long,
            Value::Short(_) => BaseType::Short,
            Value::Byte(_) => BaseType::Byte,
            Value::Float(_) => BaseType::Float,
            Value::Double(_) => BaseType::Double,
            Value::Decimal(_) => BaseType::Decimal,
            Value::Boolean(_) => BaseType::Boolean,
            Value::String(_) => BaseType::String,
            Value::Tuple(items) => {
                return Ty::Tuple(items.iter().map(Value::runtime_type).collect())
            }
            Value::Record(_) | Value::Blob(_) => BaseType::Any,
        };
        Ty::Base(b)
    }

    /// Whether the value may travel on an edge of static type `ty`.
    pub fn conforms_to(&self, ty: &Ty) -> bool {
        match (self, ty) {
            (_, t) if t.is_any() => true,
            (Value::Record(_), Ty::Complex { .. }) => true,
            (Value::Tuple(items), Ty::Tuple(tys)) => {
                items.len() == tys.len() && items.iter().zip(tys).all(|(v, t)| v.conforms_to(t))
            }
            (v, Ty::Base(_)) => &v.runtime_type() == ty,
            _ => false,
        }
    }

    /// Parse command-line text for a value of type `ty`, using the literal
    /// syntax of workflow source. A `string` accepts unquoted text as is.
    pub fn parse_typed(text: &str, ty: &Ty) -> Result<Value, ValueParseError> {
        let fail = |reason: &str| ValueParseError {
            text: text.to_string(),
            ty: ty.clone(),
            reason: reason.into(),
        };
        let literal = || -> Option<Scalar> {
            let tokens = tokenize(text.trim()).ok()?;
            match tokens.as_slice() {
                [t, eof] if matches!(eof.kind, TokenKind::Eof) => match &t.kind {
                    TokenKind::Literal(s) => Some(s.clone()),
                    _ => None,
                },
                _ => None,
            }
        };
        let Ty::Base(b) = ty else {
            return Err(fail(
                "only base-typed inputs can be given on the command line",
            ));
        };
        let lit = literal();
        let int = |lit: &Option<Scalar>| match lit {
            Some(Scalar::Int(v)) => Some(*v),
            _ => None,
        };
        let range = || fail("out of range");
        Ok(match b {
            BaseType::Any => match &lit {
                Some(s) => Value::from_scalar(s),
                None => return Err(fail("not a literal")),
            },
            BaseType::String => match lit {
                Some(Scalar::Str(s)) if text.trim_start().starts_with('"') => Value::String(s),
                _ => Value::String(text.to_string()),
            },
            BaseType::Int => Value::Int(
                int(&lit)
                    .ok_or_else(|| fail("not an integer"))?
                    .try_into()
                    .map_err(|_| range())?,
            ),
            BaseType::Long => Value::Long(int(&lit).ok_or_else(|| fail("not an integer"))?),
            BaseType::Short => Value::Short(
                int(&lit)
                    .ok_or_else(|| fail("not an integer"))?
                    .try_into()
                    .map_err(|_| range())?,
            ),
            BaseType::Byte => Value::Byte(
                int(&lit)
                    .ok_or_else(|| fail("not an integer"))?
                    .try_into()
                    .map_err(|_| range())?,
            ),
            BaseType::Float | BaseType::Double | BaseType::Decimal => {
                let v = match &lit {
                    Some(Scalar::Double(d)) => *d,
                    Some(Scalar::Int(i)) => *i as f64,
                    _ => return Err(fail("not a number")),
                };
                match b {
                    BaseType::Float => Value::Float(v as f32),
                    BaseType::Double => Value::Double(v),
                    _ => Value::Decimal(text.trim().to_string()),
                }
            }
            BaseType::Boolean => match lit {
                Some(Scalar::Bool(v)) => Value::Boolean(v),
                _ => return Err(fail("expected true or false")),
            },
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Long(v) => write!(f, "{v}"),
            Value::Short(v) => write!(f, "{v}"),
            Value::Byte(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Double(v) => write!(f, "{v}"),
            Value::Decimal(v) => f.write_str(v),
            Value::Boolean(v) => write!(f, "{v}"),
            Value::String(v) => write!(f, "{v:?}"),
            Value::Record(fields) => {
                f.write_str("{")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    v.fmt(f)?;
                }
                f.write_str(")")
            }
            Value::Blob(b) => write!(f, "<blob {} B>", b.len()),
        }
    }
}
