use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{Pos, SyntaxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes. The serialized form is the variant name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Code {
    LexError,
    ParseError,
    DuplicateName,
    UnresolvedDocument,
    UnknownDescription,
    UnknownService,
    UnknownPort,
    UnknownOperation,
    UnknownParameter,
    UnknownSchema,
    UnknownType,
    UndefinedVariable,
    InvalidSource,
    TypeMismatch,
    ArityMismatch,
    DoubleAssignment,
    UnboundOutput,
    UnboundParameter,
    DuplicateFeed,
    CycleError,
    UnusedValue,
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub pos: Pos,
    pub message: String,
}

#[derive(Serialize)]
struct JsonLine<'a> {
    severity: Severity,
    code: Code,
    line: u32,
    col: u32,
    msg: &'a str,
}

impl Diagnostic {
    pub fn error(code: Code, pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code,
            pos,
            message: message.into(),
        }
    }

    pub fn warning(code: Code, pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Warning,
            code,
            pos,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `{"severity":…,"code":…,"line":…,"col":…,"msg":…}`
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&JsonLine {
            severity: self.severity,
            code: self.code,
            line: self.pos.line,
            col: self.pos.col,
            msg: &self.message,
        })
        .expect("diagnostic serializes")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}[{}]: {}", self.pos, self.code, self.message)
    }
}

impl From<&SyntaxError> for Diagnostic {
    fn from(e: &SyntaxError) -> Diagnostic {
        let code = match e {
            SyntaxError::Lex(_) => Code::LexError,
            SyntaxError::Parse(p) => match p.kind {
                crate::lang::ParseErrorKind::DuplicateName { .. } => Code::DuplicateName,
                crate::lang::ParseErrorKind::Unexpected { .. } => Code::ParseError,
            },
        };
        Diagnostic::error(code, e.pos(), e.to_string())
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_shape() {
        let d = Diagnostic::error(Code::UnknownPort, Pos::new(3, 7), "unknown port `p9`");
        let v: serde_json::Value = serde_json::from_str(&d.to_json_line()).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"severity":"error","code":"UnknownPort","line":3,"col":7,"msg":"unknown port `p9`"})
        );
    }
}
