//! Workflow source language: lexer, parser, AST and canonical printer.
//!
//! Two extensions over the bare grammar are accepted: `->` may feed a
//! comma-separated list of invocations, and `#` starts a line comment.

pub mod ast;
mod lexer;
mod parser;
mod render;

pub use ast::*;
pub use lexer::{tokenize, Keyword, LexError, Token, TokenKind};
pub use parser::{parse, ParseError, ParseErrorKind};
pub use render::{render, render_statement};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("{0}")]
    Lex(#[from] LexError),
    #[error("{0}")]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn pos(&self) -> Pos {
        match self {
            SyntaxError::Lex(e) => Pos::new(e.line, e.column),
            SyntaxError::Parse(e) => e.pos,
        }
    }
}

/// Tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<WorkflowSpec, SyntaxError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BaseType, TypeExpr};

    const HEADER: &str = "input:\n  int a\noutput:\n  any x, y, z\n";

    fn stmt(src: &str) -> StatementKind {
        let spec = parse_source(&format!("{HEADER}{src}\n")).unwrap();
        spec.statements.into_iter().next().unwrap().kind
    }

    fn inv(port: &str, op: &str) -> Invocation {
        Invocation {
            port: port.into(),
            operation: op.into(),
            parameter: None,
            pos: Pos::default(),
        }
    }

    fn strip(k: StatementKind) -> StatementKind {
        let spec = WorkflowSpec {
            statements: vec![Statement {
                kind: k,
                pos: Pos::default(),
            }],
            ..Default::default()
        };
        spec.without_positions().statements.remove(0).kind
    }

    #[test]
    fn tuple_assignment() {
        assert_eq!(
            stmt("y = (b, c, d)"),
            StatementKind::Assign {
                var: "y".into(),
                value: AssignValue::Tuple(vec![
                    TupleItem::Variable("b".into()),
                    TupleItem::Variable("c".into()),
                    TupleItem::Variable("d".into()),
                ]),
            }
        );
    }

    #[test]
    fn feed_variable_to_list() {
        assert_eq!(
            strip(stmt("x -> p3.Op3, p4.Op4, p5.Op5")),
            StatementKind::FeedVariable {
                var: "x".into(),
                targets: vec![inv("p3", "Op3"), inv("p4", "Op4"), inv("p5", "Op5")],
            }
        );
    }

    #[test]
    fn routing_to_named_parameter() {
        let mut target = inv("p6", "Op6");
        target.parameter = Some("a".into());
        assert_eq!(
            strip(stmt("p3.Op3 -> p6.Op6.a")),
            StatementKind::Compose {
                source: inv("p3", "Op3"),
                targets: vec![target]
            }
        );
    }

    #[test]
    fn bare_invocation_and_scalar_feed() {
        assert_eq!(
            strip(stmt("p1.Op1")),
            StatementKind::Invoke(inv("p1", "Op1"))
        );
        assert_eq!(
            strip(stmt("5 -> p1.Op1")),
            StatementKind::FeedScalar {
                value: Scalar::Int(5),
                targets: vec![inv("p1", "Op1")]
            }
        );
    }

    #[test]
    fn truncated_statement_fails_at_eof() {
        let err = parse_source(&format!("{HEADER}p1.Op1 ->")).unwrap_err();
        let SyntaxError::Parse(e) = err else {
            panic!("expected parse error")
        };
        assert_eq!(e.pos, Pos::new(5, 10));
        assert_eq!(e.expected(), ["variable", "invocation"]);
        assert!(e.to_string().contains("end of input"));
    }

    #[test]
    fn duplicate_port_is_rejected() {
        let src = "port p1 is s1.Port1\nport p1 is s1.Port2\ninput:\noutput:\n";
        let SyntaxError::Parse(e) = parse_source(src).unwrap_err() else {
            panic!()
        };
        assert_eq!(e.pos, Pos::new(2, 1));
        assert!(matches!(
            e.kind,
            ParseErrorKind::DuplicateName { kind: "port", .. }
        ));
    }

    #[test]
    fn complex_typed_input() {
        let spec = parse_source(
            "schema schm is http://h/types.xsd\ninput:\n  schm:newType x\noutput:\n  any z\n",
        )
        .unwrap();
        assert_eq!(spec.schemas[0].url, "http://h/types.xsd");
        assert_eq!(
            spec.interface.inputs[0].ty,
            TypeExpr::Complex {
                schema: "schm".into(),
                name: "newType".into()
            }
        );
        assert_eq!(spec.interface.outputs[0].ty, TypeExpr::Base(BaseType::Any));
    }

    #[test]
    fn interface_only_renders_to_interface_block() {
        let spec = parse_source("input:\n int a\noutput:\n any z").unwrap();
        assert_eq!(render(&spec), "input:\n  int a\noutput:\n  any z\n");
    }

    #[test]
    fn render_tuple() {
        let k = stmt("y = (b, c, d)");
        assert_eq!(render_statement(&k), "y = (b, c, d)");
    }

    #[test]
    fn scalar_rendering_round_trips() {
        for s in [
            "0.1",
            "2.0",
            "-3.25",
            "0.000001",
            "123456789.5",
            "\"q\\\"x\\\\\"",
        ] {
            let src = format!("{HEADER}v = {s}\n");
            let spec = parse_source(&src).unwrap();
            let again = parse_source(&render(&spec)).unwrap();
            assert_eq!(spec.without_positions(), again.without_positions(), "{s}");
        }
    }
}
