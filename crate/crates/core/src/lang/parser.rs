//! Recursive descent parser. One procedure per grammar production.

use std::collections::HashSet;
use std::fmt;

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use crate::types::{BaseType, TypeExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Unexpected {
        expected: Vec<String>,
        found: String,
    },
    DuplicateName {
        kind: &'static str,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn expected(&self) -> &[String] {
        match &self.kind {
            ParseErrorKind::Unexpected { expected, .. } => expected,
            ParseErrorKind::DuplicateName { .. } => &[],
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Unexpected { expected, found } => {
                write!(
                    f,
                    "{}: expected {}, found {}",
                    self.pos,
                    expected.join(" or "),
                    found
                )
            }
            ParseErrorKind::DuplicateName { kind, name } => {
                write!(f, "{}: {kind} `{name}` is defined more than once", self.pos)
            }
        }
    }
}

type PResult<T> = Result<T, ParseError>;

struct Parser<'t> {
    tokens: &'t [Token],
    at: usize,
}

fn is_base_type(k: Keyword) -> Option<BaseType> {
    BaseType::from_keyword(k.as_str())
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.at.min(self.tokens.len() - 1)]
    }

    fn peek_nth(&self, n: usize) -> &'t Token {
        &self.tokens[(self.at + n).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn pos(&self) -> Pos {
        let t = self.peek();
        Pos::new(t.line, t.column)
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        let found = match t.kind {
            TokenKind::Eof | TokenKind::Newline => t.kind.describe(),
            _ => format!("{} `{}`", t.kind.describe(), t.lexeme),
        };
        Err(ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Unexpected {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found,
            },
        })
    }

    fn skip_newlines(&mut self) {
        while self.peek().kind == TokenKind::Newline {
            self.advance();
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<&'t Token> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            self.error(&[what])
        }
    }

    fn keyword(&mut self, k: Keyword) -> PResult<()> {
        if self.peek().kind == TokenKind::Keyword(k) {
            self.advance();
            Ok(())
        } else {
            self.error(&[&format!("`{}`", k.as_str())])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        Ok(self.expect(TokenKind::Ident, what)?.lexeme.clone())
    }

    /// Operation and parameter names come from catalogs, so keywords are
    /// accepted there too.
    fn member_name(&mut self, what: &str) -> PResult<String> {
        match self.peek().kind {
            TokenKind::Ident | TokenKind::Keyword(_) => Ok(self.advance().lexeme.clone()),
            _ => self.error(&[what]),
        }
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        match self.peek().kind {
            TokenKind::Newline => {
                self.advance();
                Ok(())
            }
            TokenKind::Eof => Ok(()),
            _ => self.error(&["end of line"]),
        }
    }

    // <specification> ::= <services>* <schema>* <interface> <dataflow>
    fn specification(&mut self) -> PResult<WorkflowSpec> {
        let mut spec = WorkflowSpec::default();
        let mut seen: [HashSet<String>; 4] = Default::default();
        self.skip_newlines();
        loop {
            let pos = self.pos();
            let (slot, kind, name) = match self.peek().kind {
                TokenKind::Keyword(Keyword::Description) => {
                    let d = self.description()?;
                    let name = d.name.clone();
                    spec.descriptions.push(d);
                    (0, "description", name)
                }
                TokenKind::Keyword(Keyword::Service) => {
                    let d = self.service()?;
                    let name = d.name.clone();
                    spec.services.push(d);
                    (1, "service", name)
                }
                TokenKind::Keyword(Keyword::Port) => {
                    let d = self.port()?;
                    let name = d.name.clone();
                    spec.ports.push(d);
                    (2, "port", name)
                }
                TokenKind::Keyword(Keyword::Schema) => {
                    let d = self.schema()?;
                    let name = d.name.clone();
                    spec.schemas.push(d);
                    (3, "schema", name)
                }
                _ => break,
            };
            if !seen[slot].insert(name.clone()) {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::DuplicateName { kind, name },
                });
            }
            self.skip_newlines();
        }
        spec.interface = self.interface()?;
        self.skip_newlines();
        while self.peek().kind != TokenKind::Eof {
            spec.statements.push(self.statement()?);
            self.skip_newlines();
        }
        Ok(spec)
    }

    // <description> ::= description <name> is <URL>
    fn description(&mut self) -> PResult<DescriptionDef> {
        let pos = self.pos();
        self.keyword(Keyword::Description)?;
        let name = self.ident("description name")?;
        self.keyword(Keyword::Is)?;
        let ref_pos = self.pos();
        let url = self.expect(TokenKind::Url, "URL")?.lexeme.clone();
        self.end_of_statement()?;
        Ok(DescriptionDef {
            name,
            url,
            pos,
            ref_pos,
        })
    }

    // <service> ::= service <name> is <description-name> . <service-name>
    fn service(&mut self) -> PResult<ServiceDef> {
        let pos = self.pos();
        self.keyword(Keyword::Service)?;
        let name = self.ident("service name")?;
        self.keyword(Keyword::Is)?;
        let ref_pos = self.pos();
        let description = self.ident("description name")?;
        self.expect(TokenKind::Dot, "`.`")?;
        let service = self.member_name("service name")?;
        self.end_of_statement()?;
        Ok(ServiceDef {
            name,
            description,
            service,
            pos,
            ref_pos,
        })
    }

    // <port> ::= port <name> is <service-name> . <port-name>
    fn port(&mut self) -> PResult<PortDef> {
        let pos = self.pos();
        self.keyword(Keyword::Port)?;
        let name = self.ident("port name")?;
        self.keyword(Keyword::Is)?;
        let ref_pos = self.pos();
        let service = self.ident("service name")?;
        self.expect(TokenKind::Dot, "`.`")?;
        let port = self.member_name("port name")?;
        self.end_of_statement()?;
        Ok(PortDef {
            name,
            service,
            port,
            pos,
            ref_pos,
        })
    }

    // <schema> ::= schema <name> is <URL>
    fn schema(&mut self) -> PResult<SchemaDef> {
        let pos = self.pos();
        self.keyword(Keyword::Schema)?;
        let name = self.ident("schema name")?;
        self.keyword(Keyword::Is)?;
        let ref_pos = self.pos();
        let url = self.expect(TokenKind::Url, "URL")?.lexeme.clone();
        self.end_of_statement()?;
        Ok(SchemaDef {
            name,
            url,
            pos,
            ref_pos,
        })
    }

    // <interface> ::= <input> <output>
    fn interface(&mut self) -> PResult<Interface> {
        self.keyword(Keyword::Input)?;
        self.expect(TokenKind::Colon, "`:`")?;
        let inputs = self.variables()?;
        self.keyword(Keyword::Output)?;
        self.expect(TokenKind::Colon, "`:`")?;
        let outputs = self.variables()?;
        for (list, kind) in [(&inputs, "input"), (&outputs, "output")] {
            let mut seen = HashSet::new();
            if let Some(v) = list.iter().find(|v| !seen.insert(v.name.as_str())) {
                return Err(ParseError {
                    pos: v.pos,
                    kind: ParseErrorKind::DuplicateName {
                        kind,
                        name: v.name.clone(),
                    },
                });
            }
        }
        Ok(Interface { inputs, outputs })
    }

    fn at_type(&self) -> bool {
        match self.peek().kind {
            TokenKind::Keyword(k) => is_base_type(k).is_some(),
            TokenKind::Ident => self.peek_nth(1).kind == TokenKind::Colon,
            _ => false,
        }
    }

    // Zero or more `<type> <name> [, <name>]*` lines.
    fn variables(&mut self) -> PResult<Vec<TypedVar>> {
        let mut vars = Vec::new();
        self.skip_newlines();
        while self.at_type() {
            let ty_pos = self.pos();
            let ty = self.type_expr()?;
            loop {
                let pos = self.pos();
                let name = self.ident("variable name")?;
                vars.push(TypedVar {
                    ty: ty.clone(),
                    name,
                    pos,
                    ty_pos,
                });
                if self.peek().kind == TokenKind::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
            self.end_of_statement()?;
            self.skip_newlines();
        }
        Ok(vars)
    }

    // <type> ::= <base-type> | <schema> : <type-name>
    fn type_expr(&mut self) -> PResult<TypeExpr> {
        match self.peek().kind {
            TokenKind::Keyword(k) if is_base_type(k).is_some() => {
                self.advance();
                Ok(TypeExpr::Base(is_base_type(k).expect("checked")))
            }
            TokenKind::Ident => {
                let schema = self.ident("schema name")?;
                self.expect(TokenKind::Colon, "`:`")?;
                let name = self.member_name("type name")?;
                Ok(TypeExpr::Complex { schema, name })
            }
            _ => self.error(&["type"]),
        }
    }

    // <invocation> ::= <port-name> . <operation-name> [. <parameter>]
    fn invocation(&mut self) -> PResult<Invocation> {
        let pos = self.pos();
        let port = self.ident("invocation")?;
        self.expect(TokenKind::Dot, "`.`")?;
        let operation = self.member_name("operation name")?;
        let parameter = if self.peek().kind == TokenKind::Dot {
            self.advance();
            Some(self.member_name("parameter name")?)
        } else {
            None
        };
        Ok(Invocation {
            port,
            operation,
            parameter,
            pos,
        })
    }

    fn invocation_list(&mut self) -> PResult<Vec<Invocation>> {
        if self.peek().kind != TokenKind::Ident {
            return self.error(&["invocation"]);
        }
        let mut list = vec![self.invocation()?];
        while self.peek().kind == TokenKind::Comma {
            self.advance();
            list.push(self.invocation()?);
        }
        Ok(list)
    }

    fn scalar(&mut self) -> PResult<Scalar> {
        match &self.peek().kind {
            TokenKind::Literal(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error(&["scalar"]),
        }
    }

    // <dataflow>
    fn statement(&mut self) -> PResult<Statement> {
        let pos = self.pos();
        let kind = match &self.peek().kind {
            TokenKind::Literal(_) => {
                let value = self.scalar()?;
                self.expect(TokenKind::Arrow, "`->`")?;
                let targets = self.invocation_list()?;
                StatementKind::FeedScalar { value, targets }
            }
            TokenKind::Ident => match self.peek_nth(1).kind {
                TokenKind::Equals => self.assignment()?,
                TokenKind::Arrow => {
                    let var = self.ident("variable")?;
                    self.advance();
                    let targets = self.invocation_list()?;
                    StatementKind::FeedVariable { var, targets }
                }
                TokenKind::Dot => {
                    let source = self.invocation()?;
                    if self.peek().kind == TokenKind::Arrow {
                        self.advance();
                        if self.peek().kind != TokenKind::Ident {
                            return self.error(&["variable", "invocation"]);
                        }
                        if self.peek_nth(1).kind == TokenKind::Dot {
                            let targets = self.invocation_list()?;
                            StatementKind::Compose { source, targets }
                        } else {
                            let var = self.ident("variable")?;
                            StatementKind::Retrieve { source, var }
                        }
                    } else {
                        StatementKind::Invoke(source)
                    }
                }
                _ => {
                    self.advance();
                    return self.error(&["`->`", "`=`", "`.`"]);
                }
            },
            _ => return self.error(&["variable", "invocation", "scalar"]),
        };
        self.end_of_statement()?;
        Ok(Statement { kind, pos })
    }

    // <assignment>
    fn assignment(&mut self) -> PResult<StatementKind> {
        let var = self.ident("variable")?;
        self.expect(TokenKind::Equals, "`=`")?;
        let value = match &self.peek().kind {
            TokenKind::Literal(_) => AssignValue::Scalar(self.scalar()?),
            TokenKind::Ident => AssignValue::Variable(self.ident("variable")?),
            TokenKind::LParen => {
                self.advance();
                let mut items = vec![self.tuple_item()?];
                while self.peek().kind == TokenKind::Comma {
                    self.advance();
                    items.push(self.tuple_item()?);
                }
                self.expect(TokenKind::RParen, "`)`")?;
                AssignValue::Tuple(items)
            }
            _ => return self.error(&["scalar", "variable", "`(`"]),
        };
        Ok(StatementKind::Assign { var, value })
    }

    fn tuple_item(&mut self) -> PResult<TupleItem> {
        match &self.peek().kind {
            TokenKind::Literal(_) => Ok(TupleItem::Scalar(self.scalar()?)),
            TokenKind::Ident => Ok(TupleItem::Variable(self.ident("variable")?)),
            _ => self.error(&["variable", "scalar"]),
        }
    }
}

/// Parse a token stream produced by [`super::tokenize`].
pub fn parse(tokens: &[Token]) -> Result<WorkflowSpec, ParseError> {
    assert!(
        matches!(
            tokens.last(),
            Some(Token {
                kind: TokenKind::Eof,
                ..
            })
        ),
        "token stream must end with eof"
    );
    Parser { tokens, at: 0 }.specification()
}
