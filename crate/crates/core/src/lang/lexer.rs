//! Tokenizer for workflow source text.
//!
//! Statements are line-oriented, so newlines are real tokens. `#` starts a
//! comment running to the end of the line. The text after `is` in a
//! `description` or `schema` line is taken verbatim as a URL.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Description,
    Service,
    Port,
    Schema,
    Is,
    Input,
    Output,
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

impl Keyword {
    pub const ALL: [Keyword; 17] = [
        Keyword::Description,
        Keyword::Service,
        Keyword::Port,
        Keyword::Schema,
        Keyword::Is,
        Keyword::Input,
        Keyword::Output,
        Keyword::Any,
        Keyword::Int,
        Keyword::Double,
        Keyword::Float,
        Keyword::Decimal,
        Keyword::Byte,
        Keyword::Boolean,
        Keyword::String,
        Keyword::Long,
        Keyword::Short,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Description => "description",
            Keyword::Service => "service",
            Keyword::Port => "port",
            Keyword::Schema => "schema",
            Keyword::Is => "is",
            Keyword::Input => "input",
            Keyword::Output => "output",
            Keyword::Any => "any",
            Keyword::Int => "int",
            Keyword::Double => "double",
            Keyword::Float => "float",
            Keyword::Decimal => "decimal",
            Keyword::Byte => "byte",
            Keyword::Boolean => "boolean",
            Keyword::String => "string",
            Keyword::Long => "long",
            Keyword::Short => "short",
        }
    }

    pub fn from_word(w: &str) -> Option<Keyword> {
        Keyword::ALL.into_iter().find(|k| k.as_str() == w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Literal(Scalar),
    Url,
    Arrow,
    Dot,
    Comma,
    Colon,
    Equals,
    LParen,
    RParen,
    Newline,
    Eof,
}

impl TokenKind {
    /// Human-readable name used in parse diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => format!("keyword `{}`", k.as_str()),
            TokenKind::Ident => "identifier".into(),
            TokenKind::Literal(_) => "scalar".into(),
            TokenKind::Url => "URL".into(),
            TokenKind::Arrow => "`->`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct LexError {
    pub line: u32,
    pub column: u32,
    pub found: char,
    pub reason: &'static str,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {} `{}`",
            self.line,
            self.column,
            self.reason,
            self.found.escape_default()
        )
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len())
    }

    fn push(&mut self, kind: TokenKind, lexeme: impl Into<String>, line: u32, column: u32) {
        self.tokens.push(Token {
            kind,
            lexeme: lexeme.into(),
            line,
            column,
        });
    }

    fn err(&self, line: u32, column: u32, found: char, reason: &'static str) -> LexError {
        LexError {
            line,
            column,
            found,
            reason,
        }
    }

    /// True when the tokens on the current line are `description|schema <name> is`.
    fn at_url_position(&self) -> bool {
        let line_toks = &self.tokens[self.line_start..];
        matches!(
            line_toks,
            [
                Token {
                    kind: TokenKind::Keyword(Keyword::Description | Keyword::Schema),
                    ..
                },
                Token {
                    kind: TokenKind::Ident,
                    ..
                },
                Token {
                    kind: TokenKind::Keyword(Keyword::Is),
                    ..
                },
            ]
        )
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        loop {
            if self.at_url_position() {
                self.url();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            match c {
                '\n' => {
                    self.bump();
                    self.push(TokenKind::Newline, "\n", line, col);
                    self.line_start = self.tokens.len();
                }
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                '-' => {
                    self.bump();
                    match self.peek() {
                        Some('>') => {
                            self.bump();
                            self.push(TokenKind::Arrow, "->", line, col);
                        }
                        Some(d) if d.is_ascii_digit() => self.number(line, col, true)?,
                        _ => return Err(self.err(line, col, '-', "unexpected character")),
                    }
                }
                '.' => self.single(TokenKind::Dot, line, col),
                ',' => self.single(TokenKind::Comma, line, col),
                ':' => self.single(TokenKind::Colon, line, col),
                '=' => self.single(TokenKind::Equals, line, col),
                '(' => self.single(TokenKind::LParen, line, col),
                ')' => self.single(TokenKind::RParen, line, col),
                '"' => self.string(line, col)?,
                c if c.is_ascii_digit() => self.number(line, col, false)?,
                c if c.is_ascii_alphabetic() => self.word(line, col),
                other => return Err(self.err(line, col, other, "unexpected character")),
            }
        }
        let (line, col) = (self.line, self.col);
        self.push(TokenKind::Eof, "", line, col);
        Ok(self.tokens)
    }

    fn single(&mut self, kind: TokenKind, line: u32, col: u32) {
        let c = self.bump().expect("peeked");
        self.push(kind, c.to_string(), line, col);
    }

    fn url(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let start = self.offset();
        while !matches!(self.peek(), None | Some('\n')) {
            self.bump();
        }
        let end = self.offset();
        let text = self.src[start..end].trim();
        if !text.is_empty() {
            self.push(TokenKind::Url, text, line, col);
        }
    }

    fn word(&mut self, line: u32, col: u32) {
        let start = self.offset();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let end = self.offset();
        let w = &self.src[start..end];
        let kind = match w {
            "true" => TokenKind::Literal(Scalar::Bool(true)),
            "false" => TokenKind::Literal(Scalar::Bool(false)),
            _ => match Keyword::from_word(w) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident,
            },
        };
        self.push(kind, w, line, col);
    }

    fn number(&mut self, line: u32, col: u32, negative: bool) -> Result<(), LexError> {
        let mut text = String::new();
        if negative {
            text.push('-');
        }
        while let Some(d) = self.peek().filter(char::is_ascii_digit) {
            text.push(d);
            self.bump();
        }
        let mut is_float = false;
        if self.peek() == Some('.') {
            // `1.` followed by a digit is a float; anything else is left for
            // the parser to reject.
            let mut ahead = self.chars.clone();
            ahead.next();
            if matches!(ahead.peek(), Some(&(_, d)) if d.is_ascii_digit()) {
                is_float = true;
                text.push('.');
                self.bump();
                while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                    text.push(d);
                    self.bump();
                }
            }
        }
        if let Some(c) = self.peek().filter(|c| c.is_ascii_alphabetic() || *c == '_') {
            let (l, cc) = (self.line, self.col);
            return Err(self.err(l, cc, c, "malformed number near"));
        }
        let value = if is_float {
            Scalar::Double(text.parse().expect("digits"))
        } else {
            match text.parse::<i64>() {
                Ok(v) => Scalar::Int(v),
                Err(_) => {
                    return Err(self.err(
                        line,
                        col,
                        text.chars().next().unwrap_or('0'),
                        "integer literal out of range at",
                    ))
                }
            }
        };
        self.push(TokenKind::Literal(value), text, line, col);
        Ok(())
    }

    fn string(&mut self, line: u32, col: u32) -> Result<(), LexError> {
        let start = self.offset();
        self.bump();
        let mut value = String::new();
        loop {
            let (l, c) = (self.line, self.col);
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.err(line, col, '"', "unterminated string starting with"))
                }
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some(other) => return Err(self.err(l, c + 1, other, "unknown escape")),
                    None => {
                        return Err(self.err(line, col, '"', "unterminated string starting with"))
                    }
                },
                Some(ch) => value.push(ch),
            }
        }
        let end = self.offset();
        let lexeme = self.src[start..end].to_string();
        self.push(TokenKind::Literal(Scalar::Str(value)), lexeme, line, col);
        Ok(())
    }
}

/// Split `source` into tokens. The result always ends with an `Eof` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer {
        chars: source.char_indices().peekable(),
        src: source,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        line_start: 0,
    }
    .run()
}
