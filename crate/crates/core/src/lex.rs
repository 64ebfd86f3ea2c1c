//! Tokenizer shared by the two formula parsers.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// A syntax error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(usize),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Geq,
    Gt,
    At,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Geq => f.write_str("`>=`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::At => f.write_str("`@`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l, column: k });
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                    s.push(d);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            push(&mut out, Tok::Ident(s));
            continue;
        }
        if c.is_ascii_digit() {
            let mut n: usize = 0;
            while let Some(&d) = chars.peek() {
                if let Some(v) = d.to_digit(10) {
                    n = n.saturating_mul(10).saturating_add(v as usize);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            push(&mut out, Tok::Number(n));
            continue;
        }
        chars.next();
        col += 1;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '@' => Tok::At,
            '>' => {
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    Tok::Geq
                } else {
                    Tok::Gt
                }
            }
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                col += 1;
                Tok::Arrow
            }
            other => {
                return Err(ParseError {
                    line: l,
                    column: k,
                    message: alloc::format!("unexpected character `{other}`"),
                })
            }
        };
        push(&mut out, tok);
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

/// Cursor over a token stream.
pub(crate) struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Cursor { toks: tokenize(text)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(alloc::format!("expected {tok}, found {}", self.peek())))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(alloc::format!("expected `{kw}`, found {}", self.peek())))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.error(alloc::format!("expected identifier, found {other}"))),
        }
    }

    pub fn number(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.next();
                Ok(n)
            }
            other => Err(self.error(alloc::format!("expected a number, found {other}"))),
        }
    }

    pub fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => Err(self.error(alloc::format!("unexpected {other} after formula"))),
        }
    }

    pub fn error(&self, message: String) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, column: t.column, message }
    }
}
