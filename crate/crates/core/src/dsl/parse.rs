use std::fmt;

use thiserror::Error;

use super::ast::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("exponent must be a constant expression")]
    NonConstantExponent,
    #[error("missing 'dim' declaration")]
    MissingDimension,
    #[error("missing 'coords' declaration")]
    MissingCoords,
    #[error("g[{0}][{1}] assigned twice")]
    DuplicateEntry(usize, usize),
    #[error("entry g[{i}][{j}] out of range: indices are 1-based, at most {dim}, with i <= j")]
    IndexOutOfRange { i: usize, j: usize, dim: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Parse failure with its location: byte offset within the parsed text and,
/// for documents, the 1-based line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub line: Option<usize>,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, offset: usize) -> Self {
        ParseError {
            kind,
            offset,
            line: None,
        }
    }

    pub(crate) fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, byte {}: {}", self.offset, self.kind),
            None => write!(f, "byte {}: {}", self.offset, self.kind),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos < bytes.len() && bytes[self.pos] == b'.' {
                self.pos += 1;
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
            let text = &self.src[start..self.pos];
            return text
                .parse::<f64>()
                .map(|v| (Tok::Num(v), start))
                .map_err(|_| {
                    ParseError::new(
                        ParseErrorKind::Syntax(format!("malformed number '{text}'")),
                        start,
                    )
                });
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::new(
            ParseErrorKind::Syntax(format!("unexpected character '{ch}'")),
            start,
        ))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(
            ParseErrorKind::Syntax(msg.into()),
            self.offset(),
        ))
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected '{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::unary(UnaryOp::Neg, e),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        // right associative: the exponent may itself contain '^'
        let exponent = self.unary()?;
        if exponent.max_coord().is_some() {
            return Err(ParseError::new(ParseErrorKind::NonConstantExponent, at));
        }
        let value = exponent
            .eval::<f64>(&[])
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ParseError::new(ParseErrorKind::NonConstantExponent, at))?;
        Ok(Expr::binary(BinaryOp::Pow, base, Expr::Const(value)))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(op) = UnaryOp::from_name(&name) {
                    if *self.peek() != Tok::Op('(') {
                        return self.syntax(format!("function '{name}' needs parentheses"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::unary(op, arg));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr::Coord(i));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                Err(ParseError::new(ParseErrorKind::UnknownIdentifier(name), at))
            }
            Tok::End => Err(ParseError::new(
                ParseErrorKind::Syntax("unexpected end of expression".into()),
                at,
            )),
            Tok::Op(c) => Err(ParseError::new(
                ParseErrorKind::Syntax(format!("unexpected '{c}'")),
                at,
            )),
        }
    }
}

/// Parses an expression over the named coordinates.
///
/// Precedence from tightest: `^` (right associative), unary minus, `* /`,
/// `+ -`. Functions: `sin cos exp ln sqrt`; the constant `pi` is predefined.
pub fn parse_expression(text: &str, coord_names: &[String]) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        coords: coord_names,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}
