//! Recursive-descent parser.
//!
//! Precedence, tightest first: `^` (integer exponent), unary `-`, `* /`, `+ -`.
//! Binary operators are left-associative, and so is a chain of powers.

use std::sync::Arc;

use super::{ExprError, Node};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
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

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character `{}`", self.src[start..].chars().next().unwrap()),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let from = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - from
        };
        let mut integral = true;
        let mut n = digits(&mut self.pos);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            integral = false;
            self.pos += 1;
            n += digits(&mut self.pos);
        }
        if n == 0 {
            return Err(ExprError::Syntax { offset: start, message: "malformed number".into() });
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            integral = false;
            let mut look = self.pos + 1;
            if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                look += 1;
            }
            if digits(&mut look) == 0 {
                return Err(ExprError::Syntax { offset: self.pos, message: "malformed exponent".into() });
            }
            self.pos = look;
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| ExprError::Syntax { offset: start, message: format!("malformed number `{text}`") })?;
        Ok((Tok::Num(value, integral), start))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: &'a [String],
}

const FUNCTIONS: [&str; 3] = ["sin", "cos", "exp"];

pub(super) fn parse(source: &str, vars: &[String]) -> Result<Arc<Node>, ExprError> {
    let toks = Lexer::tokens(source)?;
    let mut p = Parser { toks, at: 0, vars };
    let node = p.expr()?;
    match p.peek() {
        Tok::End => Ok(node),
        _ => Err(p.error("unexpected trailing input")),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax { offset: self.offset(), message: message.to_string() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Arc::new(Node::Add(lhs, self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Arc::new(Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Arc::new(Node::Mul(lhs, self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Arc::new(Node::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>, ExprError> {
        if *self.peek() != Tok::Minus {
            return self.power();
        }
        self.bump();
        // a bare negative literal becomes one constant, so printed negatives round-trip
        if let Tok::Num(v, _) = *self.peek() {
            if *self.peek_at(1) != Tok::Caret {
                self.bump();
                return Ok(Arc::new(Node::Const(-v)));
            }
        }
        Ok(Arc::new(Node::Neg(self.unary()?)))
    }

    fn power(&mut self) -> Result<Arc<Node>, ExprError> {
        let mut base = self.primary()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let negative = if *self.peek() == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let n = match *self.peek() {
                Tok::Num(v, true) if v <= i32::MAX as f64 => v as i32,
                _ => return Err(self.error("exponent must be an integer literal")),
            };
            self.bump();
            base = Arc::new(Node::Pow(base, if negative { -n } else { n }));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Arc<Node>, ExprError> {
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Arc::new(Node::Const(v)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    self.bump();
                    return Ok(Arc::new(Node::Pi));
                }
                if FUNCTIONS.contains(&name.as_str()) {
                    self.bump();
                    self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Arc::new(match name.as_str() {
                        "sin" => Node::Sin(arg),
                        "cos" => Node::Cos(arg),
                        _ => Node::Exp(arg),
                    }));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => {
                        self.bump();
                        Ok(Arc::new(Node::Var(i)))
                    }
                    None => Err(ExprError::UnknownIdentifier(name)),
                }
            }
            Tok::End => Err(self.error("unexpected end of input")),
            _ => Err(self.error("expected a number, name or `(`")),
        }
    }
}
