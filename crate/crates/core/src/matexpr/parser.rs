//! Recursive-descent parser for the scalar expression language.
//!
//! Precedence, loosest first:
//!
//! | level | operators            | associativity |
//! |-------|----------------------|---------------|
//! | 1     | `+` `-` (binary)     | left          |
//! | 2     | `*` `/`              | left          |
//! | 3     | `-` (unary)          | prefix        |
//! | 4     | `^`                  | right         |
//! | 5     | literals, `t`, `i`, `pi`, calls, `( )` | - |
//!
//! So `-t^2` is `-(t^2)` and `2^-1` is `2^(-1)`.

use std::collections::BTreeMap;

use super::expr::{BinOp, Func, Node, ScalarExpr};
use super::ParseError;

/// Named real constants that may appear in expressions (preset parameters).
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(tok) = lx.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next_token(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok(None);
        };
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += c.len_utf8();
            return Ok(Some((tok, start)));
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(start).map(Some);
        }
        if c.is_alphabetic() || c == '_' {
            while let Some(c) = self.peek_char() {
                if c.is_alphanumeric() || c == '_' {
                    self.pos += c.len_utf8();
                } else {
                    break;
                }
            }
            let name = self.src[start..self.pos].to_string();
            return Ok(Some((Tok::Ident(name), start)));
        }
        Err(ParseError::Syntax {
            pos: start,
            msg: format!("unexpected character '{c}'"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: format!("malformed number '{text}'"),
        })?;
        self.pos = end;
        Ok((Tok::Num(value), start))
    }
}

struct Parser<'p> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end: usize,
    params: &'p Params,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.idx + k).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.idx += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn additive(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.idx += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            // A bare literal folds into a negative constant unless it is a power base.
            if let Some(Tok::Num(v)) = self.peek() {
                let v = *v;
                if self.peek_at(1) != Some(&Tok::Caret) {
                    self.idx += 1;
                    return Ok(Node::Const(-v));
                }
            }
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.idx += 1;
            let exp = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::LParen) => {
                let inner = self.additive()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => self.identifier(name, pos),
            Some(tok) => Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected token {tok:?}"),
            }),
            None => Err(ParseError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Node, ParseError> {
        if let Some(func) = Func::from_name(&name) {
            self.expect(Tok::LParen, "'(' after function name")?;
            let arg = self.additive()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        if name == "max" || name == "min" {
            self.expect(Tok::LParen, "'(' after function name")?;
            let a = self.additive()?;
            self.expect(Tok::Comma, "',' between arguments")?;
            let b = self.additive()?;
            self.expect(Tok::RParen, "')'")?;
            let op = if name == "max" { BinOp::Max } else { BinOp::Min };
            return Ok(Node::Binary(op, Box::new(a), Box::new(b)));
        }
        match name.as_str() {
            "t" => Ok(Node::Time),
            "i" => Ok(Node::Imag),
            "pi" => Ok(Node::Pi),
            _ => match self.params.get(&name) {
                Some(v) => Ok(Node::Const(*v)),
                None => Err(ParseError::UnknownIdentifier { name, pos }),
            },
        }
    }
}

/// Parse an expression in which only `t`, `i`, `pi` and the built-in
/// functions are defined.
pub fn parse_scalar_expr(src: &str) -> Result<ScalarExpr, ParseError> {
    parse_scalar_expr_with(src, &Params::new())
}

/// Parse an expression with additional named constants. Parameters are
/// substituted by value at parse time.
pub fn parse_scalar_expr_with(src: &str, params: &Params) -> Result<ScalarExpr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = Lexer::tokens(src)?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: src.len(),
        params,
    };
    let node = p.additive()?;
    if p.idx < p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(ScalarExpr::from_node(node))
}
