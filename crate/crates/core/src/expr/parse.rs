//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! sum     := ['-'] term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ['^' ['-' | '+'] INTEGER]
//! primary := INTEGER | VARIABLE | FUNC '(' sum ')' | '(' sum ')'
//! FUNC    := 'sin' | 'cos' | 'exp'
//! VARIABLE:= 'x' INTEGER        (1 <= index <= dimension)
//! ```
//!
//! `a - b` parses as `Sum[a, Neg(b)]`, and `p/q` with two integer literals
//! is folded into a single rational constant.

use num_bigint::BigInt;
use num_traits::Signed;

use super::{Expr, ExprError, Primitive, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let token = match c {
            '+' => Token::Plus,
            '-' => Token::Minus,
            '*' => Token::Star,
            '/' => Token::Slash,
            '^' => Token::Caret,
            '(' => Token::LParen,
            ')' => Token::RParen,
            d if d.is_ascii_digit() => {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    return Err(ExprError::Syntax {
                        position: i,
                        message: "floating-point literals are not accepted; use p/q".into(),
                    });
                }
                let digits: String = chars[start..i].iter().collect();
                out.push((start, Token::Int(digits.parse().expect("ascii digits"))));
                continue;
            }
            a if a.is_ascii_alphabetic() => {
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((start, Token::Ident(chars[start..i].iter().collect())));
                continue;
            }
            other => {
                return Err(ExprError::Syntax { position: start, message: format!("unexpected character `{other}`") })
            }
        };
        out.push((start, token));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    dimension: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error(&self, message: &str) -> ExprError {
        let message =
            if self.pos >= self.tokens.len() { format!("{message} at end of input") } else { message.to_string() };
        ExprError::Syntax { position: self.position(), message }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut terms = Vec::new();
        let first = if self.eat(&Token::Minus) { Expr::Neg(Box::new(self.term()?)) } else { self.term()? };
        terms.push(first);
        loop {
            if self.eat(&Token::Plus) {
                terms.push(self.term()?);
            } else if self.eat(&Token::Minus) {
                terms.push(Expr::Neg(Box::new(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(&Token::Star) {
                factors.push(self.unary()?);
            } else if self.eat(&Token::Slash) {
                let at = self.position();
                let denominator = self.unary()?;
                let numerator = if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::Product(std::mem::take(&mut factors))
                };
                factors = vec![divide(numerator, denominator, at)?];
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Product(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(&Token::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(&Token::Caret) {
            return Ok(base);
        }
        let negative = if self.eat(&Token::Minus) {
            true
        } else {
            self.eat(&Token::Plus);
            false
        };
        match self.peek().cloned() {
            Some(Token::Int(n)) => {
                let value: i64 = i64::try_from(&n).map_err(|_| self.error("exponent too large"))?;
                self.pos += 1;
                Ok(Expr::Pow(Box::new(base), if negative { -value } else { value }))
            }
            _ => Err(self.error("expected integer exponent")),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.position();
        match self.peek().cloned() {
            Some(Token::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Const(Rational::from_integer(n)))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(&Token::RParen) {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                let primitive = match name.as_str() {
                    "sin" => Some(Primitive::Sin),
                    "cos" => Some(Primitive::Cos),
                    "exp" => Some(Primitive::Exp),
                    _ => None,
                };
                if let Some(p) = primitive {
                    if !self.eat(&Token::LParen) {
                        return Err(self.error("expected `(` after function name"));
                    }
                    let arg = self.sum()?;
                    if !self.eat(&Token::RParen) {
                        return Err(self.error("expected `)`"));
                    }
                    return Ok(Expr::Apply(p, Box::new(arg)));
                }
                let index = name
                    .strip_prefix('x')
                    .filter(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
                    .and_then(|rest| rest.parse::<usize>().ok())
                    .filter(|&i| i >= 1)
                    .ok_or(ExprError::UnknownVariable { name: name.clone(), position: at })?;
                if index > self.dimension {
                    return Err(ExprError::VariableOutOfRange { index, dimension: self.dimension });
                }
                Ok(Expr::Var(index))
            }
            _ => Err(self.error("expected operand")),
        }
    }
}

fn divide(numerator: Expr, denominator: Expr, at: usize) -> Result<Expr, ExprError> {
    if denominator.is_zero_literal() {
        return Err(ExprError::Syntax { position: at, message: "division by literal zero".into() });
    }
    if let (Expr::Const(n), Expr::Const(d)) = (&numerator, &denominator) {
        if n.is_integer() && d.is_integer() && !n.is_negative() {
            return Ok(Expr::Const(n / d));
        }
    }
    Ok(Expr::Quotient(Box::new(numerator), Box::new(denominator)))
}

/// Parses `text` as an expression over `x1..x{dimension}`.
pub fn parse(text: &str, dimension: usize) -> Result<Expr, ExprError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, end: text.chars().count(), dimension };
    if parser.tokens.is_empty() {
        return Err(parser.error("empty expression"));
    }
    let e = parser.sum()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(e)
}
