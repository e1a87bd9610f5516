//! Recursive-descent parser.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' args ')' | '(' expr ')'
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{BinOp, Expr, ExprError, Func, Var};

pub const FUNCTION_NAMES: [&str; 7] = ["sin", "cos", "exp", "ln", "sqrt", "abs", "pow"];

/// Parses an expression. Any identifier that is not `x`, `u`, `pi` or a
/// function name is accepted as a parameter.
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    Parser::new(source, None).run()
}

/// Parses an expression, rejecting parameters outside `allowed`.
pub fn parse_with(source: &str, allowed: &[&str]) -> Result<Expr, ExprError> {
    Parser::new(source, Some(allowed)).run()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: "a numeric literal".into(),
                found: format!("`{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    expected: "an operand or operator".into(),
                    found: format!("`{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    allowed: Option<&'a [&'a str]>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, allowed: Option<&'a [&'a str]>) -> Self {
        Parser {
            src,
            toks: Vec::new(),
            pos: 0,
            allowed,
        }
    }

    fn run(mut self) -> Result<Expr, ExprError> {
        self.toks = tokenize(self.src)?;
        let e = self.expr()?;
        match self.peek() {
            Tok::End => Ok(e),
            _ => Err(self.unexpected("an operator or end of input")),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        if matches!(self.peek(), Tok::Op(_) | Tok::RParen | Tok::Comma | Tok::End) {
            return Err(self.unexpected("a number, name or `(`"));
        }
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    return self.call(&name, offset);
                }
                self.name(name, offset)
            }
            _ => unreachable!("filtered above"),
        }
    }

    fn name(&self, name: String, offset: usize) -> Result<Expr, ExprError> {
        if let Some(v) = Var::from_name(&name) {
            return Ok(Expr::Var(v));
        }
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if FUNCTION_NAMES.contains(&name.as_str()) {
            return Err(ExprError::Syntax {
                offset: offset + name.len(),
                expected: format!("`(` after function `{name}`"),
                found: self.peek().describe(),
            });
        }
        if let Some(allowed) = self.allowed {
            if !allowed.contains(&name.as_str()) {
                let mut names: Vec<&str> = ["x", "u", "pi"].to_vec();
                names.extend_from_slice(allowed);
                return Err(ExprError::UnknownIdentifier {
                    name,
                    offset,
                    allowed: names.join(", "),
                });
            }
        }
        Ok(Expr::Param(name))
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Expr, ExprError> {
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            "pow" => None,
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    name: name.into(),
                    offset,
                    allowed: FUNCTION_NAMES.join(", "),
                })
            }
        };
        let first = self.expr()?;
        let e = match func {
            Some(f) => Expr::Call(f, Box::new(first)),
            None => {
                self.expect(Tok::Comma, "`,` in pow(base, exponent)")?;
                let second = self.expr()?;
                Expr::Bin(BinOp::Pow, Box::new(first), Box::new(second))
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_literal() {
        assert_eq!(parse("0").unwrap(), Expr::Num(0.0));
    }

    #[test]
    fn syntax_error_reports_offset() {
        match parse("x + * 2") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse("(x + 1") {
            Err(ExprError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 6);
                assert_eq!(expected, "`)`");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x $ 1"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x 1"), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_identifiers_list_allowed_names() {
        match parse_with("x + beta", &["eps", "alpha"]) {
            Err(ExprError::UnknownIdentifier { name, offset, allowed }) => {
                assert_eq!(name, "beta");
                assert_eq!(offset, 4);
                assert!(allowed.contains("alpha"));
            }
            other => panic!("{other:?}"),
        }
        match parse("tan(x)") {
            Err(ExprError::UnknownIdentifier { allowed, .. }) => assert!(allowed.contains("sin")),
            other => panic!("{other:?}"),
        }
        assert!(parse_with("eps * x", &["eps"]).is_ok());
    }

    #[test]
    fn function_without_call_is_an_error() {
        assert!(matches!(parse("sin + 1"), Err(ExprError::Syntax { .. })));
    }
}
