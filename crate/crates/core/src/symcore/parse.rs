//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | identifier | func '(' expr ')' | '(' expr ')' | '-' base
//! number := integer ('/' integer)?
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::expr::Expr;
use super::poly::Func;
use super::symbol::SymbolTable;
use super::SymError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
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

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, SymError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let digits = &text[start..i];
                out.push(Token { tok: Tok::Int(digits.parse().expect("ascii digits")), offset: start });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(text[start..i].to_string()), offset: start });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(SymError::Syntax { offset: start, message: format!("unexpected character `{ch}`") });
            }
        };
        out.push(Token { tok, offset: start });
        i += 1;
    }
    out.push(Token { tok: Tok::End, offset: text.len() });
    Ok(out)
}

/// Identifiers in `text` that are not function names, with their offsets.
/// Used to report every unresolved name at once.
pub fn identifiers(text: &str) -> Result<Vec<(String, usize)>, SymError> {
    let toks = lex(text)?;
    let mut out = Vec::new();
    for (k, t) in toks.iter().enumerate() {
        if let Tok::Ident(name) = &t.tok {
            let is_call = Func::from_name(name).is_some()
                && matches!(toks.get(k + 1).map(|t| &t.tok), Some(Tok::LParen));
            if !is_call {
                out.push((name.clone(), t.offset));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    table: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        self.toks.get(self.pos + k).map(|t| &t.tok).unwrap_or(&Tok::End)
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: &str) -> Result<T, SymError> {
        Err(SymError::Syntax { offset: self.offset(), message: message.to_string() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SymError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, SymError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    terms.push(Expr::neg(t));
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, SymError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    factors.push(self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    let den = self.factor()?;
                    let num = Expr::mul(core::mem::take(&mut factors));
                    factors.push(Expr::div(num, den));
                }
                _ => break,
            }
        }
        Ok(Expr::mul(factors))
    }

    fn factor(&mut self) -> Result<Expr, SymError> {
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let off = self.offset();
            match self.bump().tok {
                Tok::Int(n) => {
                    let e: i32 = i32::try_from(n).map_err(|_| SymError::Syntax {
                        offset: off,
                        message: "exponent out of range".to_string(),
                    })?;
                    return Ok(Expr::pow(base, e));
                }
                _ => {
                    return Err(SymError::Syntax { offset: off, message: "expected integer exponent".to_string() });
                }
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, SymError> {
        let off = self.offset();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if *self.peek() == Tok::Slash {
                    if let Tok::Int(d) = self.peek_at(1).clone() {
                        self.bump();
                        let doff = self.offset();
                        self.bump();
                        if d == BigInt::from(0) {
                            return Err(SymError::Syntax { offset: doff, message: "zero denominator".to_string() });
                        }
                        return Ok(Expr::num(BigRational::new(n, d)));
                    }
                }
                Ok(Expr::num(BigRational::from_integer(n)))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() == Tok::LParen {
                        self.bump();
                        let arg = self.expr()?;
                        self.expect(Tok::RParen, "`)`")?;
                        return Ok(Expr::func(f, arg));
                    }
                }
                match self.table.lookup(&name) {
                    Some(s) => Ok(Expr::sym(s)),
                    None => Err(SymError::UnknownIdentifier { name, offset: off }),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Minus => {
                self.bump();
                let b = self.base()?;
                Ok(Expr::neg(b))
            }
            Tok::End => self.error("unexpected end of input"),
            _ => self.error("expected a number, identifier, function or `(`"),
        }
    }
}

/// Parses `text`, resolving identifiers in `table`.
pub fn parse_expr(text: &str, table: &SymbolTable) -> Result<Expr, SymError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, table };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::expr::Node;

    fn frw() -> SymbolTable {
        SymbolTable::for_model(&["N", "a"], &["Lambda"]).unwrap()
    }

    #[test]
    fn quotient_over_product() {
        let t = frw();
        let e = parse_expr("-3*a*da^2/N", &t).unwrap();
        let Node::Div(num, den) = e.node() else { panic!("expected quotient, got {e:?}") };
        assert!(matches!(num.node(), Node::Mul(fs) if fs.len() == 3));
        assert_eq!(*den, Expr::sym(t.lookup("N").unwrap()));
    }

    #[test]
    fn incomplete_input_reports_offset() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        assert_eq!(
            parse_expr("dx +", &t),
            Err(SymError::Syntax { offset: 4, message: "unexpected end of input".to_string() })
        );
        assert!(matches!(parse_expr("x y", &t), Err(SymError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr("x $", &t), Err(SymError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr("(x", &t), Err(SymError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_identifier_named() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        assert_eq!(
            parse_expr("x + z", &t),
            Err(SymError::UnknownIdentifier { name: "z".to_string(), offset: 4 })
        );
    }

    #[test]
    fn number_token_includes_fraction() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let e = parse_expr("1/2*(dx^2+x^2)", &t).unwrap();
        let Node::Mul(fs) = e.node() else { panic!() };
        assert_eq!(fs[0], Expr::num(BigRational::new(1.into(), 2.into())));
        // unary minus binds to the base, before `^`
        let sq = parse_expr("-x^2", &t).unwrap();
        assert!(matches!(sq.node(), Node::Pow(..)));
    }

    #[test]
    fn function_calls_and_identifier_scan() {
        let t = SymbolTable::for_model(&["x"], &["m"]).unwrap();
        let e = parse_expr("-m*sqrt(1 - dx^2)", &t).unwrap();
        assert!(e.subexpressions().iter().any(|s| matches!(s.node(), Node::Func(Func::Sqrt, _))));
        let ids = identifiers("sqrt(z) + sin + w").unwrap();
        assert_eq!(ids, vec![("z".to_string(), 5), ("sin".to_string(), 10), ("w".to_string(), 16)]);
    }
}
