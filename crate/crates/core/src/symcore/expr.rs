//! Immutable expression trees and their printed form.
//!
//! Printing always produces text the parser reads back to the same value.
//! Two quirks of the grammar drive the parenthesization rules: `-` in a base
//! binds tighter than `^` (so `-x^2` means `(-x)^2`), and `a/b` with two
//! integer literals is a single number token.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::poly::{Atom, Func, Monomial, Poly};
use super::ratfun::RatFun;
use super::symbol::Symbol;
use super::SymError;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Node {
    Num(BigRational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Div(Expr, Expr),
    Func(Func, Expr),
}

/// Shared, structurally immutable expression.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn from_node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: BigRational) -> Self {
        Self::from_node(Node::Num(q))
    }

    pub fn int(n: i64) -> Self {
        Self::num(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn sym(s: &Symbol) -> Self {
        Self::from_node(Node::Sym(s.clone()))
    }

    pub fn add(terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Self::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Self::from_node(Node::Add(terms)),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Self::int(1),
            1 => factors.into_iter().next().unwrap(),
            _ => Self::from_node(Node::Mul(factors)),
        }
    }

    pub fn pow(base: Expr, e: i32) -> Self {
        Self::from_node(Node::Pow(base, e))
    }

    pub fn div(num: Expr, den: Expr) -> Self {
        Self::from_node(Node::Div(num, den))
    }

    pub fn func(f: Func, arg: Expr) -> Self {
        Self::from_node(Node::Func(f, arg))
    }

    /// Negation as a literal or a product with `-1`.
    pub fn neg(e: Expr) -> Self {
        match e.node() {
            Node::Num(q) => Self::num(-q.clone()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(q) => {
                    let mut fs = fs.clone();
                    fs[0] = Self::num(-q.clone());
                    if fs[0].is_one() {
                        fs.remove(0);
                    }
                    Self::mul(fs)
                }
                _ => Self::mul(vec![Self::int(-1), e.clone()]),
            },
            _ => Self::mul(vec![Self::int(-1), e]),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Self::add(vec![a, Self::neg(b)])
    }

    fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_one())
    }

    /// Converts to the rational-function normal form.
    pub fn to_ratfun(&self) -> Result<RatFun, SymError> {
        Ok(match self.node() {
            Node::Num(q) => RatFun::constant(q.clone()),
            Node::Sym(s) => RatFun::symbol(s),
            Node::Add(ts) => {
                let mut acc = RatFun::zero();
                for t in ts {
                    acc = acc.add(&t.to_ratfun()?);
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = RatFun::one();
                for f in fs {
                    acc = acc.mul(&f.to_ratfun()?);
                }
                acc
            }
            Node::Pow(b, e) => b.to_ratfun()?.powi(*e)?,
            Node::Div(n, d) => n.to_ratfun()?.div(&d.to_ratfun()?)?,
            Node::Func(f, a) => RatFun::func(*f, a.to_ratfun()?),
        })
    }

    /// All subtrees in pre-order, including `self`.
    pub fn subexpressions(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        self.walk(&mut |e| out.push(e.clone()));
        out
    }

    fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        visit(self);
        match self.node() {
            Node::Num(_) | Node::Sym(_) => {}
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.walk(visit)),
            Node::Pow(b, _) => b.walk(visit),
            Node::Div(n, d) => {
                n.walk(visit);
                d.walk(visit);
            }
            Node::Func(_, a) => a.walk(visit),
        }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Node::Sym(s) = e.node() {
                out.insert(s.clone());
            }
        });
        out
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.symbols().contains(s)
    }

    pub fn has_velocity(&self) -> bool {
        self.symbols().iter().any(Symbol::is_velocity)
    }

    /// Numeric value; `NaN`/`inf` propagate as in IEEE arithmetic.
    pub fn eval_f64<F>(&self, env: &F) -> f64
    where
        F: Fn(&Symbol) -> f64,
    {
        match self.node() {
            Node::Num(q) => super::poly::rational_to_f64(q),
            Node::Sym(s) => env(s),
            Node::Add(ts) => ts.iter().map(|t| t.eval_f64(env)).sum(),
            Node::Mul(fs) => fs.iter().map(|f| f.eval_f64(env)).product(),
            Node::Pow(b, e) => super::poly::powi(b.eval_f64(env), *e),
            Node::Div(n, d) => n.eval_f64(env) / d.eval_f64(env),
            Node::Func(f, a) => f.apply_f64(a.eval_f64(env)),
        }
    }

    /// Printing precedence: 1 sum, 2 product/quotient, 3 negated literal
    /// or product, 4 power, 5 atom.
    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Add(_) => 1,
            Node::Mul(_) | Node::Div(..) => 2,
            Node::Num(q) if q.is_negative() => 3,
            Node::Num(q) if !q.is_integer() => 2,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn is_negative_product(&self) -> bool {
        match self.node() {
            Node::Mul(fs) => matches!(fs[0].node(), Node::Num(q) if q.is_negative()),
            Node::Num(q) => q.is_negative(),
            _ => false,
        }
    }

    fn write_wrapped(&self, out: &mut String, min: u8) {
        if self.precedence() < min {
            out.push('(');
            self.write(out);
            out.push(')');
        } else {
            self.write(out);
        }
    }

    fn write(&self, out: &mut String) {
        match self.node() {
            Node::Num(q) => write_rational(out, q),
            Node::Sym(s) => out.push_str(s.name()),
            Node::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 && t.is_negative_product() {
                        out.push_str(" - ");
                        Expr::neg(t.clone()).write_wrapped(out, 2);
                    } else {
                        if i > 0 {
                            out.push_str(" + ");
                        }
                        t.write_wrapped(out, 2);
                    }
                }
            }
            Node::Mul(fs) => {
                let mut rest = &fs[..];
                if let Node::Num(q) = fs[0].node() {
                    if *q == -BigRational::one() && fs.len() > 1 {
                        out.push('-');
                        // `-x^2` would read as `(-x)^2`.
                        fs[1].write_wrapped(out, 5);
                        rest = &fs[2..];
                        for f in rest {
                            out.push('*');
                            f.write_wrapped(out, 3);
                        }
                        return;
                    }
                    fs[0].write(out);
                    rest = &fs[1..];
                    for f in rest {
                        out.push('*');
                        f.write_wrapped(out, 3);
                    }
                    return;
                }
                for (i, f) in rest.iter().enumerate() {
                    if i > 0 {
                        out.push('*');
                        f.write_wrapped(out, 3);
                    } else {
                        f.write_wrapped(out, 2);
                    }
                }
            }
            Node::Pow(b, e) => {
                if *e < 0 {
                    out.push_str("1/");
                    Expr::pow(b.clone(), -e).write_wrapped(out, 5);
                } else {
                    b.write_wrapped(out, 5);
                    out.push('^');
                    out.push_str(&e.to_string());
                }
            }
            Node::Div(n, d) => {
                let mut left = String::new();
                n.write_wrapped(&mut left, 2);
                let den_is_literal = matches!(d.node(), Node::Num(_));
                if den_is_literal && left.ends_with(|c: char| c.is_ascii_digit()) {
                    out.push('(');
                    out.push_str(&left);
                    out.push(')');
                } else {
                    out.push_str(&left);
                }
                out.push('/');
                d.write_wrapped(out, 4);
            }
            Node::Func(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out);
                out.push(')');
            }
        }
    }
}

fn write_rational(out: &mut String, q: &BigRational) {
    use core::fmt::Write;
    if q.is_integer() {
        let _ = write!(out, "{}", q.numer());
    } else {
        let _ = write!(out, "{}/{}", q.numer(), q.denom());
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s);
        f.write_str(&s)
    }
}

impl From<&RatFun> for Expr {
    fn from(r: &RatFun) -> Self {
        let num = poly_expr(r.numer());
        if r.denom().is_one() {
            num
        } else {
            Expr::div(num, poly_expr(r.denom()))
        }
    }
}

impl From<RatFun> for Expr {
    fn from(r: RatFun) -> Self {
        Expr::from(&r)
    }
}

impl From<&Symbol> for Expr {
    fn from(s: &Symbol) -> Self {
        Expr::sym(s)
    }
}

/// Terms in descending monomial order.
fn poly_expr(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let terms: Vec<Expr> = p.terms().rev().map(|(m, c)| term_expr(m, c)).collect();
    Expr::add(terms)
}

fn term_expr(m: &Monomial, c: &BigRational) -> Expr {
    let mut factors = Vec::with_capacity(m.factors().len() + 1);
    if !c.is_one() || m.is_one() {
        factors.push(Expr::num(c.clone()));
    }
    for (a, e) in m.factors() {
        let base = match a {
            Atom::Sym(s) => Expr::sym(s),
            Atom::Func(f, arg) => Expr::func(*f, Expr::from(arg.as_ref())),
        };
        factors.push(if *e == 1 { base } else { Expr::pow(base, *e as i32) });
    }
    Expr::mul(factors)
}
