//! Exact symbolic kernel: expressions, rational-function canonical forms,
//! differentiation, substitution, linear solving and generic matrix rank.

mod expr;
mod linsolve;
mod matrix;
mod parse;
mod poly;
mod ratfun;
mod symbol;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

pub use expr::{Expr, Node};
pub use linsolve::LinearSolution;
pub use matrix::{matrix_rank, Echelon, ExprMatrix};
pub use parse::{identifiers, parse_expr};
pub use poly::{gcd, powi, rational_to_f64, Atom, Func, Monomial, Poly};
pub use ratfun::{RatFun, ZeroTest, PROBE_POINTS, PROBE_THRESHOLD};
pub use symbol::{
    is_identifier, Symbol, SymbolKind, SymbolTable, MOMENTUM_PREFIX, P_TAU, TAU, VELOCITY_PREFIX,
};

pub use num_bigint::BigInt;
pub use num_rational::BigRational;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SymError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("cyclic binding through `{0}`")]
    CyclicBinding(String),
    #[error("equation {equation} is not linear in `{unknown}`")]
    Nonlinear { equation: usize, unknown: String },
    #[error("inconsistent system: equation {0} reduces to a nonzero constant")]
    Inconsistent(usize),
    #[error("invalid identifier `{0}`")]
    InvalidName(String),
    #[error("`{0}` is reserved")]
    ReservedName(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateName(String),
    #[error("matrix rows have unequal length")]
    Ragged,
}

/// Rational-function normal form, printed back as an expression.
pub fn canonical_form(e: &Expr) -> Result<Expr, SymError> {
    Ok(Expr::from(e.to_ratfun()?))
}

pub fn differentiate(e: &Expr, s: &Symbol) -> Result<Expr, SymError> {
    Ok(Expr::from(e.to_ratfun()?.derivative(s)))
}

/// Zero test of the canonical form; see [`RatFun::zero_test`] for the
/// probabilistic branch.
pub fn zero_test(e: &Expr) -> Result<ZeroTest, SymError> {
    Ok(e.to_ratfun()?.zero_test())
}

pub fn equals_zero(e: &Expr) -> Result<bool, SymError> {
    Ok(zero_test(e)?.is_zero())
}

/// Fails if some bound symbol reaches itself through the right-hand sides.
pub fn check_acyclic(bindings: &BTreeMap<Symbol, RatFun>) -> Result<(), SymError> {
    fn visit(
        s: &Symbol,
        bindings: &BTreeMap<Symbol, RatFun>,
        active: &mut BTreeSet<Symbol>,
        done: &mut BTreeSet<Symbol>,
    ) -> Result<(), SymError> {
        if done.contains(s) {
            return Ok(());
        }
        if !active.insert(s.clone()) {
            return Err(SymError::CyclicBinding(String::from(s.name())));
        }
        if let Some(rhs) = bindings.get(s) {
            for t in rhs.symbols() {
                if bindings.contains_key(&t) {
                    visit(&t, bindings, active, done)?;
                }
            }
        }
        active.remove(s);
        done.insert(s.clone());
        Ok(())
    }
    let mut done = BTreeSet::new();
    for s in bindings.keys() {
        visit(s, bindings, &mut BTreeSet::new(), &mut done)?;
    }
    Ok(())
}

/// Simultaneous substitution followed by canonicalization.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr, SymError> {
    let rules = bindings
        .iter()
        .map(|(s, v)| Ok((s.clone(), v.to_ratfun()?)))
        .collect::<Result<BTreeMap<_, _>, SymError>>()?;
    check_acyclic(&rules)?;
    Ok(Expr::from(e.to_ratfun()?.substitute(&rules)?))
}

/// Expression-level front end to the rational-function solver.
pub fn solve_linear_system(equations: &[Expr], unknowns: &[Symbol]) -> Result<LinearSolution, SymError> {
    let eqs = equations.iter().map(Expr::to_ratfun).collect::<Result<Vec<_>, _>>()?;
    linsolve::solve_linear_system(&eqs, unknowns)
}

pub use linsolve::solve_linear_system as solve_linear_ratfun;

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn frw() -> SymbolTable {
        SymbolTable::for_model(&["N", "a"], &["Lambda"]).unwrap()
    }

    fn p(s: &str, t: &SymbolTable) -> Expr {
        parse_expr(s, t).unwrap()
    }

    fn same(a: &Expr, b: &Expr) -> bool {
        a.to_ratfun().unwrap() == b.to_ratfun().unwrap()
    }

    #[test]
    fn derivative_examples() {
        let t = frw();
        let n = t.lookup("N").unwrap();
        let d = differentiate(&p("-3*a*da^2/N", &t), n).unwrap();
        assert!(same(&d, &p("3*a*da^2/N^2", &t)));
        let x = SymbolTable::for_model(&["x", "y"], &[]).unwrap();
        let dx = x.lookup("dx").unwrap();
        assert!(same(&differentiate(&p("1/2*dx^2", &x), dx).unwrap(), &p("dx", &x)));
        assert_eq!(differentiate(&p("p_y", &x), x.lookup("x").unwrap()).unwrap().to_string(), "0");
    }

    #[test]
    fn canonical_examples() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        assert_eq!(canonical_form(&p("x + x", &t)).unwrap().to_string(), "2*x");
        assert_eq!(canonical_form(&p("(x^2-1)/(x-1)", &t)).unwrap().to_string(), "x + 1");
        let f = frw();
        let c = canonical_form(&p("p_a*(-N*p_a/(6*a)) + N*p_a^2/(12*a)", &f)).unwrap();
        assert!(same(&c, &p("-N*p_a^2/(12*a)", &f)));
        let again = canonical_form(&c).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn zero_examples() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        assert!(equals_zero(&p("x - x", &t)).unwrap());
        assert!(!equals_zero(&p("p_x", &t)).unwrap());
        assert_eq!(zero_test(&p("sin(x)^2 + cos(x)^2 - 1", &t)).unwrap(), ZeroTest::ProbablyZero);
        assert_eq!(zero_test(&p("sin(x)^2 - cos(x)^2", &t)).unwrap(), ZeroTest::NonZero);
    }

    #[test]
    fn substitution_examples() {
        let t = frw();
        let da = t.lookup("da").unwrap().clone();
        let mut b = BTreeMap::new();
        b.insert(da, p("-N*p_a/(6*a)", &t));
        let r = substitute(&p("-3*a*da^2/N", &t), &b).unwrap();
        assert!(same(&r, &p("-N*p_a^2/(12*a)", &t)));
        let e = p("(a^2 - 1)/(a - 1)", &t);
        assert_eq!(substitute(&e, &BTreeMap::new()).unwrap(), canonical_form(&e).unwrap());

        let x = SymbolTable::for_model(&["x", "y"], &[]).unwrap();
        let (xs, ys) = (x.lookup("x").unwrap().clone(), x.lookup("y").unwrap().clone());
        let mut swap = BTreeMap::new();
        swap.insert(xs.clone(), p("p_x", &x));
        assert!(same(&substitute(&p("x^2", &x), &swap).unwrap(), &p("p_x^2", &x)));
        swap.insert(xs.clone(), p("y + 1", &x));
        swap.insert(ys.clone(), p("x", &x));
        assert!(matches!(substitute(&p("x", &x), &swap), Err(SymError::CyclicBinding(_))));
        let mut selfref = BTreeMap::new();
        selfref.insert(xs, p("x + 1", &x));
        assert!(substitute(&p("x", &x), &selfref).is_err());
    }

    #[test]
    fn solve_examples() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let dx = t.lookup("dx").unwrap().clone();
        let LinearSolution::Unique(m) = solve_linear_system(&[p("p_x - dx", &t)], core::slice::from_ref(&dx)).unwrap() else {
            panic!()
        };
        assert!(same(&Expr::from(&m[&dx]), &p("p_x", &t)));
    }
}
