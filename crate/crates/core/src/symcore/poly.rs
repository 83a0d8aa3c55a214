//! Sparse multivariate polynomials over exact rationals.
//!
//! Variables are [`Atom`]s: plain symbols or opaque function applications
//! whose argument is itself in canonical form. Monomials are ordered
//! graded-lexicographically, with earlier-created symbols more significant
//! and function atoms after all symbols.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ratfun::RatFun;
use super::symbol::Symbol;

/// Transcendental functions admitted as opaque atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sqrt, Func::Sin, Func::Cos, Func::Exp, Func::Log];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply_f64(self, x: f64) -> f64 {
        match self {
            Func::Sqrt => libm::sqrt(x),
            Func::Sin => libm::sin(x),
            Func::Cos => libm::cos(x),
            Func::Exp => libm::exp(x),
            Func::Log => libm::log(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    Sym(Symbol),
    Func(Func, Arc<RatFun>),
}

impl Atom {
    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        match self {
            Atom::Sym(x) => x == s,
            Atom::Func(_, arg) => arg.contains_symbol(s),
        }
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Atom::Sym(x) => {
                out.insert(x.clone());
            }
            Atom::Func(_, arg) => arg.collect_symbols(out),
        }
    }

    pub fn is_func(&self) -> bool {
        matches!(self, Atom::Func(..))
    }
}

/// Product of atom powers, sorted by atom, no zero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom, exp: u32) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(alloc::vec![(a, exp)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn exponent(&self, a: &Atom) -> u32 {
        self.0
            .binary_search_by(|(x, _)| x.cmp(a))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < *a {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == *a {
                let f = other.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => continue,
                    Ordering::Greater => out.push((a.clone(), e - f)),
                }
            } else {
                out.push((a.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Splits off the power of `a`: returns (exponent, remaining monomial).
    pub fn split(&self, a: &Atom) -> (u32, Monomial) {
        match self.0.binary_search_by(|(x, _)| x.cmp(a)) {
            Ok(i) => {
                let mut rest = self.0.clone();
                let (_, e) = rest.remove(i);
                (e, Monomial(rest))
            }
            Err(_) => (0, self.clone()),
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_degree = self.degree().cmp(&other.degree());
        if by_degree != Ordering::Equal {
            return by_degree;
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                    // `a` is more significant and absent from `other`.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                },
            }
        }
    }
}

/// Polynomial with exact rational coefficients; no zero coefficients stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn from_atom(a: Atom) -> Self {
        Poly::monomial(Monomial::atom(a, 1), BigRational::one())
    }

    pub fn symbol(s: &Symbol) -> Self {
        Poly::from_atom(Atom::Sym(s.clone()))
    }

    pub fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value if this polynomial is a constant (zero included).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> BigRational {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::zero)
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, k: &BigRational) -> Poly {
        Poly { terms: self.terms.iter().map(|(m1, c)| (m1.mul(m), c * k)).collect() }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                out.insert(a.clone());
            }
        }
        out
    }

    pub fn has_func_atoms(&self) -> bool {
        self.terms.keys().any(|m| m.factors().iter().any(|(a, _)| a.is_func()))
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.terms.keys().any(|m| m.factors().iter().any(|(a, _)| a.contains_symbol(s)))
    }

    pub(crate) fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                a.collect_symbols(out);
            }
        }
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.keys().map(|m| m.exponent(a)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Views the polynomial as univariate in `a` with polynomial coefficients.
    pub fn coefficients_in(&self, a: &Atom) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(a);
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub fn coefficient_in(&self, a: &Atom, degree: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(a);
            if e == degree {
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        let (lm, lc) = divisor.leading()?;
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((m, c)) = rem.leading() {
            let qm = m.div(lm)?;
            let qc = c / lc;
            rem = rem.sub(&divisor.mul_monomial(&qm, &qc));
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Least common multiple of all coefficient denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Gcd of all coefficient numerators (assumes integral coefficients).
    pub fn numerator_gcd(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |acc, c| acc.gcd(c.numer()))
    }

    pub fn eval_f64<F>(&self, env: &F) -> f64
    where
        F: Fn(&Symbol) -> f64,
    {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut term = rational_to_f64(c);
            for (a, e) in m.factors() {
                let v = match a {
                    Atom::Sym(s) => env(s),
                    Atom::Func(f, arg) => f.apply_f64(arg.eval_f64(env)),
                };
                term *= powi(v, *e as i32);
            }
            total += term;
        }
        total
    }
}

/// Integer power without std.
pub fn powi(x: f64, e: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut n = e.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    if e < 0 {
        1.0 / acc
    } else {
        acc
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Greatest common divisor, normalized to leading coefficient 1.
///
/// Recursive primitive-remainder-sequence algorithm: pick the most
/// significant atom, split off contents in the remaining atoms, and run a
/// primitive PRS on the primitive parts.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    let v = match atoms_a.iter().chain(atoms_b.iter()).min() {
        Some(v) => v.clone(),
        None => return Poly::one(),
    };
    let da = a.degree_in(&v);
    let db = b.degree_in(&v);
    if da == 0 {
        return gcd(a, &content_in(b, &v));
    }
    if db == 0 {
        return gcd(&content_in(a, &v), b);
    }
    let ca = content_in(a, &v);
    let cb = content_in(b, &v);
    let content = gcd(&ca, &cb);
    let mut p = a.exact_div(&ca).expect("content divides");
    let mut q = b.exact_div(&cb).expect("content divides");
    if p.degree_in(&v) < q.degree_in(&v) {
        core::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = pseudo_remainder(&p, &q, &v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(&v) == 0 {
            q = Poly::one();
            break;
        }
        p = q;
        q = primitive_part(&r, &v);
    }
    content.mul(&q).monic()
}

/// Gcd of the coefficients of `p` viewed as univariate in `v`.
fn content_in(p: &Poly, v: &Atom) -> Poly {
    let mut g = Poly::zero();
    for c in p.coefficients_in(v).values() {
        g = gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn primitive_part(p: &Poly, v: &Atom) -> Poly {
    let c = content_in(p, v);
    p.exact_div(&c).expect("content divides").monic()
}

fn pseudo_remainder(p: &Poly, q: &Poly, v: &Atom) -> Poly {
    let dq = q.degree_in(v);
    let lcq = q.coefficient_in(v, dq);
    let mut r = p.clone();
    while !r.is_zero() {
        let dr = r.degree_in(v);
        if dr < dq {
            break;
        }
        let lcr = r.coefficient_in(v, dr);
        let shift = Monomial::atom(v.clone(), dr - dq);
        let reduced = lcr.mul(q).mul_monomial(&shift, &BigRational::one());
        r = r.mul(&lcq).sub(&reduced);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::symbol::SymbolTable;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn graded_lex_order() {
        let t = SymbolTable::for_model(&["x", "y"], &[]).unwrap();
        let x = Atom::Sym(t.coordinate(0).clone());
        let y = Atom::Sym(t.coordinate(1).clone());
        let x2 = Monomial::atom(x.clone(), 2);
        let xy = Monomial::atom(x.clone(), 1).mul(&Monomial::atom(y.clone(), 1));
        let y2 = Monomial::atom(y.clone(), 2);
        let y3 = Monomial::atom(y, 3);
        assert!(x2 > xy && xy > y2);
        assert!(y3 > x2);
        assert!(Monomial::atom(x, 1) > Monomial::one());
    }

    #[test]
    fn gcd_cancels_common_factor() {
        let t = SymbolTable::for_model(&["x", "y"], &[]).unwrap();
        let x = Poly::symbol(t.coordinate(0));
        let y = Poly::symbol(t.coordinate(1));
        // (x - y)(x + 2y) and (x - y)(x^2 + y)
        let common = x.sub(&y);
        let a = common.mul(&x.add(&y.scale(&q(2))));
        let b = common.mul(&x.mul(&x).add(&y));
        assert_eq!(gcd(&a, &b), common.monic());
        assert!(gcd(&x, &y).is_one());
        assert_eq!(gcd(&a, &Poly::zero()), a.monic());
    }

    #[test]
    fn exact_division() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let x = Poly::symbol(t.coordinate(0));
        let num = x.mul(&x).sub(&Poly::one());
        let den = x.sub(&Poly::one());
        assert_eq!(num.exact_div(&den), Some(x.add(&Poly::one())));
        assert_eq!(x.exact_div(&den), None);
    }
}
