//! Rational-function normal form.
//!
//! A [`RatFun`] is `num / den` with `gcd(num, den) = 1`, integer
//! coefficients whose joint content is 1, and a positive leading
//! coefficient in `den`. Under these rules every rational function in the
//! atoms has exactly one representation, so structural equality is
//! mathematical equality.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::{gcd, Atom, Func, Monomial, Poly};
use super::symbol::Symbol;
use super::SymError;

/// Number of random points used when a zero test meets function atoms.
pub const PROBE_POINTS: usize = 16;
/// Absolute threshold below which a probe value counts as zero.
pub const PROBE_THRESHOLD: f64 = 1e-10;
const PROBE_SEED: u64 = 0x4a51_0b5e_ed00_0001;

/// Outcome of a zero test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroTest {
    /// The normal form is the zero polynomial.
    Zero,
    /// Nonzero as a polynomial in opaque function atoms, but every probe
    /// point evaluated below [`PROBE_THRESHOLD`].
    ProbablyZero,
    NonZero,
}

impl ZeroTest {
    pub fn is_zero(self) -> bool {
        !matches!(self, ZeroTest::NonZero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    pub fn new(num: Poly, den: Poly) -> Result<Self, SymError> {
        if den.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(Self::reduce(num, den))
    }

    pub fn from_poly(p: Poly) -> Self {
        Self::normalize_units(p, Poly::one())
    }

    pub fn zero() -> Self {
        RatFun { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFun { num: Poly::one(), den: Poly::one() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(BigRational::from_integer(n.into()))
    }

    pub fn symbol(s: &Symbol) -> Self {
        RatFun { num: Poly::symbol(s), den: Poly::one() }
    }

    /// Function application, folding the exact special values at 0 and 1.
    pub fn func(f: Func, arg: RatFun) -> Self {
        if let Some(c) = arg.as_constant() {
            let folded = match f {
                Func::Sqrt if c.is_zero() => Some(0),
                Func::Sqrt if c.is_one() => Some(1),
                Func::Sin if c.is_zero() => Some(0),
                Func::Cos if c.is_zero() => Some(1),
                Func::Exp if c.is_zero() => Some(1),
                Func::Log if c.is_one() => Some(0),
                _ => None,
            };
            if let Some(v) = folded {
                return RatFun::integer(v);
            }
        }
        RatFun { num: Poly::from_atom(Atom::Func(f, Arc::new(arg))), den: Poly::one() }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    /// Cancels the gcd, then fixes the unit.
    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFun::zero();
        }
        if den.is_constant() || num.is_constant() {
            return Self::normalize_units(num, den);
        }
        let g = gcd(&num, &den);
        if g.is_one() {
            Self::normalize_units(num, den)
        } else {
            let n = num.exact_div(&g).expect("gcd divides numerator");
            let d = den.exact_div(&g).expect("gcd divides denominator");
            Self::normalize_units(n, d)
        }
    }

    /// Scales numerator and denominator by the unique rational that makes all
    /// coefficients integral with joint content 1 and `lc(den) > 0`.
    fn normalize_units(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFun::zero();
        }
        let l = num.denominator_lcm().lcm(&den.denominator_lcm());
        let scaled_n = num.scale(&BigRational::from_integer(l.clone()));
        let scaled_d = den.scale(&BigRational::from_integer(l));
        let g = scaled_n.numerator_gcd().gcd(&scaled_d.numerator_gcd());
        let mut k = BigRational::new(One::one(), g);
        if scaled_d.leading_coefficient().is_negative() {
            k = -k;
        }
        RatFun { num: scaled_n.scale(&k), den: scaled_d.scale(&k) }
    }

    pub fn add(&self, other: &RatFun) -> RatFun {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Self::reduce(self.num.add(&other.num), self.den.clone());
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        Self::reduce(num, self.den.mul(&other.den))
    }

    pub fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFun {
        RatFun { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &RatFun) -> RatFun {
        if self.is_zero() || other.is_zero() {
            return RatFun::zero();
        }
        if self.den.is_constant() && other.den.is_constant() {
            return Self::normalize_units(self.num.mul(&other.num), self.den.mul(&other.den));
        }
        // Cross-cancel so the product of coprime pairs stays coprime.
        let g1 = gcd(&self.num, &other.den);
        let g2 = gcd(&other.num, &self.den);
        let n1 = self.num.exact_div(&g1).expect("gcd divides");
        let d2 = other.den.exact_div(&g1).expect("gcd divides");
        let n2 = other.num.exact_div(&g2).expect("gcd divides");
        let d1 = self.den.exact_div(&g2).expect("gcd divides");
        Self::normalize_units(n1.mul(&n2), d1.mul(&d2))
    }

    pub fn scale(&self, k: &BigRational) -> RatFun {
        if k.is_zero() {
            return RatFun::zero();
        }
        Self::normalize_units(self.num.scale(k), self.den.clone())
    }

    pub fn recip(&self) -> Result<RatFun, SymError> {
        if self.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(Self::normalize_units(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &RatFun) -> Result<RatFun, SymError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, e: i32) -> Result<RatFun, SymError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs();
        if k == 0 {
            return Ok(RatFun::one());
        }
        Ok(Self::normalize_units(base.num.pow(k), base.den.pow(k)))
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.num.contains_symbol(s) || self.den.contains_symbol(s)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    pub(crate) fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        self.num.collect_symbols(out);
        self.den.collect_symbols(out);
    }

    pub fn has_func_atoms(&self) -> bool {
        self.num.has_func_atoms() || self.den.has_func_atoms()
    }

    /// Exact partial derivative.
    pub fn derivative(&self, s: &Symbol) -> RatFun {
        if !self.contains_symbol(s) {
            return RatFun::zero();
        }
        let dn = poly_derivative(&self.num, s);
        if !self.den.contains_symbol(s) {
            return dn.div(&RatFun::from_poly(self.den.clone())).expect("denominator is nonzero");
        }
        let dd = poly_derivative(&self.den, s);
        let n = RatFun::from_poly(self.num.clone());
        let d = RatFun::from_poly(self.den.clone());
        let top = dn.mul(&d).sub(&n.mul(&dd));
        let bottom = RatFun::from_poly(self.den.pow(2));
        top.div(&bottom).expect("denominator is nonzero")
    }

    /// Simultaneous substitution of symbols by rational functions.
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, RatFun>) -> Result<RatFun, SymError> {
        if bindings.is_empty() || !bindings.keys().any(|s| self.contains_symbol(s)) {
            return Ok(self.clone());
        }
        let n = substitute_poly(&self.num, bindings)?;
        let d = substitute_poly(&self.den, bindings)?;
        n.div(&d)
    }

    pub fn eval_f64<F>(&self, env: &F) -> f64
    where
        F: Fn(&Symbol) -> f64,
    {
        self.num.eval_f64(env) / self.den.eval_f64(env)
    }

    /// Exact test when no function atoms are involved; otherwise numeric
    /// probing at fixed-seed random rational points.
    pub fn zero_test(&self) -> ZeroTest {
        if self.num.is_zero() {
            return ZeroTest::Zero;
        }
        if !self.num.has_func_atoms() {
            return ZeroTest::NonZero;
        }
        let symbols: alloc::vec::Vec<Symbol> = {
            let mut set = BTreeSet::new();
            self.num.collect_symbols(&mut set);
            set.into_iter().collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        for _ in 0..PROBE_POINTS {
            let point: BTreeMap<u32, f64> = symbols
                .iter()
                .map(|s| (s.id(), rng.gen_range(1000u32..=100_000) as f64 / 1000.0))
                .collect();
            let v = self.num.eval_f64(&|s: &Symbol| point.get(&s.id()).copied().unwrap_or(0.0));
            if v.is_nan() || libm::fabs(v) >= PROBE_THRESHOLD {
                return ZeroTest::NonZero;
            }
        }
        ZeroTest::ProbablyZero
    }

    /// Sign-normalized copy: `num` gets a positive leading coefficient.
    /// Meaningful for quantities only defined up to sign, like constraints.
    pub fn sign_normalized(&self) -> RatFun {
        if self.num.leading_coefficient().is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }
}

fn poly_derivative(p: &Poly, s: &Symbol) -> RatFun {
    let mut plain = Poly::zero();
    let mut chained = RatFun::zero();
    for (m, c) in p.terms() {
        for (a, e) in m.factors() {
            if !a.contains_symbol(s) {
                continue;
            }
            let rest = m.div(&Monomial::atom(a.clone(), 1)).expect("atom divides its monomial");
            let k = c * BigRational::from_integer((*e).into());
            match a {
                Atom::Sym(_) => plain = plain.add(&Poly::monomial(rest, k)),
                Atom::Func(f, arg) => {
                    let outer = func_derivative(*f, arg);
                    let inner = arg.derivative(s);
                    let term = RatFun::from_poly(Poly::monomial(rest, k)).mul(&outer).mul(&inner);
                    chained = chained.add(&term);
                }
            }
        }
    }
    RatFun::from_poly(plain).add(&chained)
}

/// `f'(arg)` as a rational function of atoms.
fn func_derivative(f: Func, arg: &Arc<RatFun>) -> RatFun {
    let same = Poly::from_atom(Atom::Func(f, arg.clone()));
    match f {
        Func::Sqrt => RatFun::new(Poly::one(), same.scale(&BigRational::from_integer(2.into())))
            .expect("nonzero atom"),
        Func::Sin => RatFun::from_poly(Poly::from_atom(Atom::Func(Func::Cos, arg.clone()))),
        Func::Cos => RatFun::from_poly(Poly::from_atom(Atom::Func(Func::Sin, arg.clone())).neg()),
        Func::Exp => RatFun::from_poly(same),
        // `arg` depends on the differentiation symbol, so it is not zero.
        Func::Log => arg.recip().expect("nonconstant argument"),
    }
}

fn substitute_poly(p: &Poly, bindings: &BTreeMap<Symbol, RatFun>) -> Result<RatFun, SymError> {
    // Accumulate over a running common denominator and reduce once.
    let mut acc_num = Poly::zero();
    let mut acc_den = Poly::one();
    for (m, c) in p.terms() {
        let mut term = RatFun::constant(c.clone());
        for (a, e) in m.factors() {
            let value = match a {
                Atom::Sym(s) => match bindings.get(s) {
                    Some(v) => v.clone(),
                    None => RatFun::symbol(s),
                },
                Atom::Func(f, arg) => RatFun::func(*f, arg.substitute(bindings)?),
            };
            term = term.mul(&value.powi(*e as i32)?);
        }
        if term.den == acc_den {
            acc_num = acc_num.add(&term.num);
        } else {
            acc_num = acc_num.mul(&term.den).add(&term.num.mul(&acc_den));
            acc_den = acc_den.mul(&term.den);
        }
    }
    RatFun::new(acc_num, acc_den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::symbol::SymbolTable;

    #[test]
    fn normal_form_is_unique() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let x = RatFun::symbol(t.coordinate(0));
        let a = x.scale(&BigRational::new(2.into(), 4.into()));
        let b = x.div(&RatFun::integer(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.denom().as_constant(), Some(BigRational::from_integer(2.into())));
        let neg = RatFun::integer(1).div(&x.neg()).unwrap();
        assert!(!neg.denom().leading_coefficient().is_negative());
    }

    #[test]
    fn gcd_cancellation() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let x = RatFun::symbol(t.coordinate(0));
        let num = x.mul(&x).sub(&RatFun::one());
        let den = x.sub(&RatFun::one());
        assert_eq!(num.div(&den).unwrap(), x.add(&RatFun::one()));
    }

    #[test]
    fn transcendental_identity_probes_zero() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let x = RatFun::symbol(t.coordinate(0));
        let s = RatFun::func(Func::Sin, x.clone());
        let c = RatFun::func(Func::Cos, x);
        let e = s.mul(&s).add(&c.mul(&c)).sub(&RatFun::one());
        assert_eq!(e.zero_test(), ZeroTest::ProbablyZero);
        assert_eq!(s.zero_test(), ZeroTest::NonZero);
        assert_eq!(RatFun::zero().zero_test(), ZeroTest::Zero);
    }

    #[test]
    fn chain_rule_through_atoms() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let xs = t.coordinate(0);
        let x = RatFun::symbol(xs);
        let arg = x.mul(&x);
        // d/dx sqrt(x^2) = x / sqrt(x^2)
        let d = RatFun::func(Func::Sqrt, arg.clone()).derivative(xs);
        let expected = x.div(&RatFun::func(Func::Sqrt, arg)).unwrap();
        assert_eq!(d, expected);
        let d = RatFun::func(Func::Log, x.clone()).derivative(xs);
        assert_eq!(d, x.recip().unwrap());
    }
}
