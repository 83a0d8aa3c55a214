//! Poisson brackets, total differential equations, the action one-form and
//! the iterative integrability (closure) check.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::canonical::CanonicalSystem;
use crate::symcore::{gcd, Atom, Expr, Poly, RatFun, SymError, Symbol, SymbolTable, ZeroTest, VELOCITY_PREFIX};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IntegrabilityError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("bracket argument contains velocity `{0}`")]
    VelocityPresent(String),
    #[error("closure status is {0}, expected parameter-fixing")]
    NotParameterFixing(ClosureStatus),
}

fn reject_velocities(e: &RatFun) -> Result<(), IntegrabilityError> {
    match e.symbols().into_iter().find(Symbol::is_velocity) {
        Some(v) => Err(IntegrabilityError::VelocityPresent(v.name().to_string())),
        None => Ok(()),
    }
}

/// Bracket over every canonical pair of `table`, `(tau, p_tau)` included.
pub fn bracket_in(table: &SymbolTable, a: &RatFun, b: &RatFun) -> Result<RatFun, IntegrabilityError> {
    reject_velocities(a)?;
    reject_velocities(b)?;
    let mut acc = RatFun::zero();
    for (q, p) in table.canonical_pairs() {
        let (aq, bp) = (a.contains_symbol(&q), b.contains_symbol(&p));
        let (ap, bq) = (a.contains_symbol(&p), b.contains_symbol(&q));
        if aq && bp {
            acc = acc.add(&a.derivative(&q).mul(&b.derivative(&p)));
        }
        if ap && bq {
            acc = acc.sub(&a.derivative(&p).mul(&b.derivative(&q)));
        }
    }
    Ok(acc)
}

/// `{A, B} = sum dA/dq dB/dp - dA/dp dB/dq`.
pub fn poisson_bracket(a: &RatFun, b: &RatFun, cs: &CanonicalSystem) -> Result<RatFun, IntegrabilityError> {
    bracket_in(cs.table(), a, b)
}

/// Coefficients of `dt_alpha`, in parameter-time order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneForm {
    pub terms: Vec<(Symbol, RatFun)>,
}

impl OneForm {
    pub fn coefficient(&self, t: &Symbol) -> RatFun {
        self.terms.iter().find(|(s, _)| s == t).map(|(_, c)| c.clone()).unwrap_or_else(RatFun::zero)
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (t, c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({})*d{}", Expr::from(c), t.name())?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `dF = sum_alpha [F, H'_alpha] dt_alpha`.
pub fn total_differential(f: &RatFun, cs: &CanonicalSystem) -> Result<OneForm, IntegrabilityError> {
    let terms = cs
        .generators
        .iter()
        .map(|g| Ok((g.time.clone(), bracket_in(cs.table(), f, &g.full)?)))
        .collect::<Result<_, IntegrabilityError>>()?;
    Ok(OneForm { terms })
}

/// `dZ = sum_alpha (-H_alpha + sum_a p_a dH'_alpha/dp_a) dt_alpha`.
pub fn action_one_form(cs: &CanonicalSystem) -> OneForm {
    let pairs = cs.expressible_pairs();
    let terms = cs
        .generators
        .iter()
        .map(|g| {
            let mut c = g.h.neg();
            for (_, p) in &pairs {
                c = c.add(&RatFun::symbol(p).mul(&g.full.derivative(p)));
            }
            (g.time.clone(), c)
        })
        .collect();
    OneForm { terms }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintRecord {
    /// `C<generation>.<k>`.
    pub label: String,
    pub expression: RatFun,
    pub generation: usize,
    /// Labels of the bracket `[left, right]` that produced it.
    pub origin: (String, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosureStatus {
    Integrable,
    ParameterFixing,
    BudgetExceeded,
}

impl ClosureStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ClosureStatus::Integrable => "integrable",
            ClosureStatus::ParameterFixing => "parameter-fixing",
            ClosureStatus::BudgetExceeded => "budget-exceeded",
        }
    }
}

impl fmt::Display for ClosureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A nonzero bracket, reduced modulo the constraints current at the time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketResult {
    pub left: String,
    pub right: String,
    pub value: RatFun,
}

/// A parameter whose differential is forced to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParameterFixing {
    pub parameter: Symbol,
    pub bracket: BracketResult,
    /// Printed form of the left bracket argument.
    pub left_expression: String,
    /// Where the left argument came from, e.g. `generation-1 constraint p_x`.
    pub left_description: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureReport {
    pub generations: Vec<Vec<ConstraintRecord>>,
    pub status: ClosureStatus,
    pub independent_parameters: Vec<Symbol>,
    pub fixings: Vec<ParameterFixing>,
    /// Nonvanishing brackets between two generated constraints.
    pub conflicts: Vec<BracketResult>,
    /// Set when some zero test relied on numeric probing.
    pub probabilistic: bool,
}

impl ClosureReport {
    pub fn constraints(&self) -> impl Iterator<Item = &ConstraintRecord> {
        self.generations.iter().flatten()
    }
}

/// Reduction modulo a constraint set: solvable constraints become
/// substitution rules, the rest are kept for divisibility tests.
#[derive(Clone, Debug, Default)]
struct Reducer {
    rules: BTreeMap<Symbol, RatFun>,
    kept: Vec<RatFun>,
    probabilistic: bool,
}

/// Product of the distinct irreducible factors of `p`.
fn squarefree(p: &Poly) -> Poly {
    if p.has_func_atoms() || p.is_constant() {
        return p.clone();
    }
    let mut syms = BTreeSet::new();
    for a in p.atoms() {
        if let Atom::Sym(s) = a {
            syms.insert(s);
        }
    }
    let whole = RatFun::from_poly(p.clone());
    let mut g = p.clone();
    for s in syms {
        let d = whole.derivative(&s);
        let scale = d.denom().as_constant().expect("derivative of a polynomial").recip();
        g = gcd(&g, &d.numer().scale(&scale));
        if g.is_constant() {
            return p.clone();
        }
    }
    p.exact_div(&g).expect("gcd divides")
}

impl Reducer {
    fn primary(cs: &CanonicalSystem) -> Self {
        let mut r = Reducer::default();
        for g in &cs.generators {
            r.rules.insert(g.momentum.clone(), g.h.neg());
        }
        r
    }

    fn reduce(&self, v: &RatFun) -> Result<RatFun, SymError> {
        v.substitute(&self.rules)
    }

    fn vanishes(&mut self, v: &RatFun) -> Result<bool, SymError> {
        let r = self.reduce(v)?;
        match r.zero_test() {
            ZeroTest::Zero => return Ok(true),
            ZeroTest::ProbablyZero => {
                self.probabilistic = true;
                return Ok(true);
            }
            ZeroTest::NonZero => {}
        }
        for k in &self.kept {
            let k = self.reduce(k)?;
            if k.is_zero() {
                continue;
            }
            let plain = !r.numer().has_func_atoms() && !k.numer().has_func_atoms();
            if plain && r.numer().exact_div(&squarefree(k.numer())).is_some() {
                return Ok(true);
            }
            if r.div(&k)?.as_constant().is_some() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Adds a constraint, solving it for the most significant symbol that
    /// occurs linearly, if any.
    fn adopt(&mut self, c: &RatFun) -> Result<(), SymError> {
        let c = self.reduce(c)?;
        let num = c.numer();
        let atoms = num.atoms();
        let target = c.symbols().into_iter().find(|s| {
            let a = Atom::Sym(s.clone());
            !c.denom().contains_symbol(s)
                && num.degree_in(&a) == 1
                && !atoms.iter().any(|x| x.is_func() && x.contains_symbol(s))
        });
        let Some(s) = target else {
            self.kept.push(c);
            return Ok(());
        };
        let a = Atom::Sym(s.clone());
        let c1 = RatFun::from_poly(num.coefficient_in(&a, 1));
        let c0 = RatFun::from_poly(num.coefficient_in(&a, 0));
        let value = c0.neg().div(&c1)?;
        let single: BTreeMap<Symbol, RatFun> = [(s.clone(), value.clone())].into_iter().collect();
        for rhs in self.rules.values_mut() {
            *rhs = rhs.substitute(&single)?;
        }
        self.rules.insert(s, value);
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum ItemKind {
    /// Generator with its parameter time; index 0 is `H'_0`.
    Generator(Symbol),
    Constraint(usize),
}

#[derive(Clone, Debug)]
struct Item {
    label: String,
    expr: RatFun,
    kind: ItemKind,
}

fn items_for(cs: &CanonicalSystem, constraints: &[ConstraintRecord]) -> Vec<Item> {
    let mut items: Vec<Item> = cs
        .generators
        .iter()
        .map(|g| Item { label: g.label.clone(), expr: g.full.clone(), kind: ItemKind::Generator(g.time.clone()) })
        .collect();
    items.extend(constraints.iter().map(|c| Item {
        label: c.label.clone(),
        expr: c.expression.clone(),
        kind: ItemKind::Constraint(c.generation),
    }));
    items
}

fn reducer_for(cs: &CanonicalSystem, constraints: &[ConstraintRecord]) -> Result<Reducer, SymError> {
    let mut r = Reducer::primary(cs);
    for c in constraints {
        r.adopt(&c.expression)?;
    }
    Ok(r)
}

/// Nonvanishing brackets `[G_i, G_j]` (`i > j`) over the generators followed
/// by `constraints`, reduced modulo primary relations and `constraints`.
pub fn check_integrability(
    cs: &CanonicalSystem,
    constraints: &[ConstraintRecord],
) -> Result<Vec<BracketResult>, IntegrabilityError> {
    let items = items_for(cs, constraints);
    let mut reducer = reducer_for(cs, constraints)?;
    let mut out = Vec::new();
    for i in 0..items.len() {
        for j in 0..i {
            let v = bracket_in(cs.table(), &items[i].expr, &items[j].expr)?;
            if !reducer.vanishes(&v)? {
                out.push(BracketResult {
                    left: items[i].label.clone(),
                    right: items[j].label.clone(),
                    value: reducer.reduce(&v)?,
                });
            }
        }
    }
    Ok(out)
}

/// Closure with the default budget of `2n` generations.
pub fn constraint_closure(cs: &CanonicalSystem) -> Result<ClosureReport, IntegrabilityError> {
    constraint_closure_with_budget(cs, 2 * cs.model.coordinate_count())
}

pub fn constraint_closure_with_budget(cs: &CanonicalSystem, budget: usize) -> Result<ClosureReport, IntegrabilityError> {
    let table = cs.table();
    let mut items = items_for(cs, &[]);
    let mut reducer = Reducer::primary(cs);
    let mut generations: Vec<Vec<ConstraintRecord>> = Vec::new();
    let mut independent = cs.parameter_times();
    let mut fixings = Vec::new();
    let mut conflicts = Vec::new();
    let mut handled: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut fixing_items: BTreeSet<usize> = BTreeSet::new();
    let mut status = ClosureStatus::Integrable;

    loop {
        let mut progressed = false;
        let mut found: Vec<(usize, usize, RatFun)> = Vec::new();
        for i in 0..items.len() {
            for j in 0..i {
                if handled.contains(&(i, j)) {
                    continue;
                }
                if let ItemKind::Generator(t) = &items[j].kind {
                    if j > 0 && !independent.contains(t) {
                        continue;
                    }
                }
                let v = bracket_in(table, &items[i].expr, &items[j].expr)?;
                if reducer.vanishes(&v)? {
                    handled.insert((i, j));
                } else {
                    found.push((i, j, reducer.reduce(&v)?));
                }
            }
        }

        for (i, j, v) in &found {
            let (i, j) = (*i, *j);
            let result = BracketResult { left: items[i].label.clone(), right: items[j].label.clone(), value: v.clone() };
            match &items[j].kind {
                ItemKind::Generator(t) if j > 0 => {
                    handled.insert((i, j));
                    progressed = true;
                    fixing_items.insert(i);
                    if let Some(pos) = independent.iter().position(|x| x == t) {
                        independent.remove(pos);
                        let (left_expression, left_description) = match items[i].kind {
                            ItemKind::Constraint(g) => {
                                let e = Expr::from(&items[i].expr).to_string();
                                (e.clone(), format!("generation-{g} constraint {e}"))
                            }
                            ItemKind::Generator(_) => (items[i].label.clone(), items[i].label.clone()),
                        };
                        fixings.push(ParameterFixing { parameter: t.clone(), bracket: result, left_expression, left_description });
                    }
                }
                ItemKind::Constraint(_) => {
                    handled.insert((i, j));
                    progressed = true;
                    conflicts.push(result);
                }
                ItemKind::Generator(_) => {}
            }
        }

        let generation = generations.len() + 1;
        let mut adopted: Vec<ConstraintRecord> = Vec::new();
        for (i, j, v) in &found {
            let (i, j) = (*i, *j);
            if j != 0 {
                continue;
            }
            handled.insert((i, j));
            if fixing_items.contains(&i) || reducer.vanishes(v)? {
                continue;
            }
            let expression = reducer.reduce(v)?.sign_normalized();
            reducer.adopt(&expression)?;
            adopted.push(ConstraintRecord {
                label: format!("C{generation}.{}", adopted.len() + 1),
                expression,
                generation,
                origin: (items[i].label.clone(), items[j].label.clone()),
            });
        }
        if !adopted.is_empty() {
            progressed = true;
            items.extend(adopted.iter().map(|c| Item {
                label: c.label.clone(),
                expr: c.expression.clone(),
                kind: ItemKind::Constraint(generation),
            }));
            generations.push(adopted);
            if generations.len() > budget {
                status = ClosureStatus::BudgetExceeded;
                break;
            }
        }
        if !progressed {
            break;
        }
    }
    if status != ClosureStatus::BudgetExceeded && (!fixings.is_empty() || !conflicts.is_empty()) {
        status = ClosureStatus::ParameterFixing;
    }
    Ok(ClosureReport {
        generations,
        status,
        independent_parameters: independent,
        fixings,
        conflicts,
        probabilistic: reducer.probabilistic,
    })
}

/// Names the parameter differentials forced to zero and the brackets
/// responsible. Only meaningful for parameter-fixing reports.
pub fn second_class_probe(_cs: &CanonicalSystem, report: &ClosureReport) -> Result<String, IntegrabilityError> {
    if report.status != ClosureStatus::ParameterFixing {
        return Err(IntegrabilityError::NotParameterFixing(report.status));
    }
    let mut lines = Vec::new();
    for f in &report.fixings {
        lines.push(format!(
            "{VELOCITY_PREFIX}{} forced by [{}, {}] = {} ({}, {})",
            f.parameter.name(),
            f.left_expression,
            f.bracket.right,
            Expr::from(&f.bracket.value),
            f.left_description,
            f.bracket.right,
        ));
    }
    for c in &report.conflicts {
        lines.push(format!(
            "constraints {} and {} do not commute on the surface: [{}, {}] = {}",
            c.left,
            c.right,
            c.left,
            c.right,
            Expr::from(&c.value)
        ));
    }
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_hjpde_set, ModelDefinition};

    fn system(coords: &[&str], consts: &[&str], l: &str) -> CanonicalSystem {
        build_hjpde_set(&ModelDefinition::new("m", coords, consts, l).unwrap()).unwrap()
    }

    fn rf(cs: &CanonicalSystem, s: &str) -> RatFun {
        cs.model.parse(s).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let cs = system(&["x", "y"], &[], "1/2*dx^2 + x*dy");
        assert_eq!(poisson_bracket(&rf(&cs, "x"), &rf(&cs, "p_x"), &cs).unwrap(), RatFun::one());
        let b = poisson_bracket(&rf(&cs, "p_y - x"), &rf(&cs, "1/2*p_x^2"), &cs).unwrap();
        assert_eq!(b, rf(&cs, "-p_x"));
        assert_eq!(
            poisson_bracket(&rf(&cs, "dx"), &rf(&cs, "x"), &cs),
            Err(IntegrabilityError::VelocityPresent("dx".into()))
        );
        let frw = system(&["N", "a"], &["Lambda"], "-3*a*da^2/N - N*Lambda*a^3");
        let h = rf(&frw, "-(p_a^2)/(12*a) + Lambda*a^3");
        let nh = h.mul(&rf(&frw, "N"));
        assert!(poisson_bracket(&h, &nh, &frw).unwrap().is_zero());
    }

    #[test]
    fn total_differential_examples() {
        let osc = system(&["x", "y"], &[], "1/2*(dx^2+dy^2) - 1/2*(x^2+y^2)");
        let dx = total_differential(&rf(&osc, "x"), &osc).unwrap();
        assert_eq!(dx.terms.len(), 1);
        assert_eq!(dx.coefficient(osc.table().tau()), rf(&osc, "p_x"));
        let dpx = total_differential(&rf(&osc, "p_x"), &osc).unwrap();
        assert_eq!(dpx.coefficient(osc.table().tau()), rf(&osc, "-x"));

        let frw = system(&["N", "a"], &["Lambda"], "-3*a*da^2/N - N*Lambda*a^3");
        let tau = frw.table().tau().clone();
        let da = total_differential(&rf(&frw, "a"), &frw).unwrap();
        assert_eq!(da.coefficient(&tau), rf(&frw, "-N*p_a/(6*a)"));
        let dpn = total_differential(&rf(&frw, "p_N"), &frw).unwrap();
        assert_eq!(dpn.coefficient(&tau), rf(&frw, "p_a^2/(12*a) - Lambda*a^3"));
        assert!(dpn.coefficient(frw.table().coordinate(0)).is_zero());
    }

    #[test]
    fn action_examples() {
        let osc = system(&["x", "y"], &[], "1/2*(dx^2+dy^2) - 1/2*(x^2+y^2)");
        let z = action_one_form(&osc);
        assert_eq!(z.coefficient(osc.table().tau()), rf(&osc, "1/2*(p_x^2+p_y^2) - 1/2*(x^2+y^2)"));
        let frw = system(&["N", "a"], &["Lambda"], "-3*a*da^2/N - N*Lambda*a^3");
        let z = action_one_form(&frw);
        assert_eq!(z.coefficient(frw.table().tau()), rf(&frw, "-N*p_a^2/(12*a) - N*Lambda*a^3"));
        assert!(z.coefficient(frw.table().coordinate(0)).is_zero());
    }

    #[test]
    fn oscillator_closes_immediately() {
        let osc = system(&["x", "y"], &[], "1/2*(dx^2+dy^2) - 1/2*(x^2+y^2)");
        assert!(check_integrability(&osc, &[]).unwrap().is_empty());
        let r = constraint_closure(&osc).unwrap();
        assert_eq!(r.status, ClosureStatus::Integrable);
        assert!(r.generations.is_empty());
        assert_eq!(r.independent_parameters, [osc.table().tau().clone()]);
    }

    #[test]
    fn shifted_velocity_closure() {
        let cs = system(&["x", "y"], &[], "1/2*(dx-y)^2");
        let first = check_integrability(&cs, &[]).unwrap();
        assert_eq!(first.len(), 1);
        assert_eq!((first[0].left.as_str(), first[0].right.as_str()), ("H'_y", "H'_0"));
        assert_eq!(first[0].value, rf(&cs, "-p_x"));
        let r = constraint_closure(&cs).unwrap();
        assert_eq!(r.status, ClosureStatus::Integrable);
        assert_eq!(r.generations.len(), 1);
        assert_eq!(r.generations[0][0].expression, rf(&cs, "p_x"));
        assert_eq!(r.generations[0][0].label, "C1.1");
        let names: Vec<&str> = r.independent_parameters.iter().map(|s| s.name()).collect();
        assert_eq!(names, ["tau", "y"]);
        assert!(check_integrability(&cs, &r.generations[0]).unwrap().is_empty());
    }

    #[test]
    fn frw_closure() {
        for l in ["-3*a*da^2/N", "-3*a*da^2/N - N*Lambda*a^3"] {
            let cs = system(&["N", "a"], &["Lambda"], l);
            let r = constraint_closure(&cs).unwrap();
            assert_eq!(r.status, ClosureStatus::Integrable, "{l}");
            assert_eq!(r.generations.len(), 1);
            assert_eq!(r.generations[0].len(), 1);
            let h = if l.contains("Lambda") { "-(p_a^2)/(12*a) + Lambda*a^3" } else { "-(p_a^2)/(12*a)" };
            assert_eq!(r.generations[0][0].expression, rf(&cs, h).sign_normalized());
            let names: Vec<&str> = r.independent_parameters.iter().map(|s| s.name()).collect();
            assert_eq!(names, ["tau", "N"]);
            assert!(check_integrability(&cs, &r.generations[0]).unwrap().is_empty());
        }
    }

    #[test]
    fn coupled_parameter_fixes_y() {
        let cs = system(&["x", "y"], &[], "1/2*dx^2 + x*dy");
        let r = constraint_closure(&cs).unwrap();
        assert_eq!(r.status, ClosureStatus::ParameterFixing);
        assert_eq!(r.generations.len(), 1);
        assert_eq!(r.generations[0][0].expression, rf(&cs, "p_x"));
        assert_eq!(r.fixings.len(), 1);
        assert_eq!(r.fixings[0].parameter.name(), "y");
        let names: Vec<&str> = r.independent_parameters.iter().map(|s| s.name()).collect();
        assert_eq!(names, ["tau"]);
        let text = second_class_probe(&cs, &r).unwrap();
        assert_eq!(text, "dy forced by [p_x, H'_y] = 1 (generation-1 constraint p_x, H'_y)");
    }

    #[test]
    fn probe_rejects_integrable_report() {
        let cs = system(&["x"], &[], "1/2*dx^2");
        let r = constraint_closure(&cs).unwrap();
        assert_eq!(
            second_class_probe(&cs, &r),
            Err(IntegrabilityError::NotParameterFixing(ClosureStatus::Integrable))
        );
    }

    #[test]
    fn chain_of_generations_and_budget() {
        // H_0 = p_x^2/2 + x*y: constraints x, p_x, then y, which fixes dy.
        let cs = system(&["x", "y"], &[], "1/2*dx^2 - x*y");
        let r = constraint_closure(&cs).unwrap();
        let gens: Vec<Vec<String>> = r
            .generations
            .iter()
            .map(|g| g.iter().map(|c| Expr::from(&c.expression).to_string()).collect())
            .collect();
        assert_eq!(gens, [["x"], ["p_x"], ["y"]]);
        assert_eq!(r.status, ClosureStatus::ParameterFixing);
        assert_eq!(r.fixings[0].parameter.name(), "y");
        let capped = constraint_closure_with_budget(&cs, 2).unwrap();
        assert_eq!(capped.status, ClosureStatus::BudgetExceeded);
        assert_eq!(capped.generations.len(), 3);
    }

    #[test]
    fn squarefree_part() {
        let cs = system(&["x", "y"], &[], "1/2*dx^2");
        let p = rf(&cs, "x^3*(x+y)^2*p_y");
        assert_eq!(RatFun::from_poly(squarefree(p.numer())), rf(&cs, "x*(x+y)*p_y"));
    }
}
