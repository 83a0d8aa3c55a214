//! Canonical analysis of a Lagrangian: Hessian and rank partition, momenta,
//! velocity solve, the canonical Hamiltonian and the Hamilton-Jacobi
//! generators `H'_alpha = p_alpha + H_alpha`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::symcore::{
    parse_expr, solve_linear_ratfun, Expr, ExprMatrix, LinearSolution, RatFun, SymError, Symbol,
    SymbolKind, SymbolTable,
};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CanonicalError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("a model needs at least one coordinate")]
    NoCoordinates,
    #[error("the Lagrangian may not reference {kind} `{name}`")]
    IllegalSymbol { name: String, kind: &'static str },
    #[error("cannot solve for the velocity of `{coordinate}`: momentum relation is not linear in velocities")]
    VelocitySolve { coordinate: String },
    #[error("velocity `{velocity}` survives in {quantity}; the rank partition is inconsistent")]
    ResidualVelocity { quantity: String, velocity: String },
}

/// A named model: coordinates, constants and a Lagrangian.
#[derive(Clone, Debug)]
pub struct ModelDefinition {
    name: String,
    table: SymbolTable,
    lagrangian: Expr,
    l: RatFun,
}

impl ModelDefinition {
    pub fn new(name: &str, coordinates: &[&str], constants: &[&str], lagrangian: &str) -> Result<Self, CanonicalError> {
        if coordinates.is_empty() {
            return Err(CanonicalError::NoCoordinates);
        }
        let table = SymbolTable::for_model(coordinates, constants)?;
        let expr = parse_expr(lagrangian, &table)?;
        Self::from_expr(name, table, expr)
    }

    pub fn from_expr(name: &str, table: SymbolTable, lagrangian: Expr) -> Result<Self, CanonicalError> {
        if table.coordinate_count() == 0 {
            return Err(CanonicalError::NoCoordinates);
        }
        for s in lagrangian.symbols() {
            match s.kind() {
                SymbolKind::Coordinate | SymbolKind::Velocity | SymbolKind::Constant => {}
                kind => {
                    return Err(CanonicalError::IllegalSymbol { name: s.name().to_string(), kind: kind.as_str() })
                }
            }
        }
        let l = lagrangian.to_ratfun()?;
        Ok(ModelDefinition { name: name.to_string(), table, lagrangian, l })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    /// The Lagrangian as written.
    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// The Lagrangian in canonical form.
    pub fn lagrangian_ratfun(&self) -> &RatFun {
        &self.l
    }

    pub fn coordinate_count(&self) -> usize {
        self.table.coordinate_count()
    }

    /// Parses an expression in this model's symbol table.
    pub fn parse(&self, text: &str) -> Result<RatFun, SymError> {
        parse_expr(text, &self.table)?.to_ratfun()
    }
}

#[derive(Clone, Debug)]
pub struct HessianReport {
    pub matrix: ExprMatrix,
    pub rank: usize,
    /// Coordinate indices whose velocities are solved for.
    pub expressible: Vec<usize>,
    /// Coordinate indices that become parameters.
    pub unexpressible: Vec<usize>,
    /// Polynomials that must not vanish for the generic rank to hold.
    pub side_conditions: Vec<RatFun>,
}

/// `A_ij = d^2 L / d dq_i d dq_j` with its generic rank and partition.
pub fn hessian(model: &ModelDefinition) -> HessianReport {
    let t = model.table();
    let n = t.coordinate_count();
    let first: Vec<RatFun> = (0..n).map(|i| model.l.derivative(t.velocity(i))).collect();
    let mut entries = Vec::with_capacity(n * n);
    for fi in &first {
        for j in 0..n {
            entries.push(fi.derivative(t.velocity(j)));
        }
    }
    let matrix = ExprMatrix::new(n, n, entries).expect("square by construction");
    let ech = matrix.echelon();
    let expressible = ech.pivot_columns.clone();
    let unexpressible = (0..n).filter(|i| !expressible.contains(i)).collect();
    let mut side_conditions: Vec<RatFun> = Vec::new();
    for p in &ech.pivots {
        for part in [p.numer(), p.denom()] {
            if part.is_constant() {
                continue;
            }
            let c = RatFun::from_poly(part.monic());
            if !side_conditions.contains(&c) {
                side_conditions.push(c);
            }
        }
    }
    HessianReport { matrix, rank: ech.rank, expressible, unexpressible, side_conditions }
}

/// `p_i = dL/d dq_i`, keyed by coordinate.
pub fn conjugate_momenta(model: &ModelDefinition) -> BTreeMap<Symbol, RatFun> {
    let t = model.table();
    (0..t.coordinate_count())
        .map(|i| (t.coordinate(i).clone(), model.l.derivative(t.velocity(i))))
        .collect()
}

/// Solves the expressible momentum relations for their velocities. The
/// result may still contain unexpressible velocities.
pub fn solve_velocities(
    model: &ModelDefinition,
    hessian: &HessianReport,
    momenta: &BTreeMap<Symbol, RatFun>,
) -> Result<BTreeMap<Symbol, RatFun>, CanonicalError> {
    let t = model.table();
    let equations: Vec<RatFun> = hessian
        .expressible
        .iter()
        .map(|&a| RatFun::symbol(t.momentum(a)).sub(&momenta[t.coordinate(a)]))
        .collect();
    let unknowns: Vec<Symbol> = hessian.expressible.iter().map(|&a| t.velocity(a).clone()).collect();
    let fail = |k: usize| CanonicalError::VelocitySolve { coordinate: t.coordinate(hessian.expressible[k]).name().to_string() };
    match solve_linear_ratfun(&equations, &unknowns) {
        Ok(LinearSolution::Unique(m)) => Ok(m),
        Ok(LinearSolution::Indeterminate { free, .. }) => {
            let k = unknowns.iter().position(|u| *u == free[0]).unwrap_or(0);
            Err(fail(k))
        }
        Err(SymError::Nonlinear { equation, .. }) | Err(SymError::Inconsistent(equation)) => Err(fail(equation)),
        Err(e) => Err(e.into()),
    }
}

fn velocity_free(t: &SymbolTable, e: &RatFun, quantity: &str) -> Result<(), CanonicalError> {
    for i in 0..t.coordinate_count() {
        let v = t.velocity(i);
        if e.contains_symbol(v) && !e.derivative(v).zero_test().is_zero() {
            return Err(CanonicalError::ResidualVelocity { quantity: quantity.to_string(), velocity: v.name().to_string() });
        }
    }
    Ok(())
}

/// `H_mu = -dL/d dq_mu` at the solved velocities, keyed by coordinate in
/// partition order.
pub fn h_mu_family(
    model: &ModelDefinition,
    hessian: &HessianReport,
    momenta: &BTreeMap<Symbol, RatFun>,
    velocities: &BTreeMap<Symbol, RatFun>,
) -> Result<Vec<(Symbol, RatFun)>, CanonicalError> {
    let t = model.table();
    hessian
        .unexpressible
        .iter()
        .map(|&mu| {
            let q = t.coordinate(mu);
            let h = momenta[q].substitute(velocities)?.neg();
            velocity_free(t, &h, &format!("H_{q}"))?;
            Ok((q.clone(), h))
        })
        .collect()
}

/// `H_0 = sum_a p_a W_a + sum_mu (-H_mu) dq_mu - L`, evaluated at the solved
/// velocities. The unexpressible velocities must cancel.
pub fn canonical_hamiltonian(
    model: &ModelDefinition,
    velocities: &BTreeMap<Symbol, RatFun>,
    h_mu: &[(Symbol, RatFun)],
) -> Result<RatFun, CanonicalError> {
    let t = model.table();
    let mut h0 = model.l.substitute(velocities)?.neg();
    for (v, w) in velocities {
        let q = t.get(v.link().expect("velocity has a coordinate")).expect("linked symbol exists");
        let p = t.momentum_of(q).expect("coordinate has a momentum");
        h0 = h0.add(&RatFun::symbol(p).mul(w));
    }
    for (q, h) in h_mu {
        let i = t.coordinate_index(q).expect("coordinate");
        h0 = h0.sub(&h.mul(&RatFun::symbol(t.velocity(i))));
    }
    velocity_free(t, &h0, "H_0")?;
    Ok(h0)
}

/// One Hamilton-Jacobi generator `H'_alpha = p_alpha + H_alpha`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub label: String,
    /// The parameter time `t_alpha`.
    pub time: Symbol,
    /// Its conjugate `p_alpha`.
    pub momentum: Symbol,
    /// `H_alpha`.
    pub h: RatFun,
    /// `H'_alpha`.
    pub full: RatFun,
}

/// Label of the generator attached to parameter time `t`.
pub fn generator_label(t: &Symbol) -> String {
    if t.kind() == SymbolKind::ParameterTime {
        "H'_0".to_string()
    } else {
        format!("H'_{}", t.name())
    }
}

#[derive(Clone, Debug)]
pub struct CanonicalSystem {
    pub model: ModelDefinition,
    pub hessian: HessianReport,
    /// `p_i = dL/d dq_i` in coordinates and velocities, keyed by coordinate.
    pub momenta: BTreeMap<Symbol, RatFun>,
    /// `W_a`, keyed by velocity symbol.
    pub solved_velocities: BTreeMap<Symbol, RatFun>,
    pub h0: RatFun,
    pub h_mu: Vec<(Symbol, RatFun)>,
    /// `H'_0` first, then one generator per unexpressible coordinate.
    pub generators: Vec<Generator>,
}

impl CanonicalSystem {
    pub fn table(&self) -> &SymbolTable {
        self.model.table()
    }

    /// `(tau, q_mu...)`.
    pub fn parameter_times(&self) -> Vec<Symbol> {
        self.generators.iter().map(|g| g.time.clone()).collect()
    }

    /// `(p_tau, p_mu...)`.
    pub fn parameter_momenta(&self) -> Vec<Symbol> {
        self.generators.iter().map(|g| g.momentum.clone()).collect()
    }

    /// Expressible canonical pairs `(q_a, p_a)`.
    pub fn expressible_pairs(&self) -> Vec<(Symbol, Symbol)> {
        let t = self.table();
        self.hessian.expressible.iter().map(|&a| (t.coordinate(a).clone(), t.momentum(a).clone())).collect()
    }

    pub fn generator(&self, time: &Symbol) -> Option<&Generator> {
        self.generators.iter().find(|g| g.time == *time)
    }
}

/// Runs the full canonical analysis.
pub fn build_hjpde_set(model: &ModelDefinition) -> Result<CanonicalSystem, CanonicalError> {
    let hessian = hessian(model);
    let momenta = conjugate_momenta(model);
    let solved_velocities = solve_velocities(model, &hessian, &momenta)?;
    let h_mu = h_mu_family(model, &hessian, &momenta, &solved_velocities)?;
    let h0 = canonical_hamiltonian(model, &solved_velocities, &h_mu)?;
    let t = model.table();
    let mut generators = Vec::with_capacity(h_mu.len() + 1);
    let mut push = |time: &Symbol, h: &RatFun| {
        let momentum = t.momentum_of(time).expect("parameter time has a momentum").clone();
        generators.push(Generator {
            label: generator_label(time),
            time: time.clone(),
            full: RatFun::symbol(&momentum).add(h),
            momentum,
            h: h.clone(),
        });
    };
    push(t.tau(), &h0);
    for (q, h) in &h_mu {
        push(q, h);
    }
    Ok(CanonicalSystem { model: model.clone(), hessian, momenta, solved_velocities, h0, h_mu, generators })
}

/// Side condition printed as an inequality.
pub fn nonvanishing(c: &RatFun) -> String {
    format!("{} != 0", Expr::from(c))
}
